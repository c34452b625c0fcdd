import numpy as np
import pytest

from fluidtime.errors import (EmptyPhaseSet, InvalidHorizon, InvalidStages,
                              NonConservativeGenerator, NotIrreducible, ShapeMismatch, ZeroRate)
from fluidtime.model import build_model, erlang_clock, stationary_drift, stationary_vector


def test_phase_partition_and_user_order(calm):
    assert calm.plus_phases == (0, 2)
    assert calm.minus_phases == (1, 3)
    v = calm.to_user(np.array([10.0, 30.0]), np.array([20.0, 40.0]))
    np.testing.assert_array_equal(v, [10, 20, 30, 40])
    np.testing.assert_array_equal(calm.to_internal(v), [10, 30, 20, 40])
    assert calm.internal_index(1) == 2


def test_stationary_drift_is_slightly_positive(calm):
    alpha = stationary_vector(calm.generator)
    np.testing.assert_allclose(alpha, [0.4, 0.4, 0.1, 0.1], atol=1e-14)
    assert stationary_drift(calm) == pytest.approx(0.4, abs=1e-13)


def test_clock_rate_is_derived():
    ck = erlang_clock(10, 30)
    assert ck.nu == 3.0
    assert ck.variance == pytest.approx(100 / 30)


@pytest.mark.parametrize("A,c,exc", [
    ([[-1, 1], [1, -2]], [1, -1], NonConservativeGenerator),
    ([[1, -1], [1, -1]], [1, -1], NonConservativeGenerator),
    ([[-1, 1], [1, -1]], [1, 0], ZeroRate),
    ([[-1, 1], [1, -1]], [1, 2], EmptyPhaseSet),
    ([[-1, 1, 0], [1, -1, 0], [0, 0, 0]], [1, -1, 1], NotIrreducible),
    ([[-1, 1], [1, -1]], [1, -1, 2], ShapeMismatch),
    ([[-1, 1, 0], [1, -1, 0]], [1, -1], ShapeMismatch),
])
def test_invalid_models(A, c, exc):
    with pytest.raises(exc):
        build_model(A, c)


def test_row_sum_tolerance_is_relative():
    build_model([[-1e6, 1e6], [1.0, -1.0 - 1e-7]], [1.0, -1.0])  # within 1e-12 * max|A|


@pytest.mark.parametrize("theta,L,exc", [(0, 3, InvalidHorizon), (-1, 3, InvalidHorizon),
                                         (np.inf, 3, InvalidHorizon), (1, 0, InvalidStages),
                                         (1, 2.5, InvalidStages)])
def test_invalid_clock(theta, L, exc):
    with pytest.raises(exc):
        erlang_clock(theta, L)


def test_model_arrays_are_frozen(sym):
    with pytest.raises(ValueError):
        sym.generator[0, 0] = 3.0
