import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluidtime.errors import InvalidEmbedding, NegativeDisplacement, NegativeEntries, QueryError
from fluidtime.families import block_conv
from fluidtime.model import erlang_clock
from fluidtime.stage_matrices import record_generators, solve_stage_matrices
from fluidtime.toeplitz_expm import (w_blocks, w_blocks_direct, w_blocks_embedding,
                                     w_blocks_epsilon_circulant)

from conftest import random_clock, random_model


def generators(model, theta, L):
    ck = erlang_clock(theta, L)
    return record_generators(model, ck, solve_stage_matrices(model, ck))


def test_scalar_closed_form(sym):
    U = generators(sym, 1.0, 1).u
    for x in (0.0, 0.3, 2.0):
        assert w_blocks_direct(U, x)[0, 0, 0] == pytest.approx(np.exp(-np.sqrt(3) * x), rel=1e-13)


def test_zero_displacement_is_identity(calm):
    W = w_blocks_direct(generators(calm, 10, 4).u, 0.0)
    np.testing.assert_array_equal(W[0], np.eye(2))
    assert not W[1:].any()


@pytest.mark.parametrize("L", [2, 5, 10])
def test_methods_agree_on_calm_excited(calm, L):
    U = generators(calm, 10, L).u
    for x in (0.5, 1.0, 5.0):
        ref = w_blocks_direct(U, x)
        assert np.abs(w_blocks_epsilon_circulant(U, x, 1e-8) - ref).max() <= 1e-8
        assert np.abs(w_blocks_embedding(U, x, 8 * L) - ref).max() <= 1e-8


def test_epsilon_bias_halves(calm):
    # bias-dominated regime; at epsilon ~ 1e-8 round-off dominates for L = 5
    U = generators(calm, 10, 5).u
    for x in (0.5, 1.0, 5.0):
        ref = w_blocks_direct(U, x)
        e1 = np.abs(w_blocks_epsilon_circulant(U, x, 1e-4) - ref).max()
        e2 = np.abs(w_blocks_epsilon_circulant(U, x, 5e-5) - ref).max()
        assert 0.3 <= e2 / e1 <= 0.7


def test_epsilon_error_estimate_is_an_upper_bound(calm):
    U = generators(calm, 10, 5).u
    W, est = w_blocks_epsilon_circulant(U, 1.0, 1e-6, return_error=True)
    assert np.abs(W - w_blocks_direct(U, 1.0)).max() <= est


def test_embedding_on_symmetric_model(sym):
    L = 5
    U = generators(sym, 5.0, L).u
    ref = w_blocks_direct(U, 1.0)
    gaps = [np.abs(w_blocks_embedding(U, 1.0, K) - ref).max() for K in (L, 2 * L, 4 * L, 8 * L)]
    assert gaps[2] <= 1e-8
    # strict decrease until the round-off floor
    for a, b in zip(gaps, gaps[1:]):
        assert b < a or b <= 1e-14


def test_dispatch_and_errors(calm):
    U = generators(calm, 10, 3).u
    ref = w_blocks(U, 1.0)
    np.testing.assert_allclose(w_blocks(U, 1.0, "eps-circulant"), ref, atol=1e-8)
    with pytest.raises(NegativeDisplacement):
        w_blocks(U, -1.0)
    with pytest.raises(InvalidEmbedding):
        w_blocks_embedding(U, 1.0, K=2)
    with pytest.raises(QueryError):
        w_blocks(U, 1.0, "taylor")
    with pytest.raises(QueryError):
        w_blocks_epsilon_circulant(U, 1.0, epsilon=0.0)


def test_negative_entries_are_reported():
    B = np.zeros((2, 2, 2))
    B[0] = [[-1.0, -1.0], [0.0, -1.0]]
    with pytest.raises(NegativeEntries):
        w_blocks_direct(B, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_semigroup(seed, x, y):
    model, ck = random_model(seed), random_clock(seed)
    U = record_generators(model, ck, solve_stage_matrices(model, ck)).u
    Wx, Wy, Wxy = (w_blocks_direct(U, v) for v in (x, y, x + y))
    np.testing.assert_allclose(block_conv(Wx, Wy), Wxy, atol=1e-10)
    assert Wxy.min() >= 0
    assert (Wxy.sum(axis=(0, 2)) <= 1 + 1e-12).all()
