import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluidtime.errors import InvalidLevels
from fluidtime.families import block_conv
from fluidtime.model import erlang_clock
from fluidtime.queue_dist import FluidQueue, boundary_exit

from conftest import random_clock, random_model

S3 = np.sqrt(3.0)


@pytest.fixture(scope="module")
def calm_queue(calm):
    return FluidQueue(model=calm, clock=erlang_clock(10.0, 4))


def test_boundary_exit_closed_form():
    ups = boundary_exit([[-1.0]], [[1.0]], 1.0, 6)
    np.testing.assert_allclose(ups[:, 0, 0], 2.0 ** -(np.arange(6) + 1), atol=1e-15)


def test_boundary_exit_mass(calm):
    # leaving 0 within the horizon plus staying there adds up to one
    q = FluidQueue(model=calm, clock=erlang_clock(10.0, 6))
    np.testing.assert_allclose(q.upsilon.sum(axis=(0, 2)) + q.stay[-1], 1.0, atol=1e-14)


def test_scalar_atom_at_zero(sym):
    # from the empty queue: q- = 1/2 + q+/2 and q+ = psi q- with psi = 2 - sqrt(3)
    q = FluidQueue(model=sym, clock=erlang_clock(1.0, 1))
    up, down = q.cdf(0.0, 0.0)
    assert down == pytest.approx(1 / S3, abs=1e-14)
    assert up == pytest.approx((2 - S3) / S3, abs=1e-14)


def test_two_boundary_renewal_identities(calm_queue):
    q = calm_queue
    L = q.L
    for x in (0.3, 2.0, 7.5):
        tb = q.two_boundary(x)
        W, Wh = q.walk.W(x), q.walk.W_hat(x)
        psi, psih = q.psi, q.psi_hat
        np.testing.assert_allclose(tb.lam + block_conv(block_conv(tb.psi_x, psih, L), Wh, L), Wh, atol=1e-13)
        np.testing.assert_allclose(tb.psi_x + block_conv(block_conv(tb.lam, psi, L), W, L), psi, atol=1e-13)
        np.testing.assert_allclose(tb.lam_hat + block_conv(block_conv(tb.psi_hat_x, psi, L), W, L), W, atol=1e-13)
        np.testing.assert_allclose(tb.psi_hat_x + block_conv(block_conv(tb.lam_hat, psih, L), Wh, L), psih, atol=1e-13)
        for M in (tb.lam, tb.psi_x, tb.lam_hat, tb.psi_hat_x):
            assert M.min() >= -1e-14


def test_wide_band_recovers_return_matrices(calm_queue):
    tb = calm_queue.two_boundary(300.0)
    np.testing.assert_allclose(tb.psi_x, calm_queue.psi, atol=1e-12)
    np.testing.assert_allclose(tb.lam, 0.0, atol=1e-12)


def test_band_validation(calm_queue):
    with pytest.raises(InvalidLevels):
        calm_queue.two_boundary(0.0)
    with pytest.raises(InvalidLevels):
        calm_queue.cdf(-1.0, 2.0)
    with pytest.raises(InvalidLevels):
        calm_queue.cdf(1.0, -2.0)


def test_queue_orderings(calm_queue):
    q, w = calm_queue, calm_queue.walk
    for a in (0.0, 1.0, 4.0):
        xs = np.linspace(0, 30, 16)
        cdf = np.array([q.cdf(a, x) for x in xs])
        assert (np.diff(cdf, axis=0) >= -1e-14).all()
        np.testing.assert_allclose(q.cdf(a, 600.0), 1.0, atol=1e-12)
        for x in xs:
            # Z dominates the walk started at a, pathwise
            assert (q.cdf(a, x) <= w.cdf(x - a) + 1e-13).all()
            assert (q.max_cdf(a, x) <= q.cdf(a, x) + 1e-13).all()
            assert (q.max_cdf(a, x) <= w.max_cdf(x - a) + 1e-13).all()
            assert (q.cdf(a, x) <= q.min_cdf(a, x) + 1e-13).all()
            assert (q.taboo_cdf(a, x) <= q.cdf(a, x) + 1e-13).all()
        np.testing.assert_allclose(q.max_cdf(a, 800.0), 1.0, atol=1e-12)


def test_minimum_reduces_to_walk(calm_queue):
    q, w = calm_queue, calm_queue.walk
    np.testing.assert_array_equal(q.min_cdf(2.0, 0.5), w.min_cdf(-1.5))
    np.testing.assert_array_equal(q.min_cdf(2.0, 2.0), 1.0)


def test_empty_start_maximum(calm, calm_queue):
    # from 0 in a down phase, max = 0 means the queue never left 0
    d = calm_queue.max_cdf(0.0, 0.0)
    for phase in calm.minus_phases:
        j = calm.minus_phases.index(phase)
        assert d[phase] == pytest.approx(calm_queue.stay[-1][j], abs=1e-15)
    for phase in calm.plus_phases:
        assert d[phase] == 0.0


def test_joint_reductions(calm_queue):
    q = calm_queue
    for a in (0.0, 1.5):
        np.testing.assert_allclose(q.joint_max(a, 3.0, 700.0), q.max_cdf(a, 3.0), atol=1e-12)
        np.testing.assert_allclose(q.joint_max(a, 3.0, 3.0), q.max_cdf(a, 3.0), atol=1e-12)
        np.testing.assert_allclose(q.joint_min(a, 0.5, 700.0), q.min_cdf(a, 0.5), atol=1e-12)
        if a > 0:
            np.testing.assert_array_equal(q.joint_max(a, a - 0.1, 2.0), 0.0)
        for x, y in [(2.0, 1.0), (5.0, 0.0), (a + 0.5, 0.2)]:
            j = q.joint_max(a, x, y)
            assert (j >= -1e-14).all()
            assert (j <= q.max_cdf(a, x) + 1e-13).all() and (j <= q.cdf(a, y) + 1e-13).all()
        for x, y in [(0.2, 1.0), (1.0, 4.0)]:
            j = q.joint_min(a, x, y)
            assert (j <= q.min_cdf(a, x) + 1e-13).all() and (j <= q.cdf(a, y) + 1e-13).all()


def test_maximum_continuity_at_start_level(calm_queue):
    # the x == a branch agrees with the general branch just above it
    q = calm_queue
    np.testing.assert_allclose(q.max_cdf(1.0, 1.0), q.max_cdf(1.0, 1.0 + 1e-9), atol=1e-7)
    np.testing.assert_allclose(q.joint_max(1.0, 1.0, 2.0), q.joint_max(1.0, 1.0 + 1e-9, 2.0), atol=1e-7)
    np.testing.assert_allclose(q.max_cdf(0.0, 0.0), q.max_cdf(0.0, 1e-9), atol=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 3.0), st.floats(0.0, 5.0))
def test_random_models(seed, a, x):
    model, ck = random_model(seed), random_clock(seed)
    q = FluidQueue(model=model, clock=ck)
    c = q.cdf(a, x)
    assert ((c >= -1e-12) & (c <= 1 + 1e-12)).all()
    assert (q.max_cdf(a, x) <= c + 1e-12).all()
    assert (q.cdf(a, x + 1.0) >= c - 1e-12).all()
    if x > 0:
        tb = q.two_boundary(x)
        assert (tb.lam.sum(axis=(0, 2)) + tb.psi_x.sum(axis=(0, 2)) <= 1 + 1e-12).all()


def test_scalar_chain_from_empty_queue(sym):
    # L = 1, nu = 1, start empty in the up phase, x = 1. Scalar pieces:
    # psi = 2 - sqrt(3), h = 1/(1 + psi), W_1 = exp(-sqrt(3)), idle exit 1/2, stay 1/2.
    psi = 2 - S3
    h = 1 / (1 + psi)
    e = np.exp(-S3)
    r_up, r_down = 1 - e * h, 1 - psi * e * h
    g_up = r_up - psi * r_down
    q_up = (g_up + psi / 2) / (1 - psi / 2)  # q+ = g+ + psi q-,  q- = 1/2 + q+/2
    q = FluidQueue(model=sym, clock=erlang_clock(1.0, 1))
    assert q.taboo_cdf(0.0, 1.0)[0] == pytest.approx(g_up, abs=1e-14)
    assert q.cdf(0.0, 1.0)[0] == pytest.approx(q_up, abs=1e-14)
    assert q.cdf(0.0, 1.0)[1] == pytest.approx(0.5 + q_up / 2, abs=1e-14)
