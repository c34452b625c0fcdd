import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from fluidtime.model import build_model, erlang_clock, symmetric_model
from fluidtime.stage_matrices import (assembled_u, erlangized_generator, record_generators,
                                      riccati_pair, solve_riccati, solve_riccati_infinite,
                                      solve_stage_matrices, solve_sylvester, stage_residuals)
from fluidtime.errors import SingularSylvester

from conftest import random_clock, random_model, schur_return_matrix


def test_sylvester_against_scipy():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(3, 3)) - 4 * np.eye(3)
    B = rng.normal(size=(2, 2)) - 4 * np.eye(2)
    R = rng.normal(size=(3, 2))
    np.testing.assert_allclose(solve_sylvester(A, B, R), sla.solve_sylvester(A, B, R), atol=1e-13)


def test_sylvester_detects_shared_spectrum():
    with pytest.raises(SingularSylvester):
        solve_sylvester(np.eye(2), -np.eye(2), np.ones((2, 2)), check_spectra=True)


def test_scalar_riccati_root():
    # the scalar equation is 1 - 3x + 2x^2 = 0 with roots 1/2 and 1
    psi, psih = solve_riccati_infinite(build_model([[-1, 1], [2, -2]], [1, -1]))
    assert psi[0, 0] == pytest.approx(0.5, abs=1e-14)
    assert psih[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_null_recurrent_case_reaches_one(sym):
    psi, psih = solve_riccati_infinite(sym)
    assert psi[0, 0] == pytest.approx(1.0, abs=1e-7)
    assert psih[0, 0] == pytest.approx(1.0, abs=1e-7)


def test_symmetric_closed_form_stage_zero(sym):
    rm = solve_stage_matrices(sym, erlang_clock(1.0, 1))
    assert rm.psi[0][0, 0] == pytest.approx(2 - np.sqrt(3), abs=1e-15)


@pytest.mark.parametrize("L", [1, 2, 5, 10, 30])
def test_calm_excited_residuals(calm, L):
    ck = erlang_clock(10, L)
    rm = solve_stage_matrices(calm, ck)
    r, rh = stage_residuals(calm, ck, rm)
    assert max(r.max(), rh.max()) <= 1e-13


@pytest.mark.parametrize("L", [1, 3, 6])
def test_stage_matrices_match_erlangized_invariant_subspace(calm, L):
    ck = erlang_clock(10, L)
    rm = solve_stage_matrices(calm, ck)
    Q, e = erlangized_generator(calm, ck)
    X = schur_return_matrix(Q, e)
    # up-rows of stage 0 against the down-columns of every stage
    mp, mm = calm.m_plus, calm.m_minus
    for n in range(L):
        np.testing.assert_allclose(X[:mp, n * mm:(n + 1) * mm], rm.psi[n], atol=1e-12)
    Xh = schur_return_matrix(Q, -e)
    for n in range(L):
        np.testing.assert_allclose(Xh[:mm, n * mp:(n + 1) * mp], rm.psi_hat[n], atol=1e-12)


def test_record_generators_match_assembled_form(calm):
    ck = erlang_clock(10, 4)
    rm = solve_stage_matrices(calm, ck)
    rg = record_generators(calm, ck, rm)
    np.testing.assert_allclose(rg.u.assemble(), assembled_u(calm, ck, rm), atol=1e-13)


def test_riccati_pair_recovers_minimal_solution_on_transient_model():
    rng = np.random.default_rng(11)
    D = rng.uniform(0, 1, (4, 4))
    np.fill_diagonal(D, 0)
    np.fill_diagonal(D, -D.sum(1) - 0.3)
    e = np.array([1.0, -2.0, 3.0, -0.5])
    up, dn = [0, 2], [1, 3]
    psi, _ = riccati_pair(D[np.ix_(up, up)], D[np.ix_(up, dn)], D[np.ix_(dn, up)],
                          D[np.ix_(dn, dn)], e[up], -e[dn])
    np.testing.assert_allclose(psi, schur_return_matrix(D, e), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_models_stage_families(seed):
    model, ck = random_model(seed), random_clock(seed)
    rm = solve_stage_matrices(model, ck)
    r, rh = stage_residuals(model, ck, rm)
    assert max(r.max(), rh.max()) <= 1e-11
    for fam in (rm.psi, rm.psi_hat):
        assert fam.blocks.min() >= 0
        assert (fam.row_sums() <= 1 + 1e-12).all()
    # total over stages never exceeds the unrestricted return probabilities
    assert (rm.psi.blocks.sum(0) <= rm.psi_inf + 1e-10).all()
