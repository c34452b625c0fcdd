import numpy as np
import pytest
import scipy.linalg as sla

from fluidtime.model import build_model, calm_excited_model, erlang_clock, symmetric_model


@pytest.fixture(scope="session")
def sym():
    return symmetric_model()


@pytest.fixture(scope="session")
def calm():
    return calm_excited_model()


def random_model(seed, m_max=6):
    """Random irreducible model with both rate signs; a ring of positive rates keeps it connected."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, m_max + 1))
    A = rng.uniform(0.0, 3.0, (m, m)) * (rng.random((m, m)) < 0.6)
    for i in range(m):
        A[i, (i + 1) % m] = max(A[i, (i + 1) % m], rng.uniform(0.2, 2.0))
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, -A.sum(axis=1))
    c = rng.uniform(0.3, 5.0, m) * rng.choice([-1.0, 1.0], m)
    c[0], c[1] = abs(c[0]), -abs(c[1])
    rng.shuffle(c)
    return build_model(A, c)


def random_clock(seed):
    rng = np.random.default_rng(seed + 10_000)
    return erlang_clock(float(rng.uniform(0.5, 20.0)), int(rng.integers(1, 7)))


def schur_return_matrix(D, e):
    """Up-to-down return matrix of a transient fluid model from an invariant subspace.

    Columns ``[X; I]`` span the invariant subspace of
    ``H = [[C+^-1 D++, C+^-1 D+-], [-|C-|^-1 D-+, -|C-|^-1 D--]]`` that belongs
    to its eigenvalues with positive real part.
    """
    D = np.asarray(D, float)
    e = np.asarray(e, float)
    up, dn = np.flatnonzero(e > 0), np.flatnonzero(e < 0)
    Cp, Cm = np.diag(1 / e[up]), np.diag(1 / np.abs(e[dn]))
    H = np.block([[Cp @ D[np.ix_(up, up)], Cp @ D[np.ix_(up, dn)]],
                  [-Cm @ D[np.ix_(dn, up)], -Cm @ D[np.ix_(dn, dn)]]])
    T, Z, sdim = sla.schur(H, output="real", sort="rhp")
    assert sdim == dn.size
    Y = Z[:, :sdim]
    return np.linalg.solve(Y[up.size:].T, Y[:up.size].T).T
