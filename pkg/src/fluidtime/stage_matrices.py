"""First-return matrices and record-process generators.

The infinite-horizon matrices solve a nonsymmetric algebraic Riccati equation

    T + P X + X S + X Q X = 0,

whose minimal nonnegative solution is found by Newton's method started at the
zero matrix. The stage-indexed matrices of the Erlangized model come from a
Riccati equation shifted by the clock rate (stage 0) followed by one Sylvester
equation per later stage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, ShapeMismatch, SingularSylvester
from .families import StageMatrixFamily
from .model import ErlangClock, FluidModel

RICCATI_TOL = 1e-14
MAX_ITER = 200


@dataclass(frozen=True, eq=False)
class ReturnMatrices:
    psi: StageMatrixFamily
    psi_hat: StageMatrixFamily
    psi_inf: np.ndarray
    psi_hat_inf: np.ndarray

    @property
    def L(self) -> int:
        return self.psi.L


@dataclass(frozen=True, eq=False)
class RecordGenerators:
    u: StageMatrixFamily
    u_hat: StageMatrixFamily


def solve_sylvester(A, B, R, check_spectra=False):
    """Solve ``A X + X B = R`` through the Kronecker (vectorised) form.

    Stage matrices are small, so the dense ``(pq) x (pq)`` system is cheap and
    one step of iterative refinement brings the residual to round-off level.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    R = np.asarray(R, float)
    p, q = R.shape
    if A.shape != (p, p) or B.shape != (q, q):
        raise ShapeMismatch(f"Sylvester shapes {A.shape}, {B.shape}, {R.shape} do not conform")
    if R.size == 0:
        return np.zeros_like(R)
    if check_spectra:
        ea = np.linalg.eigvals(A)
        eb = np.linalg.eigvals(B)
        gap = np.min(np.abs(ea[:, None] + eb[None, :]))
        scale = max(np.abs(A).max(), np.abs(B).max(), 1.0)
        if gap <= 1e-12 * scale:
            raise SingularSylvester(f"spectra of A and -B intersect (gap {gap:.3g})")
    K = np.kron(np.eye(q), A) + np.kron(B.T, np.eye(p))
    try:
        x = np.linalg.solve(K, R.ravel(order="F"))
        x += np.linalg.solve(K, R.ravel(order="F") - K @ x)
    except np.linalg.LinAlgError as exc:
        raise SingularSylvester("Kronecker system is singular") from exc
    return x.reshape((p, q), order="F")


def riccati_residual(X, P, S, Q, T):
    return T + P @ X + X @ S + X @ Q @ X


def solve_riccati(P, S, Q, T, tol=RICCATI_TOL, max_iter=MAX_ITER):
    """Minimal nonnegative solution of ``T + P X + X S + X Q X = 0``.

    Newton's iteration from ``X = 0`` increases monotonically to the minimal
    solution for the M-matrix equations met here. Should a step leave the
    nonnegative cone (which only rounding can cause), the routine switches to
    the linearly convergent fixed-point iteration ``P X + X S = -T - X Q X``.
    In the null-recurrent case Newton converges linearly, so iteration stops
    on the step size as well as on the residual.
    """
    P, S, Q, T = (np.asarray(M, float) for M in (P, S, Q, T))
    X = np.zeros_like(T)
    if X.size == 0:
        return X
    newton = True
    step = np.inf
    for _ in range(max_iter):
        res = np.abs(riccati_residual(X, P, S, Q, T)).max()
        if res <= tol and step <= tol:
            return X
        try:
            if newton:
                Xn = solve_sylvester(P + X @ Q, S + Q @ X, X @ Q @ X - T)
                if Xn.min() < -1e-12:
                    newton = False
                    continue
            else:
                Xn = solve_sylvester(P, S, -T - X @ Q @ X)
        except SingularSylvester:
            if res <= tol:
                return X
            raise
        Xn = np.maximum(Xn, 0.0)
        step = np.abs(Xn - X).max()
        X = Xn
    res = np.abs(riccati_residual(X, P, S, Q, T)).max()
    if res <= 10 * tol:
        return X
    raise NoConvergence(f"Riccati iteration stopped after {max_iter} steps, residual {res:.3g}")


def _coefficients(Dpp, Dpm, Dmp, Dmm, cp, cm):
    """Riccati coefficients ``(P, S, Q, T)`` for the up and down return matrices."""
    Cp = np.diag(1.0 / np.asarray(cp, float))
    Cm = np.diag(1.0 / np.asarray(cm, float))
    up = (Cp @ Dpp, Cm @ Dmm, Cm @ Dmp, Cp @ Dpm)
    down = (Cm @ Dmm, Cp @ Dpp, Cp @ Dpm, Cm @ Dmp)
    return up, down


def riccati_pair(Dpp, Dpm, Dmp, Dmm, cp, cm):
    """Return matrices ``(Psi, Psi_hat)`` for blocks of a (sub)generator.

    ``cp`` are the positive rates, ``cm`` the absolute values of the negative
    ones.
    """
    up, down = _coefficients(Dpp, Dpm, Dmp, Dmm, cp, cm)
    return solve_riccati(*up), solve_riccati(*down)


def solve_riccati_infinite(model: FluidModel):
    """Infinite-horizon first-return matrices ``(Psi, Psi_hat)``."""
    return riccati_pair(*model.blocks(), model.c_plus, model.c_minus_abs)


def solve_stage_matrices(model: FluidModel, clock: ErlangClock) -> ReturnMatrices:
    """Stage-indexed first-return matrices before the Erlang horizon."""
    nu, L = clock.nu, clock.L
    App, Apm, Amp, Amm = model.blocks()
    Ip, Im = np.eye(model.m_plus), np.eye(model.m_minus)
    Cp = np.diag(1.0 / model.c_plus)
    Cm = np.diag(1.0 / model.c_minus_abs)
    psi0, psih0 = riccati_pair(App - nu * Ip, Apm, Amp, Amm - nu * Im,
                               model.c_plus, model.c_minus_abs)
    Qm = Cm @ Amp
    Qp = Cp @ Apm
    P = Cp @ (App - nu * Ip)
    S = Cm @ (Amm - nu * Im)
    psi = np.zeros((L,) + psi0.shape)
    psih = np.zeros((L,) + psih0.shape)
    psi[0], psih[0] = psi0, psih0
    if L > 1:
        A1, B1 = P + psi0 @ Qm, S + Qm @ psi0
        Ah1, Bh1 = S + psih0 @ Qp, P + Qp @ psih0
        for k in range(1, L):
            R = -nu * (Cp @ psi[k - 1] + psi[k - 1] @ Cm)
            Rh = -nu * (Cm @ psih[k - 1] + psih[k - 1] @ Cp)
            for n in range(1, k):
                R -= psi[n] @ Qm @ psi[k - n]
                Rh -= psih[n] @ Qp @ psih[k - n]
            psi[k] = solve_sylvester(A1, B1, R, check_spectra=(k == 1))
            psih[k] = solve_sylvester(Ah1, Bh1, Rh, check_spectra=(k == 1))
    psi_inf, psih_inf = solve_riccati_infinite(model)
    return ReturnMatrices(StageMatrixFamily(psi, "+", "-"), StageMatrixFamily(psih, "-", "+"),
                          psi_inf, psih_inf)


def stage_residuals(model: FluidModel, clock: ErlangClock, rm: ReturnMatrices):
    """Max-norm residual of each defining equation, as ``(psi_res, psi_hat_res)`` arrays."""
    nu = clock.nu
    App, Apm, Amp, Amm = model.blocks()
    Ip, Im = np.eye(model.m_plus), np.eye(model.m_minus)
    Cp = np.diag(1.0 / model.c_plus)
    Cm = np.diag(1.0 / model.c_minus_abs)

    def residuals(X, Ppart, Spart, Qc, Tc, Cl, Cr):
        out = []
        for k in range(len(X)):
            R = X[k] @ Spart + Ppart @ X[k]
            for n in range(k + 1):
                R = R + X[n] @ Qc @ X[k - n]
            R = R + (Tc if k == 0 else nu * (Cl @ X[k - 1] + X[k - 1] @ Cr))
            out.append(np.abs(R).max() if R.size else 0.0)
        return np.array(out)

    r = residuals(rm.psi.blocks, Cp @ (App - nu * Ip), Cm @ (Amm - nu * Im), Cm @ Amp,
                  Cp @ Apm, Cp, Cm)
    rh = residuals(rm.psi_hat.blocks, Cm @ (Amm - nu * Im), Cp @ (App - nu * Ip), Cp @ Apm,
                   Cm @ Amp, Cm, Cp)
    return r, rh


def record_generators(model: FluidModel, clock: ErlangClock, rm: ReturnMatrices) -> RecordGenerators:
    nu, L = clock.nu, clock.L
    if rm.L != L or rm.psi.blocks.shape[1:] != (model.m_plus, model.m_minus):
        raise ShapeMismatch("return matrices do not match this model and clock")
    App, Apm, Amp, Amm = model.blocks()
    Cp = np.diag(1.0 / model.c_plus)
    Cm = np.diag(1.0 / model.c_minus_abs)
    Qm, Qp = Cm @ Amp, Cp @ Apm
    U = np.einsum("ij,kjl->kil", Qm, rm.psi.blocks)
    Uh = np.einsum("ij,kjl->kil", Qp, rm.psi_hat.blocks)
    U[0] += Cm @ (Amm - nu * np.eye(model.m_minus))
    Uh[0] += Cp @ (App - nu * np.eye(model.m_plus))
    if L > 1:
        U[1] += nu * Cm
        Uh[1] += nu * Cp
    return RecordGenerators(StageMatrixFamily(U, "-", "-"), StageMatrixFamily(Uh, "+", "+"))


def erlangized_generator(model: FluidModel, clock: ErlangClock):
    """Joint phase-and-stage subgenerator and rates, stage-major, internal phase order.

    The absorbing horizon state is dropped, so rows of the last stage lose
    mass at rate ``nu``.
    """
    L, nu = clock.L, clock.nu
    N = -nu * np.eye(L) + nu * np.eye(L, k=1)
    Q = np.kron(N, np.eye(model.m)) + np.kron(np.eye(L), model.A)
    return Q, np.tile(model.c, L)


def assembled_u(model: FluidModel, clock: ErlangClock, rm: ReturnMatrices):
    """Full ``Lm- x Lm-`` downward-record generator built from the Kronecker form."""
    L, p = clock.L, model.m_plus
    Q, _ = erlangized_generator(model, clock)
    plus = np.concatenate([l * model.m + np.arange(p) for l in range(L)])
    minus = np.concatenate([l * model.m + np.arange(p, model.m) for l in range(L)])
    Cinv = np.kron(np.eye(L), np.diag(1.0 / model.c_minus_abs))
    return Cinv @ Q[np.ix_(minus, minus)] + Cinv @ Q[np.ix_(minus, plus)] @ rm.psi.assemble()
