"""Distributions of the unrestricted random walk at an Erlang horizon.

All quantities are computed for every number of stages left ``k = 1..L`` at
once, as arrays of shape ``(L, n)``; ``RandomWalk`` exposes them per ``k`` in
the caller's phase order. The walk starts at level 0: its laws only depend
on the displacement, so a start at ``a`` is a shift of the argument.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import (InvalidInitialDistribution, InvalidSubgenerator, ShapeMismatch,
                     SingularSystem, StageOutOfRange)
from .families import StageVectorFamily, block_conv, stage_conv, toeplitz_solve
from .model import ErlangClock, FluidModel
from .stage_matrices import (ReturnMatrices, record_generators, riccati_pair,
                             solve_stage_matrices)
from .toeplitz_expm import w_blocks


@dataclass(frozen=True, eq=False)
class SignProbabilities:
    """``h(k)``: up-phase start ends above 0; ``h_hat(k)``: down-phase start ends below 0."""

    h: StageVectorFamily
    h_hat: StageVectorFamily


def sign_probabilities(rm: ReturnMatrices) -> SignProbabilities:
    psi, psih = rm.psi.blocks, rm.psi_hat.blocks
    L = rm.L
    f = 1.0 - np.cumsum(psi.sum(axis=2), axis=0)
    fh = 1.0 - np.cumsum(psih.sum(axis=2), axis=0)
    try:
        h = toeplitz_solve(block_conv(psi, psih, L), f)
        hh = toeplitz_solve(block_conv(psih, psi, L), fh)
    except SingularSystem as exc:
        raise SingularSystem("I - Psi(0) Psi_hat(0) is singular; return matrices are corrupt") from exc
    return SignProbabilities(StageVectorFamily(h, "+"), StageVectorFamily(hh, "-"))


def link_residual(rm: ReturnMatrices, sp: SignProbabilities) -> float:
    """Largest violation of ``h_hat(k) = 1 - sum_n Psi_hat(n) h(k-n)`` and its mirror."""
    h, hh = sp.h.vectors, sp.h_hat.vectors
    e1 = np.abs(hh - (1.0 - stage_conv(rm.psi_hat.blocks, h))).max()
    e2 = np.abs(h - (1.0 - stage_conv(rm.psi.blocks, hh))).max()
    return float(max(e1, e2))


class RandomWalk:
    """Erlang-horizon laws of the level, its running minimum and maximum.

    Parameters
    ----------
    model, clock
        The fluid model and the Erlang horizon.
    method, epsilon, embed_k
        How the blocks of ``exp(U x)`` are computed; see
        :func:`fluidtime.toeplitz_expm.w_blocks`.
    """

    def __init__(self, model: FluidModel, clock: ErlangClock, method=None, epsilon=1e-8,
                 embed_k=None):
        self.model = model
        self.clock = clock
        self.rm = solve_stage_matrices(model, clock)
        self.rg = record_generators(model, clock, self.rm)
        self.sp = sign_probabilities(self.rm)
        self.method = method
        self.epsilon = epsilon
        self.embed_k = embed_k
        self._w = lru_cache(maxsize=2048)(self._w_blocks)
        self._what = lru_cache(maxsize=2048)(self._w_hat_blocks)
        self._ones_p = np.ones((clock.L, model.m_plus))
        self._ones_m = np.ones((clock.L, model.m_minus))

    @property
    def L(self) -> int:
        return self.clock.L

    @property
    def psi(self):
        return self.rm.psi.blocks

    @property
    def psi_hat(self):
        return self.rm.psi_hat.blocks

    def _w_blocks(self, x):
        return w_blocks(self.rg.u, x, self.method, self.epsilon, self.embed_k)

    def _w_hat_blocks(self, x):
        return w_blocks(self.rg.u_hat, x, self.method, self.epsilon, self.embed_k)

    def W(self, x: float) -> np.ndarray:
        """Blocks of ``exp(U x)``: first passage from ``x`` down to 0, by stage."""
        return self._w(float(x))

    def W_hat(self, x: float) -> np.ndarray:
        return self._what(float(x))

    # -- per-k public interface -------------------------------------------------
    def _pick(self, parts, k):
        if k is None:
            k = self.L
        if not 1 <= k <= self.L:
            raise StageOutOfRange(f"k must be in 1..{self.L}, got {k}")
        plus, minus = parts
        return self.model.to_user(plus[k - 1], minus[k - 1])

    def cdf(self, x, k=None):
        """``P[X(Y_k) <= x]`` for each initial phase."""
        return self._pick(self.cdf_parts(x), k)

    def min_cdf(self, x, k=None):
        """``P[min X <= x]`` over the horizon."""
        return self._pick(self.min_parts(x), k)

    def max_cdf(self, x, k=None):
        return self._pick(self.max_parts(x), k)

    def joint_min(self, x, y, k=None):
        """``P[min X <= x, X(Y_k) <= y]``."""
        return self._pick(self.joint_min_parts(x, y), k)

    def joint_max(self, x, y, k=None):
        """``P[max X <= x, X(Y_k) <= y]``."""
        return self._pick(self.joint_max_parts(x, y), k)

    def density(self, x, k=None):
        return self._pick(self.density_parts(x), k)

    # -- all-k internal forms ------------------------------------------------------
    def cdf_parts(self, x):
        x = float(x)
        h, hh = self.sp.h.vectors, self.sp.h_hat.vectors
        if x <= 0:
            rm = stage_conv(self.W(-x), hh)
            return stage_conv(self.psi, rm), rm
        rp = 1.0 - stage_conv(self.W_hat(x), h)
        return rp, 1.0 - stage_conv(self.psi_hat, 1.0 - rp)

    def min_parts(self, x):
        x = float(x)
        if x >= 0:
            return self._ones_p, self._ones_m
        em = stage_conv(self.W(-x), self._ones_m)
        return stage_conv(self.psi, em), em

    def max_parts(self, x):
        x = float(x)
        if x < 0:
            return 0 * self._ones_p, 0 * self._ones_m
        mp = 1.0 - stage_conv(self.W_hat(x), self._ones_p)
        return mp, 1.0 - stage_conv(self.psi_hat, 1.0 - mp)

    def joint_min_parts(self, x, y):
        x, y = float(x), float(y)
        if x >= 0:
            return self.cdf_parts(y)
        pm = stage_conv(self.W(-x), self.cdf_parts(y - x)[1])
        return stage_conv(self.psi, pm), pm

    def joint_max_parts(self, x, y):
        x, y = float(x), float(y)
        if x < 0 or y > x:
            return self.max_parts(x)
        rp, rm = self.cdf_parts(y)
        shifted = self.cdf_parts(y - x)[0]
        Wh = self.W_hat(x)
        pp = rp - stage_conv(Wh, shifted)
        pm = rm - stage_conv(block_conv(self.psi_hat, Wh, self.L), shifted)
        return pp, pm

    def density_parts(self, x):
        """Derivative in ``x`` of :meth:`cdf_parts`; right limit at ``x = 0``."""
        x = float(x)
        U, Uh = self.rg.u.blocks, self.rg.u_hat.blocks
        if x < 0:
            dm = -stage_conv(block_conv(U, self.W(-x), self.L), self.sp.h_hat.vectors)
            return stage_conv(self.psi, dm), dm
        dp = -stage_conv(block_conv(Uh, self.W_hat(x), self.L), self.sp.h.vectors)
        return dp, stage_conv(self.psi_hat, dp)

    def density_limits_at_zero(self):
        """One-sided densities ``(left, right)`` at 0, each of shape ``(L, m)`` in user order."""
        U, Uh = self.rg.u.blocks, self.rg.u_hat.blocks
        dm = -stage_conv(U, self.sp.h_hat.vectors)
        left = self.model.to_user(stage_conv(self.psi, dm), dm)
        dp = -stage_conv(Uh, self.sp.h.vectors)
        right = self.model.to_user(dp, stage_conv(self.psi_hat, dp))
        return left, right


class BilateralPhaseType:
    """Law of ``Y(Delta)`` for a transient fluid model ``(gamma, D, E)``.

    ``D`` is the subgenerator on the transient states, ``E`` the diagonal rate
    matrix (or its diagonal) and ``gamma`` the initial law, which must put no
    mass on the absorbing state.
    """

    def __init__(self, gamma, D, E):
        gamma = np.asarray(gamma, float).ravel()
        D = np.asarray(D, float)
        E = np.asarray(E, float)
        e = np.diag(E).copy() if E.ndim == 2 else E.ravel().copy()
        n = gamma.size
        if D.shape != (n, n) or e.size != n:
            raise ShapeMismatch("gamma, D and E do not conform")
        if (gamma < 0).any() or abs(gamma.sum() - 1.0) > 1e-12:
            raise InvalidInitialDistribution("gamma must be a probability vector on the transient states")
        if E.ndim == 2 and np.abs(E - np.diag(e)).max() > 0:
            raise ShapeMismatch("E must be diagonal")
        if (e == 0).any():
            raise InvalidSubgenerator("E has a zero diagonal entry")
        off = D - np.diag(np.diag(D))
        rows = D.sum(axis=1)
        if (off < 0).any() or (rows > 1e-12 * max(1.0, np.abs(D).max())).any():
            raise InvalidSubgenerator("D must have nonnegative off-diagonals and row sums <= 0")
        if not (rows < 0).any():
            raise InvalidSubgenerator("D has no exit to the absorbing state")
        up, dn = np.flatnonzero(e > 0), np.flatnonzero(e < 0)
        self.up, self.dn = up, dn
        Dpp, Dpm = D[np.ix_(up, up)], D[np.ix_(up, dn)]
        Dmp, Dmm = D[np.ix_(dn, up)], D[np.ix_(dn, dn)]
        ep, em = e[up], -e[dn]
        psi, psih = riccati_pair(Dpp, Dpm, Dmp, Dmm, ep, em)
        Cp, Cm = np.diag(1.0 / ep), np.diag(1.0 / em)
        self.psi, self.psi_hat = psi, psih
        self.U = Cm @ Dmm + Cm @ Dmp @ psi
        self.U_hat = Cp @ Dpp + Cp @ Dpm @ psih
        Ip, Im = np.eye(up.size), np.eye(dn.size)
        try:
            self.h = np.linalg.solve(Ip - psi @ psih, 1.0 - psi.sum(axis=1))
            self.h_hat = np.linalg.solve(Im - psih @ psi, 1.0 - psih.sum(axis=1))
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("I - Psi Psi_hat is singular") from exc
        gp, gm = gamma[up], gamma[dn]
        self.p_hat = gp @ psi + gm
        self.p = gp + gm @ psih
        # K-matrix form
        d = -D.sum(axis=1)
        self.K = Cp @ Dpp + psi @ Cm @ Dmp
        self.K_hat = Cm @ Dmm + psih @ Cp @ Dpm
        self._k_right = self.p @ np.linalg.inv(Ip - psi @ psih)
        self._k_right_vec = Cp @ d[up] + psi @ Cm @ d[dn]
        self._k_left = self.p_hat @ np.linalg.inv(Im - psih @ psi)
        self._k_left_vec = Cm @ d[dn] + psih @ Cp @ d[up]

    def pdf(self, x, form: str = "records") -> float:
        """Density at ``x``; the right limit is returned at ``x = 0``.

        ``form="records"`` uses the record-process generators, ``form="k"``
        the equivalent ``K``-matrix expressions.
        """
        x = float(x)
        if form == "records":
            if x < 0:
                return float(self.p_hat @ sla.expm(self.U * -x) @ (-self.U) @ self.h_hat)
            return float(self.p @ sla.expm(self.U_hat * x) @ (-self.U_hat) @ self.h)
        if form == "k":
            if x < 0:
                return float(self._k_left @ sla.expm(self.K_hat * -x) @ self._k_left_vec)
            return float(self._k_right @ sla.expm(self.K * x) @ self._k_right_vec)
        raise ValueError(f"unknown density form {form!r}")

    def cdf(self, x) -> float:
        x = float(x)
        if x <= 0:
            return float(self.p_hat @ sla.expm(self.U * -x) @ self.h_hat)
        return float(1.0 - self.p @ sla.expm(self.U_hat * x) @ self.h)

    def similarity_residual(self) -> float:
        """Max-norm of ``(I - Psi Psi_hat) U_hat - K (I - Psi Psi_hat)``."""
        M = np.eye(self.up.size) - self.psi @ self.psi_hat
        return float(np.abs(M @ self.U_hat - self.K @ M).max())


def bph_density(gamma, D, E, x, form: str = "records") -> float:
    return BilateralPhaseType(gamma, D, E).pdf(x, form)


def erlangized_bph(model: FluidModel, clock: ErlangClock, phase: int) -> BilateralPhaseType:
    """``X(T)`` as a BPH law, starting in user phase ``phase`` (0-based) at stage 0."""
    from .stage_matrices import erlangized_generator

    Q, e = erlangized_generator(model, clock)
    gamma = np.zeros(Q.shape[0])
    gamma[model.internal_index(phase)] = 1.0
    return BilateralPhaseType(gamma, Q, e)
