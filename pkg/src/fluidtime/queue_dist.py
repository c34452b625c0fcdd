"""Erlang-horizon laws of the fluid queue (the walk reflected at 0).

The queue shares the walk's first-return matrices and ``exp(U x)`` blocks,
and adds two ingredients: the law of the exit time from the empty state
(``Upsilon``) and the stage-indexed matrices for a band ``[0, x]`` with two
absorbing levels.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidLevels, SingularSystem, StageOutOfRange
from .families import block_conv, stage_conv, toeplitz_solve
from .rw_dist import RandomWalk


@dataclass(frozen=True, eq=False)
class TwoBoundaryMatrices:
    """First passage from a boundary of ``[0, x]`` to either boundary, by stage.

    ``lam[k]``: up-phase start at 0, hits ``x`` first (``+ x +``).
    ``psi_x[k]``: up-phase start at 0, returns to 0 first (``+ x -``).
    ``lam_hat[k]``: down-phase start at ``x``, hits 0 first (``- x -``).
    ``psi_hat_x[k]``: down-phase start at ``x``, returns to ``x`` first (``- x +``).
    """

    x: float
    lam: np.ndarray
    psi_x: np.ndarray
    lam_hat: np.ndarray
    psi_hat_x: np.ndarray


def boundary_exit(A_mm, A_mp, nu: float, L: int) -> np.ndarray:
    """``Upsilon[n] = nu^n (nu I - A--)^{-(n+1)} A-+``: leave 0 after ``n`` stage changes."""
    A_mm = np.asarray(A_mm, float)
    G = np.linalg.inv(nu * np.eye(A_mm.shape[0]) - A_mm)
    out = np.zeros((L,) + np.shape(A_mp))
    out[0] = G @ A_mp
    for n in range(1, L):
        out[n] = nu * G @ out[n - 1]
    return out


def two_boundary_blocks(psi, psi_hat, W, W_hat, x: float = 0.0) -> TwoBoundaryMatrices:
    """Solve the first-passage equations of the band stage by stage.

    Writing ``R = Psi * W`` and ``P = Psi_hat * W_hat`` (block convolutions),
    a path that does not reach the far boundary before returning is a
    first-return path minus the ones that did; conditioning on the first
    visit to the far side gives, for each stage ``k``, a pair of linear
    equations whose only unknown-coupling is through ``R[0]`` and ``P[0]``.
    """
    L = psi.shape[0]
    R = block_conv(psi, W, L)
    P = block_conv(psi_hat, W_hat, L)
    Om, Omh = R[0], P[0]
    mp, mm = psi.shape[1], psi.shape[2]
    try:
        inv_m = np.linalg.inv(np.eye(mm) - Omh @ Om)
        inv_p = np.linalg.inv(np.eye(mp) - Om @ Omh)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"band [0, {x}] has a singular return system") from exc
    lam = np.zeros((L, mp, mp))
    psx = np.zeros((L, mp, mm))
    lamh = np.zeros((L, mm, mm))
    pshx = np.zeros((L, mm, mp))
    for k in range(L):
        a, b = W_hat[k].copy(), psi[k].copy()
        ah, bh = W[k].copy(), psi_hat[k].copy()
        for j in range(k):
            a -= psx[j] @ P[k - j]
            b -= lam[j] @ R[k - j]
            ah -= pshx[j] @ R[k - j]
            bh -= lamh[j] @ P[k - j]
        psx[k] = (b - a @ Om) @ inv_m
        lam[k] = a - psx[k] @ Omh
        pshx[k] = (bh - ah @ Omh) @ inv_p
        lamh[k] = ah - pshx[k] @ Om
    return TwoBoundaryMatrices(float(x), lam, psx, lamh, pshx)


class FluidQueue:
    """Distributions of the queue, its minimum and its maximum at the Erlang horizon.

    Built on a :class:`RandomWalk` (or the arguments for one). ``a`` is the
    initial level throughout.
    """

    def __init__(self, walk: RandomWalk | None = None, model=None, clock=None, **kw):
        if walk is None:
            walk = RandomWalk(model, clock, **kw)
        self.walk = walk
        self.model = walk.model
        self.clock = walk.clock
        L = self.L
        _, _, Amp, Amm = self.model.blocks()
        self.upsilon = boundary_exit(Amm, Amp, self.clock.nu, L)
        # stay at 0 through k stages: 1 - sum_{l<k} Upsilon[l] 1
        self.stay = 1.0 - np.cumsum(self.upsilon.sum(axis=2), axis=0)
        self._ones_p = np.ones((L, self.model.m_plus))
        self._ones_m = np.ones((L, self.model.m_minus))
        self.two_boundary = lru_cache(maxsize=1024)(self._two_boundary)
        self._q = lru_cache(maxsize=4096)(self._queue_parts)
        self._dbar = lru_cache(maxsize=1024)(self._max_complement)

    @property
    def L(self) -> int:
        return self.clock.L

    @property
    def psi(self):
        return self.walk.psi

    @property
    def psi_hat(self):
        return self.walk.psi_hat

    def _two_boundary(self, x):
        if not x > 0:
            raise InvalidLevels(f"band width must be > 0, got {x}")
        return two_boundary_blocks(self.psi, self.psi_hat, self.walk.W(x), self.walk.W_hat(x), x)

    def _pick(self, parts, k):
        if k is None:
            k = self.L
        if not 1 <= k <= self.L:
            raise StageOutOfRange(f"k must be in 1..{self.L}, got {k}")
        return self.model.to_user(parts[0][k - 1], parts[1][k - 1])

    @staticmethod
    def _check(a, x=None):
        if not a >= 0:
            raise InvalidLevels(f"initial level must be >= 0, got {a}")
        if x is not None and not x >= 0:
            raise InvalidLevels(f"level must be >= 0, got {x}")

    # -- public, per k ---------------------------------------------------------
    def taboo_cdf(self, a, x, k=None):
        """``P[Q(Y_k) <= x, no visit to 0 before Y_k]`` from level ``a``."""
        return self._pick(self.taboo_parts(a, x), k)

    def cdf(self, a, x, k=None):
        """``P[Q(Y_k) <= x]`` from level ``a``; at ``x = 0`` this is the atom at 0."""
        return self._pick(self.cdf_parts(a, x), k)

    def min_cdf(self, a, x, k=None):
        return self._pick(self.min_parts(a, x), k)

    def max_cdf(self, a, x, k=None):
        return self._pick(self.max_parts(a, x), k)

    def joint_min(self, a, x, y, k=None):
        """``P[min Q <= x, Q(Y_k) <= y]``."""
        return self._pick(self.joint_min_parts(a, x, y), k)

    def joint_max(self, a, x, y, k=None):
        """``P[max Q <= x, Q(Y_k) <= y]``."""
        return self._pick(self.joint_max_parts(a, x, y), k)

    # -- all-k internal forms ----------------------------------------------------
    def taboo_parts(self, a, x):
        a, x = float(a), float(x)
        self._check(a, x)
        Wa = self.walk.W(a)
        rp_s, rm_s = self.walk.cdf_parts(x - a)
        rm_x = self.walk.cdf_parts(x)[1]
        gp = rp_s - stage_conv(block_conv(self.psi, Wa, self.L), rm_x)
        gm = rm_s - stage_conv(Wa, rm_x)
        return gp, gm

    def cdf_parts(self, a, x):
        a, x = float(a), float(x)
        self._check(a, x)
        return self._q(a, x)

    def _queue_parts(self, a, x):
        if a == 0:
            gp = self.taboo_parts(0.0, x)[0]
            f = gp + stage_conv(self.psi, self.stay)
            qp = toeplitz_solve(block_conv(self.psi, self.upsilon, self.L), f)
            return qp, self.stay + stage_conv(self.upsilon, qp)
        q0m = self._q(0.0, x)[1]
        gp, gm = self.taboo_parts(a, x)
        Wa = self.walk.W(a)
        return (gp + stage_conv(block_conv(self.psi, Wa, self.L), q0m),
                gm + stage_conv(Wa, q0m))

    def min_parts(self, a, x):
        a, x = float(a), float(x)
        self._check(a, x)
        if x >= a:
            return self._ones_p, self._ones_m
        return self.walk.min_parts(x - a)

    def _max_complement(self, a, x):
        """``P[max Q > x]`` as ``(+, -)`` parts, for ``x >= a``."""
        if a == 0:
            if x == 0:
                return self._ones_p, 1.0 - self.stay
            tb = self.two_boundary(x)
            dp = toeplitz_solve(block_conv(tb.psi_x, self.upsilon, self.L),
                                stage_conv(tb.lam, self._ones_p))
            return dp, stage_conv(self.upsilon, dp)
        d0m = self._dbar(0.0, x)[1]
        tb_a = self.two_boundary(a)
        if x == a:
            dp = self._ones_p
        else:
            tb = self.two_boundary(x - a)
            f = (stage_conv(tb.lam, self._ones_p)
                 + stage_conv(block_conv(tb.psi_x, tb_a.lam_hat, self.L), d0m))
            dp = toeplitz_solve(block_conv(tb.psi_x, tb_a.psi_hat_x, self.L), f)
        dm = stage_conv(tb_a.psi_hat_x, dp) + stage_conv(tb_a.lam_hat, d0m)
        return dp, dm

    def max_parts(self, a, x):
        a, x = float(a), float(x)
        self._check(a, x)
        if x < a:
            return 0 * self._ones_p, 0 * self._ones_m
        dp, dm = self._dbar(a, x)
        return 1.0 - dp, 1.0 - dm

    def joint_min_parts(self, a, x, y):
        a, x, y = float(a), float(x), float(y)
        self._check(a, x)
        self._check(0.0, y)
        if x >= a:
            return self.cdf_parts(a, y)
        pm = stage_conv(self.walk.W(a - x), self.cdf_parts(x, y)[1])
        return stage_conv(self.psi, pm), pm

    def _exceed_joint(self, a, x, y):
        """``P[max Q > x, Q(Y_k) <= y]`` for ``x >= a``."""
        if a == 0:
            qp = self.cdf_parts(x, y)[0]
            if x == 0:
                Qp = qp
            else:
                tb = self.two_boundary(x)
                Qp = toeplitz_solve(block_conv(tb.psi_x, self.upsilon, self.L),
                                    stage_conv(tb.lam, qp))
            return Qp, stage_conv(self.upsilon, Qp)
        Q0m = self._exceed_joint(0.0, x, y)[1]
        tb_a = self.two_boundary(a)
        if x == a:
            Qp = self.cdf_parts(a, y)[0]
        else:
            tb = self.two_boundary(x - a)
            f = (stage_conv(tb.lam, self.cdf_parts(x, y)[0])
                 + stage_conv(block_conv(tb.psi_x, tb_a.lam_hat, self.L), Q0m))
            Qp = toeplitz_solve(block_conv(tb.psi_x, tb_a.psi_hat_x, self.L), f)
        return Qp, stage_conv(tb_a.psi_hat_x, Qp) + stage_conv(tb_a.lam_hat, Q0m)

    def joint_max_parts(self, a, x, y):
        a, x, y = float(a), float(x), float(y)
        self._check(a, x)
        self._check(0.0, y)
        if x < a:
            return 0 * self._ones_p, 0 * self._ones_m
        qp, qm = self.cdf_parts(a, y)
        Qp, Qm = self._exceed_joint(a, x, y)
        return qp - Qp, qm - Qm
