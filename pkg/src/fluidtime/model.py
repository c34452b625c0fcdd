"""Fluid model, Erlang clock and stage-indexed families.

Phases are stored internally with the up-phases (positive rate) first and the
down-phases after them; ``FluidModel.order`` maps internal positions back to
the caller's indices so every public result can be reported in user order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (EmptyPhaseSet, InvalidHorizon, InvalidStages,
                     NonConservativeGenerator, NotIrreducible, ShapeMismatch,
                     ZeroRate)

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FluidModel:
    """Validated Markov-modulated fluid model.

    ``generator`` and ``rates`` keep the user's phase order. ``order[p]`` is the
    user index of internal phase ``p``; internal phases ``0..m_plus-1`` are
    the up-phases.
    """

    generator: np.ndarray
    rates: np.ndarray
    plus_phases: tuple
    minus_phases: tuple
    order: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.rates)

    @property
    def m_plus(self) -> int:
        return len(self.plus_phases)

    @property
    def m_minus(self) -> int:
        return len(self.minus_phases)

    @property
    def A(self) -> np.ndarray:
        """Generator in internal (up-phases first) order."""
        return self.generator[np.ix_(self.order, self.order)]

    @property
    def c(self) -> np.ndarray:
        return self.rates[self.order]

    def blocks(self):
        """Return ``(A++, A+-, A-+, A--)`` in internal order."""
        A, p = self.A, self.m_plus
        return A[:p, :p], A[:p, p:], A[p:, :p], A[p:, p:]

    @property
    def c_plus(self) -> np.ndarray:
        return self.c[: self.m_plus]

    @property
    def c_minus_abs(self) -> np.ndarray:
        return np.abs(self.c[self.m_plus:])

    def to_user(self, v_plus, v_minus) -> np.ndarray:
        """Merge internal ``(+, -)`` parts into one vector in user order.

        Trailing axes are allowed: the phase axis is the last one.
        """
        v = np.concatenate([np.asarray(v_plus, float), np.asarray(v_minus, float)], axis=-1)
        out = np.empty_like(v)
        out[..., self.order] = v
        return out

    def to_internal(self, v) -> np.ndarray:
        return np.asarray(v, float)[..., self.order]

    def internal_index(self, user_phase: int) -> int:
        """Internal position of a 0-based user phase index."""
        return int(np.flatnonzero(self.order == user_phase)[0])


@dataclass(frozen=True)
class ErlangClock:
    """Erlang(L, L/theta) horizon; the rate is always derived, never stored."""

    theta: float
    stages: int

    @property
    def nu(self) -> float:
        return self.stages / self.theta

    @property
    def variance(self) -> float:
        return self.theta ** 2 / self.stages

    @property
    def L(self) -> int:
        return self.stages


def build_model(A, c) -> FluidModel:
    A = np.array(A, dtype=float)
    c = np.array(c, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"generator must be square, got shape {A.shape}")
    if A.shape[0] != c.size:
        raise ShapeMismatch(f"generator has {A.shape[0]} phases but {c.size} rates given")
    off = A - np.diag(np.diag(A))
    if (off < 0).any():
        raise NonConservativeGenerator("off-diagonal generator entries must be >= 0")
    rowsum = np.abs(A.sum(axis=1))
    if (rowsum > ROW_SUM_TOL * max(1.0, np.abs(A).max())).any():
        bad = int(np.argmax(rowsum))
        raise NonConservativeGenerator(f"row {bad + 1} of the generator sums to {A[bad].sum():g}")
    if (c == 0).any():
        raise ZeroRate(f"phase {int(np.flatnonzero(c == 0)[0]) + 1} has a zero rate")
    if c.size > 1:
        ncomp, _ = connected_components(off > 0, directed=True, connection="strong")
        if ncomp != 1:
            raise NotIrreducible(f"generator has {ncomp} communicating classes")
    plus = tuple(int(i) for i in np.flatnonzero(c > 0))
    minus = tuple(int(i) for i in np.flatnonzero(c < 0))
    if not plus or not minus:
        raise EmptyPhaseSet("need at least one phase with positive and one with negative rate")
    A.setflags(write=False)
    c.setflags(write=False)
    order = np.array(plus + minus)
    order.setflags(write=False)
    return FluidModel(A, c, plus, minus, order)


def erlang_clock(theta: float, L: int) -> ErlangClock:
    if not np.isfinite(theta) or theta <= 0:
        raise InvalidHorizon(f"horizon must be positive, got {theta}")
    if int(L) != L or L < 1:
        raise InvalidStages(f"stage count must be a positive integer, got {L}")
    return ErlangClock(float(theta), int(L))


def stationary_vector(A) -> np.ndarray:
    A = np.asarray(A, float)
    m = A.shape[0]
    M = np.vstack([A.T, np.ones((1, m))])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    alpha, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return alpha


def stationary_drift(model: FluidModel) -> float:
    """Mean drift ``alpha C 1`` under the stationary phase law."""
    alpha = stationary_vector(model.generator)
    return float(alpha @ model.rates)


def calm_excited_generator(lam=1.0, omega=0.25, mu=1.0, beta=7.0, p=0.5) -> np.ndarray:
    """Calm/excited four-phase environment used in the worked example."""
    return np.array([
        [-lam - omega, lam, p * omega, (1 - p) * omega],
        [lam, -lam - omega, p * omega, (1 - p) * omega],
        [mu, 0.0, -mu - beta, beta],
        [0.0, mu, beta, -mu - beta],
    ])


CALM_EXCITED_RATES = (2.0, -1.0, 10.0, -10.0)


def calm_excited_model(p: float = 0.5, **params) -> FluidModel:
    return build_model(calm_excited_generator(p=p, **params), CALM_EXCITED_RATES)


def symmetric_model() -> FluidModel:
    return build_model([[-1.0, 1.0], [1.0, -1.0]], [1.0, -1.0])
