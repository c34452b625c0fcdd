"""Exact event-driven simulation of the fluid model up to the Erlang horizon.

The path loop exists twice: a compiled kernel (``_kernels``) and a
pure-Python fallback (``_fallback``). Both consume the same uniform draws
in the same order, so they produce identical output. The fallback is used
when the extension is missing or ``FLUIDTIME_BACKEND=python`` is set.

Randomness: path ``j`` of a plan with seed ``s`` reads the Philox stream
with key ``s`` and counter ``(0, 0, j, 0)``, so any subset of paths can be
regenerated on its own and chunking over threads does not change results.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptySample, GridMismatch, InvalidPlan
from ..model import ErlangClock, FluidModel
from . import _fallback

try:
    from ._kernels import run_paths as _compiled_run
except ImportError:  # extension not built
    _compiled_run = None

FLOAT_FIELDS = ("x_T", "z_T", "min_walk", "max_walk", "min_queue", "max_queue")
INT_FIELDS = ("terminal_phase", "terminal_stage", "return_stage", "return_phase", "events")
FUNCTIONALS = {"X": "x_T", "Z": "z_T", "min_walk": "min_walk", "max_walk": "max_walk",
               "min_queue": "min_queue", "max_queue": "max_queue"}
JOINT_TERMINAL = {"min_walk": "x_T", "max_walk": "x_T", "min_queue": "z_T", "max_queue": "z_T"}


def backend_name() -> str:
    if _compiled_run is not None and os.environ.get("FLUIDTIME_BACKEND", "") != "python":
        return "compiled"
    return "python"


def _runner(backend=None):
    backend = backend or backend_name()
    if backend == "compiled":
        if _compiled_run is None:
            raise InvalidPlan("compiled backend requested but the extension is not built")
        return _compiled_run
    if backend == "python":
        return _fallback.run_paths
    raise InvalidPlan(f"unknown backend {backend!r}")


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("FLUIDTIME_THREADS")
    if raw is None or raw.strip() == "":
        return default
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


@dataclass(frozen=True)
class SimulationPlan:
    model: FluidModel
    clock: ErlangClock
    initial_level: float = 0.0
    initial_phase: int = 0  # 0-based, user order
    paths: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise InvalidPlan(f"path count must be a positive integer, got {self.paths}")
        if not 0 <= self.initial_phase < self.model.m:
            raise InvalidPlan(f"initial phase {self.initial_phase} outside 0..{self.model.m - 1}")
        if not (np.isfinite(self.initial_level) and self.initial_level >= 0):
            raise InvalidPlan(f"initial level must be finite and >= 0, got {self.initial_level}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 128:
            raise InvalidPlan(f"seed must be an integer in [0, 2**128), got {self.seed}")


@dataclass(frozen=True)
class PathSummary:
    x_T: float
    z_T: float
    min_walk: float
    max_walk: float
    min_queue: float
    max_queue: float
    terminal_phase: int
    terminal_stage: int
    return_stage: int
    return_phase: int
    events: int


@dataclass(eq=False)
class SimulationResult:
    """Column store of all paths; ``result[j]`` gives one :class:`PathSummary`."""

    plan: SimulationPlan
    floats: np.ndarray = field(repr=False)
    ints: np.ndarray = field(repr=False)

    def __len__(self):
        return self.floats.shape[0]

    def __getitem__(self, j) -> PathSummary:
        f, i = self.floats[j], self.ints[j]
        return PathSummary(*(float(v) for v in f), *(int(v) for v in i))

    def __iter__(self):
        return (self[j] for j in range(len(self)))

    def __getattr__(self, name):
        if name in FLOAT_FIELDS:
            return self.floats[:, FLOAT_FIELDS.index(name)]
        if name in INT_FIELDS:
            return self.ints[:, INT_FIELDS.index(name)]
        raise AttributeError(name)

    def tobytes(self) -> bytes:
        return self.floats.tobytes() + self.ints.tobytes()


def _stream(seed: int):
    bg = np.random.Philox(key=seed)
    key = bg.state["state"]["key"].copy()
    state = {"bit_generator": "Philox",
             "state": {"counter": np.zeros(4, np.uint64), "key": key},
             "buffer": np.zeros(4, np.uint64), "buffer_pos": 4,
             "has_uint32": 0, "uinteger": 0}

    def reset(j):
        state["state"]["counter"] = np.array([0, 0, j, 0], dtype=np.uint64)
        bg.state = state

    return bg, reset


def _tables(model: FluidModel):
    A = np.asarray(model.generator, float)
    qd = -np.diag(A).copy()
    jump = A - np.diag(np.diag(A))
    cum = np.ascontiguousarray(np.cumsum(jump / qd[:, None], axis=1))
    last = np.array([np.flatnonzero(row > 0)[-1] for row in jump], dtype=np.int64)
    return cum, last, qd, np.array(model.rates, dtype=float)


def simulate(plan: SimulationPlan, threads: int | None = None, backend: str | None = None,
             ) -> SimulationResult:
    """Simulate ``plan.paths`` independent paths; deterministic given the seed."""
    run = _runner(backend)
    N = int(plan.paths)
    cum, last, qd, c = _tables(plan.model)
    nu, L = plan.clock.nu, plan.clock.L
    fout = np.zeros((N, len(FLOAT_FIELDS)))
    iout = np.zeros((N, len(INT_FIELDS)), dtype=np.int64)
    threads = thread_count() if threads is None else max(1, int(threads))

    def chunk(bounds):
        j0, j1 = bounds
        bg, reset = _stream(int(plan.seed))
        run(bg, reset, j0, j1, cum, last, qd, c, float(nu), int(L), float(plan.initial_level),
            int(plan.initial_phase), fout[j0:j1], iout[j0:j1])

    edges = np.linspace(0, N, min(threads, N) + 1).astype(int)
    parts = list(zip(edges[:-1], edges[1:]))
    if len(parts) == 1:
        chunk(parts[0])
    else:
        with ThreadPoolExecutor(len(parts)) as pool:
            list(pool.map(chunk, parts))
    return SimulationResult(plan, fout, iout)


def _proportion(hits: np.ndarray, N: int):
    p = hits.mean(axis=0) if hits.ndim > 1 else hits.mean()
    return p, np.sqrt(p * (1.0 - p) / N)


def empirical_cdf(result: SimulationResult, functional: str, grid):
    """Fraction of paths with the functional ``<= x`` and its binomial standard error."""
    if len(result) == 0:
        raise EmptySample("no paths to estimate from")
    if functional not in FUNCTIONALS:
        raise ValueError(f"unknown functional {functional!r}; choose from {sorted(FUNCTIONALS)}")
    v = getattr(result, FUNCTIONALS[functional])
    grid = np.atleast_1d(np.asarray(grid, float))
    return _proportion(v[:, None] <= grid[None, :], len(result))


def empirical_joint(result: SimulationResult, functional: str, pairs):
    """``P[F <= x, terminal level <= y]`` for extremum ``F`` and points ``(x, y)``."""
    if len(result) == 0:
        raise EmptySample("no paths to estimate from")
    if functional not in JOINT_TERMINAL:
        raise ValueError(f"joint functional must be one of {sorted(JOINT_TERMINAL)}")
    pairs = np.atleast_2d(np.asarray(pairs, float))
    f = getattr(result, functional)[:, None]
    t = getattr(result, JOINT_TERMINAL[functional])[:, None]
    hits = (f <= pairs[None, :, 0]) & (t <= pairs[None, :, 1])
    return _proportion(hits, len(result))


def return_frequencies(result: SimulationResult, model: FluidModel) -> np.ndarray:
    """Empirical ``P[first return to the start level happens in stage n, phase j]``.

    Shape ``(L, m)`` in user phase order; only the opposite phase set can be hit.
    """
    L = result.plan.clock.L
    out = np.zeros((L, model.m))
    hit = result.return_stage >= 0
    np.add.at(out, (result.return_stage[hit], result.return_phase[hit]), 1.0)
    return out / len(result)


@dataclass(frozen=True)
class VerificationReport:
    z_scores: np.ndarray
    max_z: float
    worst_index: int
    passed: bool
    ks: float
    threshold: float = 3.0

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} max|z|={self.max_z:.3f} at point {self.worst_index} "
                f"(threshold {self.threshold:g}), KS={self.ks:.3g}")


def compare(analytic, estimates, se, threshold: float = 3.0, n_paths: int | None = None
            ) -> VerificationReport:
    """z-scores ``|analytic - empirical| / SE`` with a max-z pass rule.

    Where the empirical SE is 0 (all or no paths hit) it is replaced by the
    binomial SE of the analytic value when ``n_paths`` is given, so a
    genuine mismatch is not hidden by a degenerate estimate.
    """
    analytic = np.asarray(analytic, float)
    estimates = np.asarray(estimates, float)
    se = np.asarray(se, float)
    if analytic.shape != estimates.shape or se.shape != estimates.shape:
        raise GridMismatch(f"shapes {analytic.shape}, {estimates.shape}, {se.shape} differ")
    if analytic.size == 0:
        raise GridMismatch("empty grid")
    diff = np.abs(analytic - estimates)
    se = se.copy()
    if n_paths:
        p = np.clip(analytic, 0.0, 1.0)
        se = np.where(se > 0, se, np.sqrt(p * (1 - p) / n_paths))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
    flat = z.ravel()
    worst = int(np.argmax(flat))
    max_z = float(flat[worst])
    return VerificationReport(z, max_z, worst, max_z <= threshold, float(diff.max()), threshold)
