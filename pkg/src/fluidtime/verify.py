"""Analytic-versus-simulation checks over every distribution the package computes."""
from __future__ import annotations

import numpy as np

from .mc import (SimulationPlan, VerificationReport, compare, empirical_cdf, empirical_joint,
                 simulate)
from .queue_dist import FluidQueue

LEVELS = (0.1, 0.3, 0.5, 0.7, 0.9)
NAMES = ("r", "eta", "mu", "q", "rho", "delta", "P_eta", "P_mu", "P_rho_q", "P_delta_q")
GRID_PATHS = 10_000


def _grid(values):
    return np.quantile(values, LEVELS)


def _pairs(first, second):
    """Mix quantile levels of the extremum and the terminal level."""
    n = len(first)
    return np.array([(first[i], second[(i + 2) % n]) for i in range(n)])


def verify_all(model, clock, initial_level: float = 0.0, initial_phase: int = 0,
               paths: int = 100_000, seed: int = 0, threshold: float = 3.0,
               queue: FluidQueue | None = None, **method) -> dict[str, VerificationReport]:
    """Compare each law with its Monte Carlo estimate on a 5-point grid.

    Grid points are quantiles of a separate ``GRID_PATHS``-path run (seed
    ``seed + 1``), so they do not depend on the sample being tested.
    """
    a = float(initial_level)
    i = int(initial_phase)
    q = queue or FluidQueue(model=model, clock=clock, **method)
    w = q.walk
    pre = simulate(SimulationPlan(model, clock, a, i, GRID_PATHS, seed + 1))
    res = simulate(SimulationPlan(model, clock, a, i, paths, seed))
    N = len(res)

    gX, gmin, gmax = _grid(pre.x_T - a), _grid(pre.min_walk - a), _grid(pre.max_walk - a)
    gZ, gqmin, gqmax = _grid(pre.z_T), _grid(pre.min_queue), _grid(pre.max_queue)

    def marginal(fn, functional, grid, shift=0.0):
        an = np.array([fn(x)[i] for x in grid])
        est, se = empirical_cdf(res, functional, grid + shift)
        return compare(an, est, se, threshold, n_paths=N)

    def joint(fn, functional, pairs, shift=0.0):
        an = np.array([fn(x, y)[i] for x, y in pairs])
        est, se = empirical_joint(res, functional, pairs + shift)
        return compare(an, est, se, threshold, n_paths=N)

    return {
        "r": marginal(w.cdf, "X", gX, a),
        "eta": marginal(w.min_cdf, "min_walk", gmin, a),
        "mu": marginal(w.max_cdf, "max_walk", gmax, a),
        "q": marginal(lambda x: q.cdf(a, x), "Z", gZ),
        "rho": marginal(lambda x: q.min_cdf(a, x), "min_queue", gqmin),
        "delta": marginal(lambda x: q.max_cdf(a, x), "max_queue", gqmax),
        "P_eta": joint(w.joint_min, "min_walk", _pairs(gmin, gX), a),
        "P_mu": joint(w.joint_max, "max_walk", _pairs(gmax, gX), a),
        "P_rho_q": joint(lambda x, y: q.joint_min(a, x, y), "min_queue", _pairs(gqmin, gZ)),
        "P_delta_q": joint(lambda x, y: q.joint_max(a, x, y), "max_queue", _pairs(gqmax, gZ)),
    }
