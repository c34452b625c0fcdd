"""``fluidtime`` command line: JSON model configs in, CSV curves and reports out.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 a Monte Carlo
verification that did not pass.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ComputationError, ConfigError, FluidTimeError
from .mc import SimulationPlan, simulate
from .model import (build_model, calm_excited_model, erlang_clock, stationary_drift,
                    stationary_vector, symmetric_model)
from .queue_dist import FluidQueue
from .rw_dist import BilateralPhaseType, RandomWalk, erlangized_bph

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_POINTS = 201
PRESIM_PATHS = 10_000
PRESETS = {"calm-excited", "symmetric"}


# -- config --------------------------------------------------------------------
def _get(d, key, where, default=None, required=False):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    if key not in d:
        if required:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    return d[key]


def model_from_config(entry, where="model"):
    if entry is None:
        raise ConfigError(f"{where}: missing")
    preset = _get(entry, "preset", where)
    try:
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"{where}.preset: unknown preset {preset!r}; use one of {sorted(PRESETS)}")
            if preset == "symmetric":
                return symmetric_model()
            params = {k: v for k, v in entry.items() if k != "preset"}
            return calm_excited_model(**params)
        A = _get(entry, "generator", where, required=True)
        c = _get(entry, "rates", where, required=True)
        return build_model(A, c)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


class Run:
    """Config merged with command-line overrides."""

    def __init__(self, cfg: dict, args):
        self.cfg = cfg
        self.args = args
        self.model = model_from_config(cfg.get("model"))
        clock = cfg.get("clock", {})
        thetas = getattr(args, "theta", None) or [_get(clock, "theta", "clock", 10.0)]
        self.thetas = [float(t) for t in thetas]
        self.stages = int(getattr(args, "stages", None) or _get(clock, "stages", "clock", 30))
        for t in self.thetas:
            erlang_clock(t, self.stages)
        a = getattr(args, "initial_level", None)
        self.a = float(cfg.get("initial_level", 0.0) if a is None else a)
        ph = getattr(args, "initial_phase", None)
        ph = cfg.get("initial_phase", 1) if ph is None else ph
        if not (isinstance(ph, int) and 1 <= ph <= self.model.m):
            raise ConfigError(f"initial_phase: must be an integer in 1..{self.model.m}, got {ph!r}")
        self.phase = ph - 1
        meth = cfg.get("method", {}) or {}
        self.method = {
            "method": getattr(args, "method", None) or _get(meth, "name", "method"),
            "epsilon": float(getattr(args, "epsilon", None) or _get(meth, "epsilon", "method", 1e-8)),
            "embed_k": getattr(args, "embed_k", None) or _get(meth, "embed_k", "method"),
        }
        mc = cfg.get("mc", {}) or {}
        self.paths = int(getattr(args, "paths", None) or _get(mc, "paths", "mc", 100_000))
        seed = getattr(args, "seed", None)
        self.seed = int(_get(mc, "seed", "mc", 0) if seed is None else seed)

    @property
    def theta(self):
        return self.thetas[0]

    def clock(self, theta=None, stages=None):
        return erlang_clock(self.theta if theta is None else theta, stages or self.stages)

    def walk(self, theta=None, stages=None):
        return RandomWalk(self.model, self.clock(theta, stages), **self.method)

    def queue(self, theta=None, stages=None):
        return FluidQueue(self.walk(theta, stages))

    def k(self, L):
        k = getattr(self.args, "k", None)
        return L if k is None else k

    def grid(self, values_fn, theta=None):
        """Explicit ``--x-min/--x-max/--points`` or quantiles of a pre-simulation."""
        args = self.args
        n = args.points or DEFAULT_POINTS
        lo, hi = args.x_min, args.x_max
        if lo is None or hi is None:
            thetas = self.thetas if theta is None else [theta]
            samples = []
            for t in thetas:
                res = simulate(SimulationPlan(self.model, self.clock(t), self.a, self.phase,
                                              PRESIM_PATHS, self.seed))
                samples.append(values_fn(res))
            s = np.concatenate(samples)
            qlo, qhi = np.quantile(s, [0.001, 0.999])
            lo = qlo if lo is None else lo
            hi = qhi if hi is None else hi
        if not hi > lo and n > 1:
            hi = lo + 1.0
        return np.linspace(lo, hi, n)


# -- CSV -------------------------------------------------------------------------
def _fmt(v):
    return "%.17g" % v


def csv_text(columns: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    cols = [np.asarray(columns[c]) for c in names]
    for row in zip(*cols):
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row])
    return buf.getvalue()


def load_csv(path) -> dict:
    """Read a CSV written by this tool into ``{column: float array}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {h: data[:, j] for j, h in enumerate(header)}


def phase_columns(values: np.ndarray) -> dict:
    values = np.atleast_2d(values)
    return {f"P_phase{i + 1}": values[:, i] for i in range(values.shape[1])}


class Output:
    def __init__(self, directory):
        self.dir = Path(directory) if directory else None
        self.files = []

    def emit(self, name: str, columns: dict):
        text = csv_text(columns)
        if self.dir is None:
            sys.stdout.write(f"# {name}\n" if self.files else "")
            sys.stdout.write(text)
        else:
            self.dir.mkdir(parents=True, exist_ok=True)
            (self.dir / name).write_text(text)
        self.files.append(name)


# -- commands ----------------------------------------------------------------------
def cmd_validate(run: Run, out: Output):
    m = run.model
    alpha = stationary_vector(m.generator)
    drift = stationary_drift(m)
    print(f"phases: {m.m}")
    print("S+ (rate > 0): " + " ".join(str(i + 1) for i in m.plus_phases))
    print("S- (rate < 0): " + " ".join(str(i + 1) for i in m.minus_phases))
    print("stationary law: " + " ".join(_fmt(v) for v in alpha))
    sign = "positive" if drift > 0 else "negative" if drift < 0 else "zero"
    print(f"stationary drift: {_fmt(drift)} ({sign})")
    for t in run.thetas:
        ck = run.clock(t)
        print(f"clock: theta={_fmt(t)} L={ck.L} nu={_fmt(ck.nu)}")
    return EXIT_OK


def cmd_stages(run: Run, out: Output):
    q = run.queue()
    m = run.model
    plus, minus = np.array(m.plus_phases), np.array(m.minus_phases)
    fams = {"psi": (q.psi, plus, minus), "psi_hat": (q.psi_hat, minus, plus),
            "upsilon": (q.upsilon, minus, plus),
            "u": (q.walk.rg.u.blocks, minus, minus), "u_hat": (q.walk.rg.u_hat.blocks, plus, plus)}
    for name, (blocks, rows, cols) in fams.items():
        n, i, j, v = [], [], [], []
        for s, B in enumerate(blocks):
            for r in range(B.shape[0]):
                for c in range(B.shape[1]):
                    n.append(s)
                    i.append(int(rows[r]) + 1)
                    j.append(int(cols[c]) + 1)
                    v.append(float(B[r, c]))
        out.emit(f"{name}.csv", {"n": n, "from_phase": i, "to_phase": j, "value": v})
    return EXIT_OK


def _sweep(obj_pick, xs, run, L):
    """Rows over the grid (and over k if ``--all-k``)."""
    ks = list(range(1, L + 1)) if run.args.all_k else [run.k(L)]
    cols = {"x": [], "k": []}
    vals = []
    for k in ks:
        for x in xs:
            cols["x"].append(float(x))
            cols["k"].append(k)
            vals.append(obj_pick(x, k))
    if not run.args.all_k:
        del cols["k"]
    cols.update(phase_columns(np.array(vals)))
    return cols


def cmd_cdf(run: Run, out: Output):
    a = run.a
    for t in run.thetas:
        if run.args.process == "queue":
            q = run.queue(t)
            xs = run.grid(lambda r: r.z_T, t)
            xs = xs[xs >= 0] if (xs >= 0).any() else np.array([0.0])
            cols = _sweep(lambda x, k: q.cdf(a, x, k), xs, run, run.stages)
        else:
            w = run.walk(t)
            xs = run.grid(lambda r: r.x_T, t)
            cols = _sweep(lambda x, k: w.cdf(x - a, k), xs, run, run.stages)
        out.emit(f"cdf_{run.args.process}_theta{t:g}.csv", cols)
    return EXIT_OK


def cmd_extrema(run: Run, out: Output):
    a, kind = run.a, run.args.kind
    for t in run.thetas:
        if run.args.process == "queue":
            q = run.queue(t)
            xs = run.grid(lambda r: getattr(r, f"{kind}_queue"), t)
            xs = xs[xs >= 0] if (xs >= 0).any() else np.array([0.0])
            fn = q.min_cdf if kind == "min" else q.max_cdf
            cols = _sweep(lambda x, k: fn(a, x, k), xs, run, run.stages)
        else:
            w = run.walk(t)
            xs = run.grid(lambda r: getattr(r, f"{kind}_walk"), t)
            fn = w.min_cdf if kind == "min" else w.max_cdf
            cols = _sweep(lambda x, k: fn(x - a, k), xs, run, run.stages)
        out.emit(f"{kind}_{run.args.process}_theta{t:g}.csv", cols)
    return EXIT_OK


def cmd_joint(run: Run, out: Output):
    a, kind, args = run.a, run.args.kind, run.args
    ny = args.y_points or 21
    for t in run.thetas:
        queue = args.process == "queue"
        if queue:
            q = run.queue(t)
            xs = run.grid(lambda r: getattr(r, f"{kind}_queue"), t)
            fn = q.joint_min if kind == "min" else q.joint_max
            pick = lambda x, y, k: fn(a, x, y, k)  # noqa: E731
            term = "z_T"
        else:
            w = run.walk(t)
            xs = run.grid(lambda r: getattr(r, f"{kind}_walk"), t)
            fn = w.joint_min if kind == "min" else w.joint_max
            pick = lambda x, y, k: fn(x - a, y - a, k)  # noqa: E731
            term = "x_T"
        if args.y_min is None or args.y_max is None:
            res = simulate(SimulationPlan(run.model, run.clock(t), a, run.phase, PRESIM_PATHS, run.seed))
            ylo, yhi = np.quantile(getattr(res, term), [0.001, 0.999])
        ylo = ylo if args.y_min is None else args.y_min
        yhi = yhi if args.y_max is None else args.y_max
        ys = np.linspace(ylo, yhi, ny)
        if queue:
            xs, ys = xs[xs >= 0], ys[ys >= 0]
        k = run.k(run.stages)
        rows_x, rows_y, vals = [], [], []
        for x in xs:
            for y in ys:
                rows_x.append(float(x))
                rows_y.append(float(y))
                vals.append(pick(x, y, k))
        cols = {"x": rows_x, "y": rows_y}
        cols.update(phase_columns(np.array(vals)))
        out.emit(f"joint_{kind}_{args.process}_theta{t:g}.csv", cols)
    return EXIT_OK


def cmd_bph(run: Run, out: Output):
    entry = run.cfg.get("bph")
    if entry is None:
        bph = erlangized_bph(run.model, run.clock(), run.phase)
    else:
        try:
            bph = BilateralPhaseType(_get(entry, "gamma", "bph", required=True),
                                     _get(entry, "D", "bph", required=True),
                                     _get(entry, "E", "bph", required=True))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FluidTimeError):
                raise
            raise ConfigError(f"bph: {exc}") from exc
    args = run.args
    lo = -10.0 if args.x_min is None else args.x_min
    hi = 10.0 if args.x_max is None else args.x_max
    xs = np.linspace(lo, hi, args.points or DEFAULT_POINTS)
    out.emit("bph.csv", {"x": xs, "density": [bph.pdf(x) for x in xs],
                         "density_k_form": [bph.pdf(x, "k") for x in xs],
                         "cdf": [bph.cdf(x) for x in xs]})
    return EXIT_OK


def cmd_simulate(run: Run, out: Output):
    from .mc import FLOAT_FIELDS, INT_FIELDS

    res = simulate(SimulationPlan(run.model, run.clock(), run.a, run.phase, run.paths, run.seed))
    cols = {"path": np.arange(len(res))}
    for f in FLOAT_FIELDS:
        cols[f] = getattr(res, f)
    for f in INT_FIELDS:
        v = getattr(res, f)
        if f == "terminal_phase":
            v = v + 1
        elif f == "return_phase":
            v = np.where(v >= 0, v + 1, 0)
        cols[f] = v
    out.emit("paths.csv", cols)
    return EXIT_OK


def cmd_verify(run: Run, out: Output):
    from .verify import verify_all

    reports = verify_all(run.model, run.clock(), run.a, run.phase, run.paths, run.seed,
                         threshold=run.args.threshold, **run.method)
    ok = True
    names, maxz, ks, status = [], [], [], []
    for name, rep in reports.items():
        print(f"{name:10s} {rep.summary()}")
        ok &= rep.passed
        names.append(name)
        maxz.append(rep.max_z)
        ks.append(rep.ks)
        status.append("pass" if rep.passed else "fail")
    overall = max(maxz)
    print(f"overall max|z| = {overall:.3f} -> {'PASS' if ok else 'FAIL'}")
    if out.dir is not None:
        out.emit("verify.csv", {"functional": names, "max_z": maxz, "ks": ks, "status": status})
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_worked_example(run: Run, out: Output):
    """Data for the maturity and Erlangization curves and the density-jump table."""
    args = run.args
    n = args.points or DEFAULT_POINTS
    lo = -20.0 if args.x_min is None else args.x_min
    hi = 40.0 if args.x_max is None else args.x_max
    xs = np.linspace(lo, hi, n)
    for t in (5.0, 10.0, 15.0, 50.0):
        w = run.walk(t, 30)
        out.emit(f"maturity_theta{t:g}.csv",
                 {"x": xs, **phase_columns(np.array([w.cdf(x) for x in xs]))})
    zoom = np.linspace(-0.5, 0.5, n)
    for L in (1, 2, 5, 10, 30):
        w = run.walk(10.0, L)
        out.emit(f"erlang_L{L}.csv", {"x": xs, **phase_columns(np.array([w.cdf(x) for x in xs]))})
        out.emit(f"erlang_L{L}_zoom.csv",
                 {"x": zoom, **phase_columns(np.array([w.cdf(x) for x in zoom]))})
    w = run.walk(10.0, 1)
    left, right = w.density_limits_at_zero()
    m = run.model
    phases = np.arange(1, m.m + 1)
    out.emit("density_jump.csv", {
        "phase": phases, "left": left[0], "right": right[0], "difference": left[0] - right[0],
        "nu_over_abs_rate": np.where(m.rates < 0, w.clock.nu / np.abs(m.rates), 0.0)})
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "stages": cmd_stages, "cdf": cmd_cdf,
            "extrema": cmd_extrema, "joint": cmd_joint, "bph": cmd_bph,
            "simulate": cmd_simulate, "verify": cmd_verify,
            "worked-example": cmd_worked_example}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluidtime", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="JSON config (defaults to the calm/excited preset)")
    common.add_argument("--output", "-o", help="directory for CSV files (default: stdout)")
    common.add_argument("--theta", type=float, action="append", help="horizon mean; repeatable")
    common.add_argument("--stages", "-L", type=int, help="Erlang stage count")
    common.add_argument("--k", type=int, help="stages left (default L)")
    common.add_argument("--all-k", action="store_true", help="sweep k = 1..L with a k column")
    common.add_argument("--initial-level", type=float)
    common.add_argument("--initial-phase", type=int, help="1-based")
    common.add_argument("--method", choices=["direct", "eps-circulant", "embedding"])
    common.add_argument("--epsilon", type=float)
    common.add_argument("--embed-k", type=int)
    common.add_argument("--x-min", type=float)
    common.add_argument("--x-max", type=float)
    common.add_argument("--points", type=int)
    common.add_argument("--paths", type=int)
    common.add_argument("--seed", type=int)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("cdf", "extrema", "joint"):
            sp.add_argument("--process", choices=["walk", "queue"], default="walk")
        if name in ("extrema", "joint"):
            sp.add_argument("--kind", choices=["min", "max"], default="max")
        if name == "joint":
            sp.add_argument("--y-min", type=float)
            sp.add_argument("--y-max", type=float)
            sp.add_argument("--y-points", type=int)
        if name == "verify":
            sp.add_argument("--threshold", type=float, default=3.0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {"model": {"preset": "calm-excited"},
                                                            "initial_phase": 2}
        run = Run(cfg, args)
        return COMMANDS[args.command](run, Output(args.output))
    except ComputationError as exc:
        print(f"fluidtime: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (FluidTimeError, ValueError) as exc:
        print(f"fluidtime: invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"fluidtime: I/O error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
