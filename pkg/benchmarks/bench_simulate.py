"""Compare the compiled and pure-Python path simulators.

    python benchmarks/bench_simulate.py [--paths N] [--stages L] [--repeat R]

Both backends are run on the same plan; their outputs must be identical.
"""
import argparse
import time

from fluidtime.mc import SimulationPlan, _compiled_run, simulate
from fluidtime.model import calm_excited_model, erlang_clock


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--stages", type=int, default=10)
    ap.add_argument("--theta", type=float, default=10.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    plan = SimulationPlan(calm_excited_model(), erlang_clock(args.theta, args.stages),
                          0.0, 1, args.paths, 7)
    t_py, res_py = best_of(lambda: simulate(plan, backend="python"), args.repeat)
    print(f"python    {t_py:8.3f} s  {1e6 * t_py / args.paths:8.2f} us/path")
    if _compiled_run is None:
        print("compiled  extension not built; run `pip install -e . --no-build-isolation`")
        return
    t_c, res_c = best_of(lambda: simulate(plan, backend="compiled"), args.repeat)
    print(f"compiled  {t_c:8.3f} s  {1e6 * t_c / args.paths:8.2f} us/path")
    print(f"speedup   {t_py / t_c:8.1f}x   mean events/path {res_c.events.mean():.1f}")
    same = res_c.tobytes() == res_py.tobytes()
    print(f"identical output: {same}")
    if not same:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
