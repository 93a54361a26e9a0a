"""Time the compiled and pure-Python event loops on identical random draws.

    python benchmarks/bench_kernels.py --events 2000000
"""

import argparse
import time

import numpy as np

from groupdyn import _backend
from groupdyn.analytic import GroupScalingParams
from groupdyn.simulator import SimConfig, rate_tables


def time_kernel(advance, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        weights = np.zeros_like(args["join"])
        start = time.perf_counter()
        end = advance(2, args["join"], args["leave"], args["exp"], args["unif"], 0, weights,
                      np.empty(0, dtype=np.int64), np.empty(0))
        best = min(best, time.perf_counter() - start)
    return best, end, weights


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--events", type=int, default=1_000_000)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--n-t", type=float, default=108.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    config = SimConfig(GroupScalingParams(args.beta, args.n_t))
    join, leave = rate_tables(config)
    rng = np.random.default_rng(0)
    draws = {"join": join, "leave": leave, "exp": rng.standard_exponential(args.events), "unif": rng.random(args.events)}

    rows = [("python", _backend.python_advance)]
    if _backend.compiled_advance is not None:
        rows.append(("cython", _backend.compiled_advance))
    results = {}
    for name, advance in rows:
        seconds, end, weights = time_kernel(advance, draws, args.repeat)
        results[name] = (seconds, end, weights)
        print(f"{name:>7}: {seconds:8.4f} s  {args.events / seconds / 1e6:8.2f} M events/s")
    if len(results) == 2:
        (tp, ep, wp), (tc, ec, wc) = results["python"], results["cython"]
        same = ep == ec and np.array_equal(wp, wc)
        print(f"speedup: {tp / tc:.1f}x, identical results: {same}")
        return 0 if same else 1
    print("extension not built; only the pure-Python loop was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
