#!/usr/bin/env python3
"""Wall-time comparison of the trimmed solvers on planted instances.

Builds synthetic linear datasets with gross planted outliers and times
a cold exact solve against the warm-started variants and the Huber
baseline.  The cold solve pays for a large multi-start incumbent
search; the warm starts replace it with one cheap robust alternation,
which is the entire speed story.  Example:

    python scripts/timing_benchmark.py --m 500 --n-x 5 --seeds 0 1 2 3 4
"""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from trimlpf import (RegressionProblem, TrimConfig, fit_huber, trim_exact,
                     trim_s1, trim_s2)


def planted_instance(m: int, n_x: int, ratio: float, seed: int,
                     noise: float = 0.01) -> RegressionProblem:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, n_x))
    w = rng.normal(size=(n_x, 1))
    y = x @ w + 0.1 + rng.normal(scale=noise, size=(m, 1))
    bad = rng.choice(m, size=int(ratio * m), replace=False)
    signs = np.where(rng.random(bad.size) < 0.5, -1.0, 1.0)
    y[bad, 0] += signs * rng.uniform(0.2, 0.6, size=bad.size)
    return RegressionProblem(x, y)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=500)
    ap.add_argument("--n-x", type=int, default=5)
    ap.add_argument("--ratio", type=float, default=0.08)
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--node-limit", type=int, default=10)
    args = ap.parse_args(argv)

    cfg = TrimConfig(p=args.ratio, node_limit=args.node_limit)
    solvers = {
        "huber": lambda prob: fit_huber(prob),
        "trim_exact (cold)": lambda prob: trim_exact(prob, cfg),
        "trim_s1": lambda prob: trim_s1(prob, cfg),
        "trim_s2": lambda prob: trim_s2(prob, cfg),
    }
    walls = {name: [] for name in solvers}
    for seed in args.seeds:
        prob = planted_instance(args.m, args.n_x, args.ratio, 7000 + seed)
        for name, run in solvers.items():
            t0 = time.perf_counter()
            run(prob)
            walls[name].append(time.perf_counter() - t0)

    print(f"m={args.m}, n_x={args.n_x}, ratio={args.ratio:.0%}, "
          f"median over {len(args.seeds)} seeds")
    width = max(len(n) for n in walls)
    for name, ts in walls.items():
        med = float(np.median(ts))
        print(f"  {name.ljust(width)}  {med * 1e3:9.2f} ms   "
              f"(min {min(ts) * 1e3:.2f}, max {max(ts) * 1e3:.2f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
