#!/usr/bin/env python3
"""Head-to-head method comparison on one network case.

Generates contaminated training data per seed, fits every requested
method, and prints a markdown table of median train/test relative
errors.  Example:

    python scripts/run_comparison.py --case src/trimlpf/cases/ieee9.net \
        --methods trim_exact trim_s1 trim_s2 huber lnr svr \
        --p0 0.06 0.10 --p-offset 0.02 --m-train 500 --m-test 150 \
        --seeds 0 1 2 3 4 --out comparison
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from trimlpf import OutlierSpec, TrimConfig, load_case, run_comparison


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", required=True, help="case file path")
    ap.add_argument("--methods", nargs="+",
                    default=["trim_exact", "trim_s1", "trim_s2",
                             "huber", "lnr", "svr"])
    ap.add_argument("--p0", nargs="+", type=float, default=[0.06, 0.10],
                    help="actual contamination ratios to sweep")
    ap.add_argument("--p-offset", type=float, default=0.02,
                    help="trimming ratio used is p0 + offset (conservative)")
    ap.add_argument("--m-train", type=int, default=500)
    ap.add_argument("--m-test", type=int, default=150)
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--direction", default="volt_to_power",
                    choices=["volt_to_power", "power_to_volt"])
    ap.add_argument("--load-scale", nargs=2, type=float, default=[0.6, 1.4],
                    metavar=("LO", "HI"))
    ap.add_argument("--magnitude", nargs=2, type=float, default=[4.0, 8.0],
                    metavar=("LO", "HI"),
                    help="outlier size range in per-column std units")
    ap.add_argument("--node-limit", type=int, default=200)
    ap.add_argument("--restarts", type=int, default=100)
    ap.add_argument("--out", default=None,
                    help="prefix for <out>_p0<r>.csv files")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    case = load_case(args.case)
    outlier = OutlierSpec(magnitude_lo=args.magnitude[0],
                          magnitude_hi=args.magnitude[1])
    trim = TrimConfig(node_limit=args.node_limit,
                      cstep_restarts=args.restarts)
    for p0 in args.p0:
        report = run_comparison(
            case, args.methods, p_values=[p0 + args.p_offset], p0=p0,
            sizes={"m_train": args.m_train, "m_test": args.m_test},
            seeds=args.seeds, direction=args.direction, outlier=outlier,
            trim=trim, load_scale=tuple(args.load_scale))
        print(f"\n== {case.name}, p0={p0:.2%}, "
              f"p={p0 + args.p_offset:.2%}, "
              f"median over {len(args.seeds)} seeds ==")
        print(report.to_markdown())
        if args.out:
            path = pathlib.Path(f"{args.out}_p0{int(round(1000 * p0))}.csv")
            path.write_text(report.to_csv())
            print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
