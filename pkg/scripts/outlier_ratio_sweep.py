#!/usr/bin/env python3
"""Sweep the trimming ratio around a fixed contamination level.

Shows how sensitive the trimmed fit is to misjudging the true outlier
ratio: ratios below the truth leave gross rows in the fit, ratios
above it discard a few clean rows at small cost.  Example:

    python scripts/outlier_ratio_sweep.py \
        --case src/trimlpf/cases/ieee9.net --p0 0.08 \
        --p 0.04 0.08 0.12 0.16 --seeds 0 1 2 3 4
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from trimlpf import OutlierSpec, TrimConfig, load_case, run_comparison


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", required=True, help="case file path")
    ap.add_argument("--method", default="trim_exact",
                    choices=["trim_exact", "trim_s1", "trim_s2", "trim_cstep"])
    ap.add_argument("--p0", type=float, default=0.08,
                    help="actual contamination ratio")
    ap.add_argument("--p", nargs="+", type=float,
                    default=[0.04, 0.08, 0.12, 0.16],
                    help="trimming ratios to sweep")
    ap.add_argument("--m-train", type=int, default=500)
    ap.add_argument("--m-test", type=int, default=150)
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--direction", default="volt_to_power",
                    choices=["volt_to_power", "power_to_volt"])
    ap.add_argument("--load-scale", nargs=2, type=float, default=[0.6, 1.4],
                    metavar=("LO", "HI"))
    ap.add_argument("--magnitude", nargs=2, type=float, default=[4.0, 8.0],
                    metavar=("LO", "HI"))
    ap.add_argument("--node-limit", type=int, default=200)
    ap.add_argument("--restarts", type=int, default=100)
    ap.add_argument("--out", default=None, help="CSV output path")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    case = load_case(args.case)
    report = run_comparison(
        case, [args.method], p_values=list(args.p), p0=args.p0,
        sizes={"m_train": args.m_train, "m_test": args.m_test},
        seeds=args.seeds, direction=args.direction,
        outlier=OutlierSpec(magnitude_lo=args.magnitude[0],
                            magnitude_hi=args.magnitude[1]),
        trim=TrimConfig(node_limit=args.node_limit,
                        cstep_restarts=args.restarts),
        load_scale=tuple(args.load_scale))
    print(f"\n== {case.name}, {args.method}, p0={args.p0:.2%}, "
          f"median over {len(args.seeds)} seeds ==")
    print(report.to_markdown())
    if args.out:
        path = pathlib.Path(args.out)
        path.write_text(report.to_csv())
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
