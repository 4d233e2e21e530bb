"""Command-line pipeline: generate datasets, fit models, report, export.

    trimlpf generate   --config exp.toml [--out DIR] [--seed-override K]
    trimlpf fit        --config exp.toml [--out DIR] [--seed-override K]
    trimlpf report     --config exp.toml [--out DIR] [--seed-override K]
    trimlpf export-mps --config exp.toml --which miqp [--dataset PATH]

Artifacts live under ``--out`` (default: the config's output_dir), one
``seed_<k>/`` directory per experiment seed holding train/test CSV+JSON
pairs and one ``model_<method>.json`` per fitted method.  ``report``
reads those files back and emits ``report.csv`` and ``report.md`` whose
rows match a direct :func:`trimlpf.evaluate.run_comparison` call with
the same config (wall times excepted).

Exit codes: 0 success, 1 validation failure, 2 runtime failure.  All
failure detail goes to stderr as lines prefixed ``error:``.  The
``--threads`` flag is accepted and validated for interface stability,
but execution is sequential; results never depend on its value.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .datagen import (DatasetError, DatasetSchemaError, inject_outliers,
                      generate_samples, load_dataset, save_dataset,
                      strip_injected, to_problem)
from .estimators import LpfModel
from .evaluate import (METHODS, TRIMMED_METHODS, ExperimentReport, ReportRow,
                       _aggregate, relative_errors, seed_streams)
from .mpsio import export_mps
from .netcase import CaseError, load_case
from .powerflow import PowerFlowError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _ValidationFailure(Exception):
    """Carries one message per missing/invalid input, all reported."""

    def __init__(self, messages):
        super().__init__("; ".join(messages))
        self.messages = list(messages)


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _seed_dir(out: Path, seed: int) -> Path:
    return out / f"seed_{seed}"


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def cmd_generate(cfg: RunConfig, out: Path) -> int:
    case = load_case(cfg.case_path)
    for seed in cfg.seeds:
        train_seed, test_seed, bad_seed = seed_streams(seed)
        d = _seed_dir(out, seed)
        d.mkdir(parents=True, exist_ok=True)
        train = generate_samples(case, cfg.m_train, cfg.load_scale_lo,
                                 cfg.load_scale_hi, cfg.direction, train_seed)
        if cfg.outlier.ratio > 0:
            train = inject_outliers(train, replace(cfg.outlier, seed=bad_seed))
        test = generate_samples(case, cfg.m_test, cfg.load_scale_lo,
                                cfg.load_scale_hi, cfg.direction, test_seed)
        for name, ds in (("train", train), ("test", test)):
            path = d / f"{name}.csv"
            save_dataset(ds, path)
            flagged = int(ds.outlier_mask.sum())
            print(f"wrote {path} ({ds.m} samples, {flagged} flagged)")
            print(f"wrote {path.with_suffix('.json')}")
    return EXIT_OK


def _require_files(paths) -> None:
    missing = [str(p) for p in paths if not Path(p).exists()]
    if missing:
        raise _ValidationFailure([f"missing file: {p}" for p in missing])


def cmd_fit(cfg: RunConfig, out: Path) -> int:
    _require_files([p for seed in cfg.seeds
                    for p in (_seed_dir(out, seed) / "train.csv",
                              _seed_dir(out, seed) / "train.json")])
    failures = 0
    for seed in cfg.seeds:
        d = _seed_dir(out, seed)
        train = load_dataset(d / "train.csv")
        prob, kept = to_problem(train)
        for name in cfg.methods:
            ctx = {"p": cfg.trim.p, "trim": cfg.trim, "seed": seed,
                   "options": cfg.method_options.get(name, {})}
            t0 = time.perf_counter()
            try:
                model, status = METHODS[name](prob, ctx)
            except Exception as exc:
                wall = time.perf_counter() - t0
                status = f"error: {type(exc).__name__}: {exc}"
                record = {"method": name, "seed": seed, "status": status,
                          "wall_time": wall}
                failures += 1
                _err(f"fit {name} seed {seed}: {exc}")
            else:
                wall = time.perf_counter() - t0
                record = {
                    "method": name,
                    "seed": seed,
                    "w": model.w.tolist(),
                    "b": model.b.tolist(),
                    "z": model.z.tolist(),
                    "objective": model.objective,
                    "status": status,
                    "wall_time": wall,
                    "x_columns": kept.tolist(),
                    "diagnostics": _sanitize(model.diagnostics),
                }
            path = d / f"model_{name}.json"
            path.write_text(json.dumps(record, indent=1) + "\n")
            print(f"wrote {path} ({status}, {wall:.3g}s)")
    return EXIT_RUNTIME if failures else EXIT_OK


def cmd_report(cfg: RunConfig, out: Path) -> int:
    needed = []
    for seed in cfg.seeds:
        d = _seed_dir(out, seed)
        needed += [d / "train.csv", d / "train.json",
                   d / "test.csv", d / "test.json"]
        needed += [d / f"model_{name}.json" for name in cfg.methods]
    _require_files(needed)
    rows: list[ReportRow] = []
    p0 = cfg.outlier.ratio
    for seed in cfg.seeds:
        d = _seed_dir(out, seed)
        train = load_dataset(d / "train.csv")
        test = load_dataset(d / "test.csv")
        clean_train = strip_injected(train)
        _, kept = to_problem(train)
        for name in cfg.methods:
            record = json.loads((d / f"model_{name}.json").read_text())
            p = cfg.trim.p if name in TRIMMED_METHODS else None
            wall = float(record.get("wall_time", 0.0))
            status = record.get("status", "ok")
            if status.startswith("error"):
                for split in ("train", "test"):
                    rows.append(ReportRow(name, p, p0, split, seed,
                                          float("nan"), float("nan"),
                                          wall, status))
                continue
            model = LpfModel(
                w=np.array(record["w"], dtype=float),
                b=np.array(record["b"], dtype=float),
                z=np.array(record["z"], dtype=bool),
                objective=float(record["objective"]),
                diagnostics={},
            )
            tr = relative_errors(model, clean_train, x_columns=kept)
            te = relative_errors(model, test, x_columns=kept)
            rows.append(ReportRow(name, p, p0, "train", seed,
                                  tr[0], tr[1], wall, status))
            rows.append(ReportRow(name, p, p0, "test", seed,
                                  te[0], te[1], wall, status))
    report = ExperimentReport(rows, _aggregate(rows), {
        "case": Path(cfg.case_path).stem,
        "direction": cfg.direction,
        "m_train": cfg.m_train,
        "m_test": cfg.m_test,
        "p0": p0,
        "p_values": [cfg.trim.p],
        "seeds": list(cfg.seeds),
    })
    csv_path = out / "report.csv"
    md_path = out / "report.md"
    csv_path.write_text(report.to_csv())
    md_path.write_text(report.to_markdown())
    print(f"wrote {csv_path} ({len(report.rows)} rows)")
    print(f"wrote {md_path}")
    return EXIT_OK


def cmd_export_mps(cfg: RunConfig, out: Path, which: str,
                   dataset: str | None) -> int:
    if dataset is None:
        dataset = _seed_dir(out, cfg.seeds[0]) / "train.csv"
    _require_files([dataset, Path(dataset).with_suffix(".json")])
    ds = load_dataset(dataset)
    prob, _ = to_problem(ds)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"model_{which}.mps"
    model = export_mps(prob, cfg.trim, which, path)
    print(f"wrote {path} ({len(model.variables)} columns, "
          f"{len(model.constraints)} rows)")
    print(f"wrote {path.with_suffix('.json')}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimlpf",
        description="Robust linear power-flow model fitting pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML config file")
    common.add_argument("--out", default=None,
                        help="output directory (default: config output_dir)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap (validated; execution is sequential)")
    common.add_argument("--seed-override", type=int, default=None,
                        help="replace the config seed list with this one seed")
    sub.add_parser("generate", parents=[common],
                   help="write train/test datasets per seed")
    sub.add_parser("fit", parents=[common],
                   help="fit configured methods on generated datasets")
    sub.add_parser("report", parents=[common],
                   help="evaluate fitted models into report.csv / report.md")
    exp = sub.add_parser("export-mps", parents=[common],
                         help="emit the mixed-integer model as an MPS file")
    exp.add_argument("--which", choices=("miqp", "milp"), default="miqp")
    exp.add_argument("--dataset", default=None,
                     help="dataset CSV (default: first seed's train.csv)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        _err(f"--threads: must be >= 1, got {args.threads}")
        return EXIT_VALIDATION
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    if args.seed_override is not None:
        cfg.seeds = [args.seed_override]
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    try:
        if args.command == "generate":
            return cmd_generate(cfg, out)
        if args.command == "fit":
            return cmd_fit(cfg, out)
        if args.command == "report":
            return cmd_report(cfg, out)
        if args.command == "export-mps":
            return cmd_export_mps(cfg, out, args.which, args.dataset)
        raise AssertionError(f"unhandled command {args.command}")
    except _ValidationFailure as exc:
        for msg in exc.messages:
            _err(msg)
        return EXIT_VALIDATION
    except (CaseError, DatasetError, DatasetSchemaError, PowerFlowError,
            ValueError, OSError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
