"""Accuracy and timing evaluation for fitted linear power-flow models.

The accuracy metric is the componentwise relative error with a floor
on the denominator:

    e_ij = |yhat_ij - y_ij| / max(|y_ij|, floor)

reported as percentages, both the maximum and the mean over the whole
grid.  The floor (default 1e-3 p.u.) keeps near-zero injections from
exploding the ratio.

``run_comparison`` drives the full experiment: per seed it generates
clean train/test sets, contaminates the training set at the actual
ratio p0, fits every requested method, and evaluates each model on the
clean pre-injection training data and on the clean test set (scoring
against corrupted rows would reward fitting the outliers).  Rows are
aggregated across seeds by median.  Fit failures become per-row
statuses; the sweep never aborts.

Determinism: the default trimmed-solver budget inside the sweep is
node-based, not time-based, so repeated runs produce identical error
rows (wall times vary, and are excluded from that guarantee).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .datagen import Dataset, OutlierSpec, generate_samples, inject_outliers, to_problem
from .estimators import (HuberConfig, LnrConfig, LpfModel, RegressionProblem,
                         SvrConfig, fit_huber, fit_lav, fit_lnr, fit_ols,
                         fit_svr)
from .netcase import NetworkCase
from .trimmed import (TrimConfig, trim_cstep, trim_exact, trim_s1, trim_s2)

DEFAULT_FLOOR = 1e-3


def relative_error_grid(y_hat: np.ndarray, y: np.ndarray,
                        floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """Componentwise floored relative errors, as fractions (not %)."""
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    y_hat = np.asarray(y_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_hat.shape != y.shape:
        raise ValueError(f"shape mismatch {y_hat.shape} vs {y.shape}")
    return np.abs(y_hat - y) / np.maximum(np.abs(y), floor)


def relative_errors(model: LpfModel, data: Dataset,
                    floor: float = DEFAULT_FLOOR,
                    x_columns: np.ndarray | None = None) -> tuple[float, float]:
    """(max, average) relative error of ``model`` on ``data``, in percent.

    Computed over all rows of the given split.  ``x_columns`` selects
    the dataset columns the model was fitted on (needed when constant
    columns were dropped by :func:`trimlpf.datagen.to_problem`).
    """
    x = data.x if x_columns is None else data.x[:, x_columns]
    grid = relative_error_grid(model.predict(x), data.y, floor)
    return 100.0 * float(grid.max()), 100.0 * float(grid.mean())


@dataclass
class ReportRow:
    """One (method, p, p0, split, seed) cell of an experiment.

    ``p`` is None for methods without a trimming ratio; ``seed`` is
    None on median-aggregated rows.  Errors are percentages.
    """

    method: str
    p: float | None
    p0: float
    split: str
    seed: int | None
    max_rel_err: float
    avg_rel_err: float
    wall_time: float
    status: str = "ok"

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be train/test, got {self.split!r}")
        if np.isfinite(self.max_rel_err) and np.isfinite(self.avg_rel_err):
            if not (self.max_rel_err >= self.avg_rel_err >= 0.0):
                raise ValueError(
                    f"need max >= avg >= 0, got {self.max_rel_err} / "
                    f"{self.avg_rel_err}")


_CSV_HEADER = "method,p,p0,split,seed,max_rel_err,avg_rel_err,wall_time,status"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


@dataclass
class ExperimentReport:
    """Per-seed rows plus their median aggregation, with CSV/markdown."""

    rows: list[ReportRow] = field(default_factory=list)
    aggregated: list[ReportRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [_CSV_HEADER]
        for row in self.rows + self.aggregated:
            lines.append(",".join(_csv_cell(v) for v in (
                row.method, row.p, row.p0, row.split,
                "median" if row.seed is None else row.seed,
                row.max_rel_err, row.avg_rel_err, row.wall_time, row.status)))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        """Aligned table of the median rows, one line per (method, p, p0)."""
        cells: dict[tuple, dict] = {}
        for row in self.aggregated:
            key = (row.method, row.p, row.p0)
            cell = cells.setdefault(key, {"status": row.status, "time": 0.0})
            cell[row.split] = (row.max_rel_err, row.avg_rel_err)
            cell["time"] = max(cell["time"], row.wall_time)
        header = ["method", "p", "p0", "train max%", "train avg%",
                  "test max%", "test avg%", "fit s", "status"]
        table = [header]
        for (method, p, p0), cell in cells.items():
            tr = cell.get("train", (float("nan"),) * 2)
            te = cell.get("test", (float("nan"),) * 2)
            table.append([
                method, "-" if p is None else f"{p:.3g}", f"{p0:.3g}",
                f"{tr[0]:.4g}", f"{tr[1]:.4g}", f"{te[0]:.4g}",
                f"{te[1]:.4g}", f"{cell['time']:.3g}", cell["status"]])
        widths = [max(len(r[c]) for r in table) for c in range(len(header))]
        out = []
        for idx, r in enumerate(table):
            out.append("| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |")
            if idx == 0:
                out.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
        return "\n".join(out) + "\n"


def _status_of(model: LpfModel) -> str:
    d = model.diagnostics
    if d.get("hit_removal_cap"):
        return "hit_cap"
    if d.get("converged") is False:
        return "max_iter"
    return "ok"


def _fit_trimmed(solver: Callable, needs_cfg: bool):
    def run(prob: RegressionProblem, ctx: dict):
        cfg = replace(ctx["trim"], p=ctx["p"], seed=ctx["seed"])
        if needs_cfg:
            result = solver(prob, cfg)
        else:
            result = solver(prob, cfg.p, cfg.cstep_restarts, cfg.seed)
        return result.model, result.status.value
    return run


def _fit_plain(fitter: Callable, cfg_builder: Callable | None = None):
    def run(prob: RegressionProblem, ctx: dict):
        if cfg_builder is None:
            model = fitter(prob)
        else:
            model = fitter(prob, cfg_builder(ctx["options"], ctx["seed"]))
        return model, _status_of(model)
    return run


METHODS: dict[str, Callable] = {
    "ols": _fit_plain(fit_ols),
    "huber": _fit_plain(fit_huber, lambda o, s: HuberConfig(**o)),
    "lav": _fit_plain(fit_lav),
    "svr": _fit_plain(fit_svr, lambda o, s: SvrConfig(**o)),
    "lnr": _fit_plain(fit_lnr, lambda o, s: LnrConfig(**o)),
    "trim_exact": _fit_trimmed(trim_exact, True),
    "trim_s1": _fit_trimmed(trim_s1, True),
    "trim_s2": _fit_trimmed(trim_s2, True),
    "trim_cstep": _fit_trimmed(trim_cstep, False),
}

TRIMMED_METHODS = ("trim_exact", "trim_s1", "trim_s2", "trim_cstep")


def seed_streams(seed: int) -> tuple[int, int, int]:
    """Derive (train, test, outlier) stream seeds from one experiment seed.

    Shared with the CLI so files it generates match what
    :func:`run_comparison` would build internally for the same seed.
    """
    words = np.random.SeedSequence(seed).generate_state(3)
    return int(words[0]), int(words[1]), int(words[2])


def run_comparison(case: NetworkCase, methods: list[str],
                   p_values: list[float], p0: float,
                   sizes: dict, seeds: list[int],
                   direction: str = "volt_to_power",
                   outlier: OutlierSpec | None = None,
                   trim: TrimConfig | None = None,
                   method_options: dict | None = None,
                   load_scale: tuple[float, float] = (0.8, 1.2),
                   floor: float = DEFAULT_FLOOR) -> ExperimentReport:
    """Fit and score every (method, p, seed) cell on one network case.

    ``sizes`` holds m_train and m_test.  Trimmed methods run once per
    entry of ``p_values``; other methods ignore the ratio and run once
    per seed.  ``outlier`` (minus its ratio/seed, which the sweep owns)
    and ``trim`` act as templates; per-method keyword overrides come
    from ``method_options``.
    """
    unknown = [name for name in methods if name not in METHODS]
    if unknown:
        raise ValueError(
            f"unknown methods {unknown}; registered: {sorted(METHODS)}")
    m_train, m_test = int(sizes["m_train"]), int(sizes["m_test"])
    outlier = outlier if outlier is not None else OutlierSpec()
    trim = trim if trim is not None else TrimConfig(node_limit=5000,
                                                   cstep_restarts=10)
    method_options = method_options or {}
    rows: list[ReportRow] = []
    for seed in seeds:
        train_seed, test_seed, bad_seed = seed_streams(seed)
        clean_train = generate_samples(case, m_train, *load_scale,
                                       direction=direction, seed=train_seed)
        clean_test = generate_samples(case, m_test, *load_scale,
                                      direction=direction, seed=test_seed)
        if p0 > 0:
            train = inject_outliers(
                clean_train, replace(outlier, ratio=p0, seed=bad_seed))
        else:
            train = clean_train
        prob, kept = to_problem(train)
        for name in methods:
            ratios = p_values if name in TRIMMED_METHODS else [None]
            for p in ratios:
                ctx = {"p": p, "trim": trim, "seed": seed,
                       "options": method_options.get(name, {})}
                t0 = time.perf_counter()
                try:
                    model, status = METHODS[name](prob, ctx)
                except Exception as exc:  # recorded, sweep continues
                    wall = time.perf_counter() - t0
                    msg = f"error: {type(exc).__name__}: {exc}"
                    for split in ("train", "test"):
                        rows.append(ReportRow(name, p, p0, split, seed,
                                              float("nan"), float("nan"),
                                              wall, msg))
                    continue
                wall = time.perf_counter() - t0
                tr_max, tr_avg = relative_errors(model, clean_train, floor, kept)
                te_max, te_avg = relative_errors(model, clean_test, floor, kept)
                rows.append(ReportRow(name, p, p0, "train", seed,
                                      tr_max, tr_avg, wall, status))
                rows.append(ReportRow(name, p, p0, "test", seed,
                                      te_max, te_avg, wall, status))
    aggregated = _aggregate(rows)
    meta = {
        "case": case.name,
        "direction": str(direction),
        "m_train": m_train,
        "m_test": m_test,
        "p0": p0,
        "p_values": list(p_values),
        "seeds": list(seeds),
        "floor": floor,
    }
    return ExperimentReport(rows, aggregated, meta)


def _aggregate(rows: list[ReportRow]) -> list[ReportRow]:
    """Median across seeds per (method, p, p0, split), order-preserving."""
    groups: dict[tuple, list[ReportRow]] = {}
    for row in rows:
        groups.setdefault((row.method, row.p, row.p0, row.split), []).append(row)
    out = []
    for (method, p, p0, split), members in groups.items():
        statuses = sorted({r.status for r in members})
        good = [r for r in members if not r.status.startswith("error")]
        if not good:
            out.append(ReportRow(method, p, p0, split, None, float("nan"),
                                 float("nan"),
                                 float(np.median([r.wall_time for r in members])),
                                 "|".join(statuses)))
            continue
        out.append(ReportRow(
            method, p, p0, split, None,
            float(np.median([r.max_rel_err for r in good])),
            float(np.median([r.avg_rel_err for r in good])),
            float(np.median([r.wall_time for r in good])),
            "|".join(statuses)))
    return out
