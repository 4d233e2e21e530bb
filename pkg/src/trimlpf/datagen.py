"""Dataset generation for linear power-flow fitting.

Samples are produced by scaling every bus load by independent uniform
draws, solving the AC power flow, and recording voltage magnitudes and
angles along with active and reactive injections at non-slack buses.
Synthetic outliers are injected additively in units of per-column
standard deviation, with ground truth recorded so experiments can
score recovery and evaluate against the clean copy.

Columns follow the network's bus order with the slack bus removed:

    volt_to_power   x = [v_mag(non-slack) | v_ang(non-slack)]
                    y = [p_inj(non-slack) | q_inj(non-slack)]
    power_to_volt   the same blocks swapped

PV bus voltage magnitudes are pinned at their setpoints, so those x
columns are constant across samples; they are kept in the dataset (the
format is a faithful record of the grid state) and filtered out when
building a regression problem via :func:`to_problem`, which drops
zero-variance columns that would otherwise be collinear with the
intercept.

Persistence is a CSV of samples plus a JSON sidecar holding the seed,
direction, case name, outlier mask and any injection records; floats
are written with 17 significant digits so round-trips are bitwise.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .estimators import RegressionProblem
from .netcase import NetworkCase, build_ybus
from .powerflow import PowerFlowError, solve_newton

SCHEMA_VERSION = 1


class DatasetError(RuntimeError):
    """Dataset generation failed (e.g. too many diverged power flows)."""


class DatasetSchemaError(ValueError):
    """A persisted dataset does not match the expected layout."""


class Direction(str, Enum):
    VOLT_TO_POWER = "volt_to_power"
    POWER_TO_VOLT = "power_to_volt"


def _as_direction(value) -> Direction:
    if isinstance(value, Direction):
        return value
    try:
        return Direction(value)
    except ValueError:
        raise ValueError(
            f"direction must be one of "
            f"{[d.value for d in Direction]}, got {value!r}") from None


@dataclass
class Dataset:
    """Paired samples with ground-truth contamination bookkeeping.

    ``meta`` always carries case name, direction, seed and
    ``actual_outlier_ratio``; generated sets add column labels
    ("vm:4", "p:7", ...) and injection records.
    """

    x: np.ndarray
    y: np.ndarray
    outlier_mask: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.outlier_mask = np.asarray(self.outlier_mask, dtype=bool)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ValueError("x and y must be 2-D")
        if not (self.x.shape[0] == self.y.shape[0] == self.outlier_mask.shape[0]):
            raise ValueError(
                f"row counts disagree: x {self.x.shape[0]}, "
                f"y {self.y.shape[0]}, mask {self.outlier_mask.shape[0]}")

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n_x(self) -> int:
        return self.x.shape[1]

    @property
    def n_y(self) -> int:
        return self.y.shape[1]

    def copy(self) -> "Dataset":
        return Dataset(self.x.copy(), self.y.copy(), self.outlier_mask.copy(),
                       json.loads(json.dumps(self.meta)))


@dataclass
class OutlierSpec:
    """How contamination is injected.

    ``ratio`` flags floor(ratio * m) rows.  Each flagged row gets
    ``components_per_sample`` perturbed components: an integer, the
    string "all", or an inclusive (lo, hi) range drawn per row; the
    default (1, 3) matches the documented scheme of one to three bad
    components per flagged sample.  Perturbations are additive
    sign * u * sigma_c with u ~ Uniform[magnitude_lo, magnitude_hi]
    and sigma_c the component's standard deviation over the clean set;
    constant components are never selected.
    """

    ratio: float = 0.08
    magnitude_lo: float = 10.0
    magnitude_hi: float = 30.0
    components_per_sample: object = (1, 3)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio < 0.5:
            raise ValueError(f"ratio must be in [0, 0.5), got {self.ratio}")
        if not 0.0 < self.magnitude_lo <= self.magnitude_hi:
            raise ValueError(
                f"need 0 < magnitude_lo <= magnitude_hi, got "
                f"[{self.magnitude_lo}, {self.magnitude_hi}]")
        c = self.components_per_sample
        if isinstance(c, str):
            if c != "all":
                raise ValueError(f'components_per_sample string must be "all", got {c!r}')
        elif isinstance(c, (tuple, list)):
            lo, hi = c
            if not (1 <= int(lo) <= int(hi)):
                raise ValueError(f"bad components_per_sample range {c}")
            self.components_per_sample = (int(lo), int(hi))
        else:
            if int(c) < 1:
                raise ValueError(f"components_per_sample must be >= 1, got {c}")
            self.components_per_sample = int(c)


def _nonslack_indices(case: NetworkCase) -> np.ndarray:
    return np.array([i for i in range(case.n_buses) if i != case.slack_index],
                    dtype=int)


def generate_samples(case: NetworkCase, m: int, load_scale_lo: float = 0.8,
                     load_scale_hi: float = 1.2,
                     direction: Direction | str = Direction.VOLT_TO_POWER,
                     seed: int = 0, tol: float = 1e-8,
                     max_iter: int = 20) -> Dataset:
    """Draw m operating points of ``case`` and solve each power flow.

    Every bus load (P and Q independently) is multiplied by its own
    uniform draw from [load_scale_lo, load_scale_hi].  Draws whose flow
    fails to converge are discarded and redrawn, up to 10 * m attempts
    in total; past that a DatasetError reports the success ratio.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if not 0.0 < load_scale_lo <= load_scale_hi:
        raise ValueError(
            f"need 0 < load_scale_lo <= load_scale_hi, got "
            f"[{load_scale_lo}, {load_scale_hi}]")
    direction = _as_direction(direction)
    rng = np.random.default_rng(seed)
    ybus = build_ybus(case)
    ns = _nonslack_indices(case)
    n = case.n_buses
    bus_ids = [case.buses[i].id for i in ns]
    volt_labels = [f"vm:{b}" for b in bus_ids] + [f"va:{b}" for b in bus_ids]
    power_labels = [f"p:{b}" for b in bus_ids] + [f"q:{b}" for b in bus_ids]

    volt_rows = np.empty((m, 2 * len(ns)))
    power_rows = np.empty((m, 2 * len(ns)))
    produced = 0
    attempts = 0
    limit = 10 * m
    while produced < m:
        if attempts >= limit:
            raise DatasetError(
                f"power flow converged for only {produced} of {attempts} "
                f"load draws ({produced / attempts:.0%})")
        attempts += 1
        sp = rng.uniform(load_scale_lo, load_scale_hi, size=n)
        sq = rng.uniform(load_scale_lo, load_scale_hi, size=n)
        buses = [dataclasses.replace(b, p_load=b.p_load * sp[i],
                                     q_load=b.q_load * sq[i])
                 for i, b in enumerate(case.buses)]
        scaled = NetworkCase(case.base_mva, buses, case.branches, case.name)
        try:
            sol = solve_newton(scaled, ybus=ybus, tol=tol, max_iter=max_iter)
        except PowerFlowError:
            continue
        volt_rows[produced] = np.concatenate([sol.v_mag[ns], sol.v_ang[ns]])
        power_rows[produced] = np.concatenate([sol.p_inj[ns], sol.q_inj[ns]])
        produced += 1

    if direction is Direction.VOLT_TO_POWER:
        x, y = volt_rows, power_rows
        x_labels, y_labels = volt_labels, power_labels
    else:
        x, y = power_rows, volt_rows
        x_labels, y_labels = power_labels, volt_labels
    meta = {
        "case": case.name,
        "direction": direction.value,
        "seed": seed,
        "actual_outlier_ratio": 0.0,
        "x_labels": x_labels,
        "y_labels": y_labels,
        "load_scale": [load_scale_lo, load_scale_hi],
        "flow_attempts": attempts,
    }
    return Dataset(x, y, np.zeros(m, dtype=bool), meta)


def inject_outliers(clean: Dataset, spec: OutlierSpec) -> Dataset:
    """Contaminate floor(ratio * m) distinct rows of a copy of ``clean``.

    Components are drawn among non-constant columns of the stacked
    (x | y) row; each gets an additive error of sign * u * sigma_c,
    u ~ Uniform[magnitude_lo, magnitude_hi].  Each perturbation is
    recorded in meta["injected"] as [row, column, delta, original]
    (column indexing runs over x then y): keeping the original value,
    not just the delta, lets :func:`strip_injected` restore the clean
    set bitwise.
    """
    out = clean.copy()
    m = out.m
    n_flag = int(np.floor(spec.ratio * m + 1e-9))
    if spec.ratio > 0 and n_flag < 1:
        raise ValueError(
            f"ratio {spec.ratio} flags no sample at m={m}; need ratio >= 1/m")
    if n_flag == 0:
        return out
    rng = np.random.default_rng(spec.seed)
    rows = np.sort(rng.choice(m, size=n_flag, replace=False))
    stacked = np.hstack([out.x, out.y])
    sigma = stacked.std(axis=0)
    # ptp, not sigma, decides eligibility: std of a bitwise-constant
    # column can round to ~1e-16, which would let the injector add
    # invisible deltas that later defeat constant-column dropping.
    eligible = np.flatnonzero(np.ptp(stacked, axis=0) > 0)
    if eligible.size == 0:
        raise ValueError("every column is constant; nothing can be perturbed")
    injected = []
    cps = spec.components_per_sample
    for row in rows:
        if cps == "all":
            count = eligible.size
        elif isinstance(cps, tuple):
            count = int(rng.integers(cps[0], cps[1] + 1))
        else:
            count = cps
        count = min(count, eligible.size)
        cols = rng.choice(eligible, size=count, replace=False)
        for col in cols:
            sign = -1.0 if rng.random() < 0.5 else 1.0
            u = rng.uniform(spec.magnitude_lo, spec.magnitude_hi)
            delta = sign * u * sigma[col]
            if col < out.n_x:
                original = float(out.x[row, col])
                out.x[row, col] += delta
            else:
                original = float(out.y[row, col - out.n_x])
                out.y[row, col - out.n_x] += delta
            injected.append([int(row), int(col), float(delta), original])
    out.outlier_mask[rows] = True
    out.meta["actual_outlier_ratio"] = n_flag / m
    out.meta["injected"] = injected
    out.meta["outlier_seed"] = spec.seed
    return out


def strip_injected(contaminated: Dataset) -> Dataset:
    """Undo recorded injections, returning the clean twin bitwise."""
    out = contaminated.copy()
    for row, col, _delta, original in out.meta.get("injected", []):
        if col < out.n_x:
            out.x[row, col] = original
        else:
            out.y[row, col - out.n_x] = original
    out.outlier_mask[:] = False
    out.meta["actual_outlier_ratio"] = 0.0
    out.meta.pop("injected", None)
    return out


def to_problem(ds: Dataset, fit_intercept: bool = True,
               drop_constant_columns: bool = True
               ) -> tuple[RegressionProblem, np.ndarray]:
    """Build a regression problem from a dataset.

    Zero-variance x columns (PV setpoints and the like) are dropped by
    default since they are collinear with the intercept; the second
    return value lists the kept column indices so coefficients can be
    mapped back to dataset columns.
    """
    if drop_constant_columns:
        kept = np.flatnonzero(np.ptp(ds.x, axis=0) > 0)
        if kept.size == 0:
            raise ValueError("all x columns are constant")
    else:
        kept = np.arange(ds.n_x)
    return RegressionProblem(ds.x[:, kept], ds.y, fit_intercept), kept


def row_voltages(ds: Dataset, case: NetworkCase, i: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild full (v_mag, v_ang) vectors for sample ``i``.

    The voltage block lives in x for volt_to_power and in y for
    power_to_volt; the slack entries, which never enter the dataset,
    come from the case (setpoint magnitude, zero angle).
    """
    direction = _as_direction(ds.meta["direction"])
    block = ds.x[i] if direction is Direction.VOLT_TO_POWER else ds.y[i]
    ns = _nonslack_indices(case)
    if block.shape[0] != 2 * ns.size:
        raise ValueError(
            f"sample width {block.shape[0]} does not match case "
            f"({2 * ns.size} voltage columns expected)")
    v_mag = np.empty(case.n_buses)
    v_ang = np.zeros(case.n_buses)
    v_mag[case.slack_index] = case.buses[case.slack_index].v_setpoint
    v_mag[ns] = block[:ns.size]
    v_ang[ns] = block[ns.size:]
    return v_mag, v_ang


def save_dataset(d: Dataset, path) -> None:
    """Write ``path`` (CSV) plus a same-stem .json sidecar."""
    path = Path(path)
    header = ",".join([f"x{j}" for j in range(d.n_x)]
                      + [f"y{j}" for j in range(d.n_y)])
    table = np.hstack([d.x, d.y])
    lines = [header]
    for row in table:
        lines.append(",".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n")
    extra = {k: v for k, v in d.meta.items()
             if k not in ("case", "direction", "seed")}
    sidecar = {
        "schema": SCHEMA_VERSION,
        "seed": d.meta.get("seed"),
        "direction": d.meta.get("direction"),
        "case": d.meta.get("case"),
        "outlier_mask": [bool(v) for v in d.outlier_mask],
        "meta": extra,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1) + "\n")


def load_dataset(path) -> Dataset:
    """Read a CSV + sidecar pair written by :func:`save_dataset`."""
    path = Path(path)
    side_path = path.with_suffix(".json")
    if not path.exists():
        raise DatasetSchemaError(f"missing dataset file {path}")
    if not side_path.exists():
        raise DatasetSchemaError(f"missing sidecar {side_path}")
    try:
        sidecar = json.loads(side_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetSchemaError(f"unreadable sidecar {side_path}: {exc}") from exc
    if sidecar.get("schema") != SCHEMA_VERSION:
        raise DatasetSchemaError(
            f"schema version {sidecar.get('schema')!r} unsupported "
            f"(expected {SCHEMA_VERSION})")
    text = path.read_text().strip().splitlines()
    if not text:
        raise DatasetSchemaError(f"{path} is empty")
    cols = text[0].split(",")
    n_x = sum(1 for c in cols if c.startswith("x"))
    n_y = sum(1 for c in cols if c.startswith("y"))
    if n_x + n_y != len(cols) or n_x == 0 or n_y == 0:
        raise DatasetSchemaError(f"bad header {text[0]!r}")
    expected = [f"x{j}" for j in range(n_x)] + [f"y{j}" for j in range(n_y)]
    if cols != expected:
        raise DatasetSchemaError(f"bad header {text[0]!r}")
    rows = []
    for ln, line in enumerate(text[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(cols):
            raise DatasetSchemaError(
                f"{path}:{ln}: {len(parts)} columns, header has {len(cols)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise DatasetSchemaError(f"{path}:{ln}: {exc}") from exc
    table = np.array(rows, dtype=float).reshape(len(rows), len(cols))
    mask = np.array(sidecar.get("outlier_mask", []), dtype=bool)
    if mask.shape[0] != table.shape[0]:
        raise DatasetSchemaError(
            f"mask length {mask.shape[0]} != {table.shape[0]} samples")
    meta = dict(sidecar.get("meta", {}))
    meta["case"] = sidecar.get("case")
    meta["direction"] = sidecar.get("direction")
    meta["seed"] = sidecar.get("seed")
    return Dataset(table[:, :n_x], table[:, n_x:], mask, meta)
