"""Export the trimmed-fit mixed-integer models as MPS files.

Two encodings of the budgeted outlier-flag problem are supported:

miqp    quadratic objective sum(u_ij^2) with two big-M residual rows
        per (sample, output) pair:
            a_i . w_j - u_ij - M z_i <= y_ij
           -a_i . w_j - u_ij - M z_i <= -y_ij
        plus one cardinality row sum(z) <= k

milp    linear objective via absolute-value splitting: per pair an
        equality  -a_i . w_j + s_ij - e+_ij + e-_ij = -y_ij  with
        e+, e- >= 0, and the slack tied to the flag by
        s_ij - M z_i <= 0 and s_ij + M z_i >= 0, plus the same
        cardinality row

Files are fixed-format MPS (fields starting at character columns 2,
5, 15, 25, 40, 50) with binaries declared both by INTORG/INTEND
markers and BV bound lines.  The quadratic objective uses a QMATRIX
section under the half-factor convention (objective includes
(1/2) x'Qx), so each u_ij carries a diagonal entry of 2.0.  A JSON
sidecar maps the 8-character MPS column names back to model roles.

Column name scheme: OM000001.. model coefficients (output-major, the
intercept term last within each output), U0000001.. quadratic
auxiliaries, S0000001.. slacks, P0000001../N0000001.. positive and
negative residual parts, Z0000001.. binary flags.  Row names:
RA/RB (big-M pair rows), RD (residual definition rows), CARD, OBJ.

Minimization is implied, per the classic format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .estimators import RegressionProblem
from .trimmed import TrimConfig, trim_budget


class MpsFormatError(ValueError):
    """Raised when parsing text that is not the MPS this module writes."""


@dataclass
class MpsVariable:
    name: str
    kind: str  # coef | aux_quad | slack | pos_part | neg_part | flag
    bound: str  # "FR", "BV" or "" (default nonnegative)
    integer: bool = False
    meta: dict = field(default_factory=dict)


@dataclass
class MpsConstraint:
    name: str
    sense: str  # L | G | E
    coeffs: dict[str, float]
    rhs: float


@dataclass
class MpsModel:
    """In-memory form of the exported file.

    ``objective_quadratic`` holds Q entries under the half-factor
    convention.  ``validate`` enforces that every referenced column is
    declared.
    """

    name: str
    objective_name: str
    objective_linear: dict[str, float]
    objective_quadratic: dict[tuple[str, str], float]
    variables: list[MpsVariable]
    constraints: list[MpsConstraint]
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        declared = {v.name for v in self.variables}
        for con in self.constraints:
            unknown = set(con.coeffs) - declared
            if unknown:
                raise MpsFormatError(
                    f"row {con.name} references undeclared columns {sorted(unknown)}")
        unknown = set(self.objective_linear) - declared
        if unknown:
            raise MpsFormatError(f"objective references {sorted(unknown)}")
        for a, b in self.objective_quadratic:
            if a not in declared or b not in declared:
                raise MpsFormatError(f"quadratic term ({a},{b}) undeclared")

    def constraint_names(self) -> list[str]:
        return [c.name for c in self.constraints]


def build_trim_model(prob: RegressionProblem, cfg: TrimConfig,
                     which: str = "miqp") -> MpsModel:
    """Assemble the chosen mixed-integer encoding of the trimmed fit."""
    if which not in ("miqp", "milp"):
        raise ValueError(f'which must be "miqp" or "milp", got {which!r}')
    m, d, n_y = prob.m, prob.n_params, prob.n_y
    k = trim_budget(cfg.p, m)
    a = prob.design()
    y = prob.y
    big_m = cfg.big_m

    variables: list[MpsVariable] = []
    col_map: dict[str, dict] = {}

    def add(name, kind, bound, integer=False, **meta):
        variables.append(MpsVariable(name, kind, bound, integer, dict(meta)))
        col_map[name] = {"kind": kind, **meta}

    omega = [[f"OM{j * d + l + 1:06d}" for l in range(d)] for j in range(n_y)]
    for j in range(n_y):
        for l in range(d):
            term = "intercept" if (prob.fit_intercept and l == d - 1) else l
            add(omega[j][l], "coef", "FR", output=j, term=term)
    zed = [f"Z{i + 1:07d}" for i in range(m)]
    pair = lambda i, j: i * n_y + j

    constraints: list[MpsConstraint] = []
    obj_linear: dict[str, float] = {}
    obj_quad: dict[tuple[str, str], float] = {}

    if which == "miqp":
        for i in range(m):
            for j in range(n_y):
                t = pair(i, j) + 1
                u = f"U{t:07d}"
                add(u, "aux_quad", "FR", sample=i, output=j)
                obj_quad[(u, u)] = 2.0
                arow = {omega[j][l]: a[i, l] for l in range(d)}
                arow[u] = -1.0
                arow[zed[i]] = -big_m
                constraints.append(MpsConstraint(f"RA{t:06d}", "L", arow,
                                                 float(y[i, j])))
                brow = {omega[j][l]: -a[i, l] for l in range(d)}
                brow[u] = -1.0
                brow[zed[i]] = -big_m
                constraints.append(MpsConstraint(f"RB{t:06d}", "L", brow,
                                                 float(-y[i, j])))
    else:
        for i in range(m):
            for j in range(n_y):
                t = pair(i, j) + 1
                s = f"S{t:07d}"
                ep = f"P{t:07d}"
                en = f"N{t:07d}"
                add(s, "slack", "FR", sample=i, output=j)
                add(ep, "pos_part", "", sample=i, output=j)
                add(en, "neg_part", "", sample=i, output=j)
                obj_linear[ep] = 1.0
                obj_linear[en] = 1.0
                drow = {omega[j][l]: -a[i, l] for l in range(d)}
                drow.update({s: 1.0, ep: -1.0, en: 1.0})
                constraints.append(MpsConstraint(f"RD{t:06d}", "E", drow,
                                                 float(-y[i, j])))
                constraints.append(MpsConstraint(
                    f"RA{t:06d}", "L", {s: 1.0, zed[i]: -big_m}, 0.0))
                constraints.append(MpsConstraint(
                    f"RB{t:06d}", "G", {s: 1.0, zed[i]: big_m}, 0.0))
    for i in range(m):
        add(zed[i], "flag", "BV", integer=True, sample=i)
    constraints.append(MpsConstraint("CARD", "L",
                                     {z: 1.0 for z in zed}, float(k)))

    model = MpsModel(
        name=f"TRIM{which.upper()}"[:8],
        objective_name="OBJ",
        objective_linear=obj_linear,
        objective_quadratic=obj_quad,
        variables=variables,
        constraints=constraints,
        meta={
            "which": which,
            "big_m": big_m,
            "budget": k,
            "m": m,
            "n_x": prob.n_x,
            "n_y": n_y,
            "fit_intercept": prob.fit_intercept,
            "columns": col_map,
        },
    )
    model.validate()
    return model


def _num(v: float) -> str:
    """Most precise representation of ``v`` that fits field width 12."""
    for fmt in ("%.12g", "%.11g", "%.10g", "%.9g", "%.8g", "%.7g", "%.6g",
                "%.5g"):
        s = fmt % v
        if len(s) <= 12:
            return s
    return "%.4g" % v


_F1, _F2, _F3, _F4, _F5 = 1, 4, 14, 24, 39


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    out = ""
    for start, text in ((_F1, f1), (_F2, f2), (_F3, f3), (_F4, f4),
                        (_F5, f5), (49, f6)):
        if text:
            out = out.ljust(start) + text
    return out


def write_mps(model: MpsModel, path) -> None:
    """Serialize to fixed-format MPS plus a .json column-map sidecar."""
    lines = ["NAME".ljust(14) + model.name, "ROWS",
             _line("N", model.objective_name)]
    for con in model.constraints:
        lines.append(_line(con.sense, con.name))
    lines.append("COLUMNS")
    # entries grouped per column, constraint order preserved within
    per_col: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.variables}
    for name, coef in model.objective_linear.items():
        per_col[name].append((model.objective_name, coef))
    for con in model.constraints:
        for name, coef in con.coeffs.items():
            per_col[name].append((con.name, coef))
    in_int = False
    marker = 0
    for var in model.variables:
        if var.integer != in_int:
            marker += 1
            flag = "'INTORG'" if var.integer else "'INTEND'"
            lines.append(_line("", f"MARKER{marker}", "'MARKER'", "", flag))
            in_int = var.integer
        for row, coef in per_col[var.name]:
            lines.append(_line("", var.name, row, _num(coef)))
    if in_int:
        marker += 1
        lines.append(_line("", f"MARKER{marker}", "'MARKER'", "", "'INTEND'"))
    lines.append("RHS")
    for con in model.constraints:
        if con.rhs != 0.0:
            lines.append(_line("", "RHS", con.name, _num(con.rhs)))
    lines.append("BOUNDS")
    for var in model.variables:
        if var.bound:
            lines.append(_line(var.bound, "BND", var.name))
    if model.objective_quadratic:
        lines.append("QMATRIX")
        for (ca, cb), coef in model.objective_quadratic.items():
            lines.append(_line("", ca, cb, _num(coef)))
    lines.append("ENDATA")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    sidecar = {"schema": 1, **model.meta}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1) + "\n")


def export_mps(prob: RegressionProblem, cfg: TrimConfig, which: str = "miqp",
               path=None) -> MpsModel:
    """Build the chosen encoding and, when ``path`` is given, write it."""
    model = build_trim_model(prob, cfg, which)
    if path is not None:
        write_mps(model, path)
    return model


def parse_mps(path) -> MpsModel:
    """Read back a file written by :func:`write_mps`.

    This is a reader for round-trip verification, tolerant of
    whitespace but limited to the sections this module emits (ROWS,
    COLUMNS with integer markers, RHS, BOUNDS, QMATRIX).
    """
    text = Path(path).read_text().splitlines()
    name = ""
    sense_by_row: dict[str, str] = {}
    row_order: list[str] = []
    obj_name = None
    per_col: dict[str, dict[str, float]] = {}
    col_order: list[str] = []
    integers: set[str] = set()
    bounds: dict[str, str] = {}
    rhs: dict[str, float] = {}
    quad: dict[tuple[str, str], float] = {}
    section = None
    in_int = False
    for raw in text:
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if raw[0] not in (" ", "\t"):
            parts = raw.split()
            section = parts[0]
            if section == "NAME":
                name = parts[1] if len(parts) > 1 else ""
            if section == "ENDATA":
                break
            continue
        parts = raw.split()
        if section == "ROWS":
            kind, row = parts[0], parts[1]
            if kind == "N":
                if obj_name is not None:
                    raise MpsFormatError("multiple objective rows")
                obj_name = row
            else:
                if kind not in ("L", "G", "E"):
                    raise MpsFormatError(f"unknown row sense {kind!r}")
                sense_by_row[row] = kind
                row_order.append(row)
        elif section == "COLUMNS":
            if len(parts) >= 3 and parts[1] == "'MARKER'":
                in_int = parts[2] == "'INTORG'"
                continue
            col = parts[0]
            if col not in per_col:
                per_col[col] = {}
                col_order.append(col)
                if in_int:
                    integers.add(col)
            for off in range(1, len(parts) - 1, 2):
                per_col[col][parts[off]] = float(parts[off + 1])
        elif section == "RHS":
            for off in range(1, len(parts) - 1, 2):
                rhs[parts[off]] = float(parts[off + 1])
        elif section == "BOUNDS":
            kind, col = parts[0], parts[2]
            if kind not in ("FR", "BV", "UP", "LO", "FX", "MI"):
                raise MpsFormatError(f"unsupported bound {kind!r}")
            bounds[col] = kind
        elif section == "QMATRIX":
            quad[(parts[0], parts[1])] = float(parts[2])
        else:
            raise MpsFormatError(f"data line outside known section: {raw!r}")
    if obj_name is None:
        raise MpsFormatError("no objective row")
    constraints = []
    obj_linear: dict[str, float] = {}
    for col in col_order:
        if obj_name in per_col[col]:
            obj_linear[col] = per_col[col].pop(obj_name)
    for row in row_order:
        coeffs = {col: per_col[col][row] for col in col_order
                  if row in per_col[col]}
        constraints.append(MpsConstraint(row, sense_by_row[row], coeffs,
                                         rhs.get(row, 0.0)))
    variables = [MpsVariable(col, "unknown", bounds.get(col, ""),
                             col in integers) for col in col_order]
    model = MpsModel(name, obj_name, obj_linear, quad, variables, constraints)
    model.validate()
    return model
