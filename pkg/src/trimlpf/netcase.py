"""Network case model: buses, branches, and the bus admittance matrix.

A case is a balanced positive-sequence network given in per-unit on a
single MVA base.  Cases are read from a small line-oriented text format:

    # comment
    BASE 100.0
    BUS <id> <S|PV|PQ> <p_load> <q_load> <p_gen> <v_setpoint>
    BRANCH <from> <to> <r> <x> <b> [tap]
    END

``#`` starts a comment anywhere on a line.  Exactly one BASE record and
exactly one slack (S) bus are required.  Bus ids are arbitrary integers;
they are kept as given and mapped to contiguous 0-based indices for
matrix work (`NetworkCase.index_of`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class CaseError(ValueError):
    """Base class for case file problems."""


class CaseSyntaxError(CaseError):
    """Malformed record: carries the 1-based line and column of the offence."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class CaseSemanticError(CaseError):
    """Well-formed text that does not describe a usable network.

    ``code`` is a stable machine-readable tag, e.g. ``"duplicate-bus"``.
    """

    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


class BusKind(Enum):
    SLACK = "S"
    PV = "PV"
    PQ = "PQ"


@dataclass
class Bus:
    """One network node.

    Loads and generation are in per-unit on the case MVA base.  For PQ
    buses ``v_setpoint`` is carried but not enforced; for slack and PV
    buses it is the regulated voltage magnitude and must be positive.
    """

    id: int
    kind: BusKind
    p_load: float = 0.0
    q_load: float = 0.0
    p_gen: float = 0.0
    v_setpoint: float = 1.0

    @property
    def is_slack(self) -> bool:
        return self.kind is BusKind.SLACK

    @property
    def is_pv(self) -> bool:
        return self.kind is BusKind.PV

    @property
    def is_pq(self) -> bool:
        return self.kind is BusKind.PQ


@dataclass
class Branch:
    """A pi-model branch between two buses.

    ``b`` is the total line charging susceptance (half at each end),
    ``tap`` the off-nominal turns ratio on the ``from`` side (1.0 for a
    plain line).
    """

    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0
    tap: float = 1.0


@dataclass
class NetworkCase:
    """A validated network: one slack bus, unique ids, closed topology."""

    base_mva: float
    buses: list[Bus]
    branches: list[Branch]
    name: str = "case"
    index_of: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.base_mva <= 0:
            raise CaseSemanticError(
                f"base MVA must be positive, got {self.base_mva}", "bad-base")
        if not self.buses:
            raise CaseSemanticError("case has no buses", "no-buses")
        ids = [bus.id for bus in self.buses]
        if len(set(ids)) != len(ids):
            dup = sorted(i for i in set(ids) if ids.count(i) > 1)
            raise CaseSemanticError(f"duplicate bus id(s) {dup}", "duplicate-bus")
        slacks = [bus.id for bus in self.buses if bus.is_slack]
        if len(slacks) == 0:
            raise CaseSemanticError("no slack bus", "no-slack")
        if len(slacks) > 1:
            raise CaseSemanticError(f"multiple slack buses {slacks}", "multiple-slack")
        for bus in self.buses:
            if not bus.is_pq and bus.v_setpoint <= 0:
                raise CaseSemanticError(
                    f"bus {bus.id}: regulated voltage must be positive",
                    "bad-setpoint")
        self.index_of = {bus.id: i for i, bus in enumerate(self.buses)}
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in self.index_of:
                    raise CaseSemanticError(
                        f"branch {br.from_bus}-{br.to_bus}: unknown bus {end}",
                        "unknown-bus")
            if br.from_bus == br.to_bus:
                raise CaseSemanticError(
                    f"branch {br.from_bus}-{br.to_bus} is a self loop", "self-loop")
            if br.r == 0 and br.x == 0:
                raise CaseSemanticError(
                    f"branch {br.from_bus}-{br.to_bus}: zero impedance", "zero-impedance")
            if br.r < 0:
                raise CaseSemanticError(
                    f"branch {br.from_bus}-{br.to_bus}: negative resistance",
                    "negative-resistance")
            if br.tap <= 0:
                raise CaseSemanticError(
                    f"branch {br.from_bus}-{br.to_bus}: tap must be positive",
                    "bad-tap")

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def slack_bus(self) -> int:
        """Original id of the slack bus."""
        return next(bus.id for bus in self.buses if bus.is_slack)

    @property
    def slack_index(self) -> int:
        return self.index_of[self.slack_bus]

    @property
    def pv_indices(self) -> np.ndarray:
        return np.array([i for i, bus in enumerate(self.buses) if bus.is_pv], dtype=int)

    @property
    def pq_indices(self) -> np.ndarray:
        return np.array([i for i, bus in enumerate(self.buses) if bus.is_pq], dtype=int)


@dataclass
class AdmittanceMatrix:
    """Dense complex bus admittance matrix for a case."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"admittance matrix must be square, got {m.shape}")
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


_BUS_KINDS = {k.value: k for k in BusKind}


def _parse_float(token: str, lineno: int, col: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise CaseSyntaxError(f"bad {what} {token!r}", lineno, col) from None


def _parse_int(token: str, lineno: int, col: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise CaseSyntaxError(f"bad {what} {token!r}", lineno, col) from None


def _tokenize(line: str) -> list[tuple[str, int]]:
    # token text plus its 1-based column, comments stripped
    body = line.split("#", 1)[0]
    out = []
    col = 0
    for tok in body.split():
        col = body.index(tok, col)
        out.append((tok, col + 1))
        col += len(tok)
    return out


def parse_case(text: str, name: str = "case") -> NetworkCase:
    """Parse the case text format into a validated :class:`NetworkCase`.

    Raises :class:`CaseSyntaxError` for malformed records (with line and
    column) and :class:`CaseSemanticError` for structural problems.
    """
    base_mva = None
    buses: list[Bus] = []
    branches: list[Branch] = []
    saw_end = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw)
        if not tokens:
            continue
        if saw_end:
            raise CaseSyntaxError("content after END", lineno, tokens[0][1])
        record, col0 = tokens[0]
        args = tokens[1:]
        if record == "BASE":
            if base_mva is not None:
                raise CaseSyntaxError("duplicate BASE record", lineno, col0)
            if len(args) != 1:
                raise CaseSyntaxError("BASE takes one value", lineno, col0)
            base_mva = _parse_float(args[0][0], lineno, args[0][1], "base MVA")
        elif record == "BUS":
            if len(args) != 6:
                raise CaseSyntaxError(
                    f"BUS takes 6 fields, got {len(args)}", lineno, col0)
            bus_id = _parse_int(args[0][0], lineno, args[0][1], "bus id")
            kind_tok, kind_col = args[1]
            if kind_tok not in _BUS_KINDS:
                raise CaseSyntaxError(
                    f"bus kind must be S, PV or PQ, got {kind_tok!r}",
                    lineno, kind_col)
            vals = [_parse_float(t, lineno, c, f)
                    for (t, c), f in zip(args[2:], ("p_load", "q_load", "p_gen", "v_setpoint"))]
            buses.append(Bus(bus_id, _BUS_KINDS[kind_tok], *vals))
        elif record == "BRANCH":
            if len(args) not in (5, 6):
                raise CaseSyntaxError(
                    f"BRANCH takes 5 or 6 fields, got {len(args)}", lineno, col0)
            f = _parse_int(args[0][0], lineno, args[0][1], "from bus")
            t = _parse_int(args[1][0], lineno, args[1][1], "to bus")
            vals = [_parse_float(tk, lineno, c, fld)
                    for (tk, c), fld in zip(args[2:], ("r", "x", "b", "tap"))]
            branches.append(Branch(f, t, *vals))
        elif record == "END":
            if args:
                raise CaseSyntaxError("END takes no fields", lineno, args[0][1])
            saw_end = True
        else:
            raise CaseSyntaxError(f"unknown record {record!r}", lineno, col0)
    if not saw_end:
        raise CaseSyntaxError("missing END record", lineno if text else 1)
    if base_mva is None:
        raise CaseSemanticError("missing BASE record", "no-base")
    return NetworkCase(base_mva, buses, branches, name=name)


def serialize_case(case: NetworkCase) -> str:
    """Emit case text that :func:`parse_case` reads back identically."""
    lines = [f"BASE {case.base_mva!r}"]
    for bus in case.buses:
        lines.append(
            f"BUS {bus.id} {bus.kind.value} {bus.p_load!r} {bus.q_load!r} "
            f"{bus.p_gen!r} {bus.v_setpoint!r}")
    for br in case.branches:
        lines.append(
            f"BRANCH {br.from_bus} {br.to_bus} {br.r!r} {br.x!r} {br.b!r} {br.tap!r}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def load_case(path) -> NetworkCase:
    """Read and parse a case file; the case is named after the file stem."""
    import pathlib

    p = pathlib.Path(path)
    return parse_case(p.read_text(), name=p.stem)


def build_ybus(case: NetworkCase) -> AdmittanceMatrix:
    """Assemble the dense bus admittance matrix from pi-model branches.

    For each branch with series admittance ys = 1/(r + jx), charging b
    and from-side tap t:

        Y[f,f] += (ys + jb/2) / t**2
        Y[t,t] +=  ys + jb/2
        Y[f,t] -=  ys / t
        Y[t,f] -=  ys / t
    """
    n = case.n_buses
    y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        f = case.index_of[br.from_bus]
        t = case.index_of[br.to_bus]
        ys = 1.0 / complex(br.r, br.x)
        shunt = 0.5j * br.b
        y[f, f] += (ys + shunt) / br.tap**2
        y[t, t] += ys + shunt
        y[f, t] -= ys / br.tap
        y[t, f] -= ys / br.tap
    return AdmittanceMatrix(y)
