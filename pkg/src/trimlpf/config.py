"""TOML experiment configuration for the command-line tools.

Grammar (all keys optional unless noted):

    case_path = "cases/ieee9.net"      # required; must exist
    direction = "volt_to_power"        # or "power_to_volt"
    m_train = 200
    m_test = 100
    output_dir = "out"
    seeds = [0, 1, 2]
    methods = ["ols", "huber", "trim_exact"]
    load_scale_lo = 0.8
    load_scale_hi = 1.2

    [outlier]                          # see datagen.OutlierSpec
    ratio = 0.08
    magnitude_lo = 10.0
    magnitude_hi = 30.0
    components_per_sample = [1, 3]     # int, "all", or [lo, hi]
    seed = 0                           # harness reseeds per experiment seed

    [trim]                             # see trimmed.TrimConfig
    p = 0.08
    big_m = 1e6
    gap_tol = 1e-9
    node_limit = 5000
    time_limit = 600.0
    cstep_restarts = 10
    seed = 0

    [method_options.huber]             # per-method fit overrides
    delta = 0.5

Validation failures raise ConfigError with the offending field path
(e.g. "outlier.ratio: must be in [0, 0.5)").  Unknown keys are
rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .datagen import Direction, OutlierSpec
from .trimmed import TrimConfig


class ConfigError(ValueError):
    """A config file failed validation; message carries the field path."""


@dataclass
class RunConfig:
    case_path: str
    direction: str = "volt_to_power"
    m_train: int = 200
    m_test: int = 100
    output_dir: str = "out"
    seeds: list[int] = field(default_factory=lambda: [0])
    methods: list[str] = field(default_factory=lambda: ["ols"])
    load_scale_lo: float = 0.8
    load_scale_hi: float = 1.2
    outlier: OutlierSpec = field(default_factory=OutlierSpec)
    trim: TrimConfig = field(default_factory=lambda: TrimConfig(
        node_limit=5000, cstep_restarts=10))
    method_options: dict = field(default_factory=dict)


_TOP_KEYS = {
    "case_path", "direction", "m_train", "m_test", "output_dir", "seeds",
    "methods", "load_scale_lo", "load_scale_hi", "outlier", "trim",
    "method_options",
}
_OUTLIER_KEYS = {"ratio", "magnitude_lo", "magnitude_hi",
                 "components_per_sample", "seed"}
_TRIM_KEYS = {"p", "big_m", "gap_tol", "node_limit", "time_limit",
              "cstep_restarts", "seed"}


def _want(raw, key, types, path):
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"{path}: expected {names}, got {value!r}")
    return value


def _int_list(raw, key, path):
    value = raw[key]
    if (not isinstance(value, list) or not value
            or not all(isinstance(v, int) and not isinstance(v, bool)
                       for v in value)):
        raise ConfigError(f"{path}: expected a non-empty list of integers")
    return [int(v) for v in value]


def _check_unknown(table: dict, allowed: set, prefix: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        where = f"{prefix}{unknown[0]}"
        raise ConfigError(f"{where}: unknown key")


def load_config(path) -> RunConfig:
    """Parse and validate a TOML config file into a RunConfig."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    _check_unknown(raw, _TOP_KEYS, "")

    if "case_path" not in raw:
        raise ConfigError("case_path: required key is missing")
    cfg = RunConfig(case_path=str(_want(raw, "case_path", (str,), "case_path")))
    case_file = Path(cfg.case_path)
    if not case_file.is_absolute():
        case_file = path.parent / case_file
        cfg.case_path = str(case_file)
    if not case_file.exists():
        raise ConfigError(f"case_path: no such file {case_file}")

    if "direction" in raw:
        value = _want(raw, "direction", (str,), "direction")
        if value not in (d.value for d in Direction):
            raise ConfigError(
                f"direction: must be one of {[d.value for d in Direction]}, "
                f"got {value!r}")
        cfg.direction = value
    for key in ("m_train", "m_test"):
        if key in raw:
            value = _want(raw, key, (int,), key)
            if value < 1:
                raise ConfigError(f"{key}: must be >= 1, got {value}")
            setattr(cfg, key, value)
    if "output_dir" in raw:
        cfg.output_dir = str(_want(raw, "output_dir", (str,), "output_dir"))
    if "seeds" in raw:
        cfg.seeds = _int_list(raw, "seeds", "seeds")
    if "methods" in raw:
        methods = raw["methods"]
        if not isinstance(methods, list) or not methods:
            raise ConfigError("methods: expected a non-empty list of names")
        from .evaluate import METHODS
        for name in methods:
            if name not in METHODS:
                raise ConfigError(
                    f"methods: unknown method {name!r}; registered: "
                    f"{sorted(METHODS)}")
        cfg.methods = list(methods)
    for key in ("load_scale_lo", "load_scale_hi"):
        if key in raw:
            setattr(cfg, key, float(_want(raw, key, (int, float), key)))
    if not 0 < cfg.load_scale_lo <= cfg.load_scale_hi:
        raise ConfigError(
            f"load_scale_lo: need 0 < lo <= hi, got "
            f"[{cfg.load_scale_lo}, {cfg.load_scale_hi}]")

    if "outlier" in raw:
        table = raw["outlier"]
        if not isinstance(table, dict):
            raise ConfigError("outlier: expected a table")
        _check_unknown(table, _OUTLIER_KEYS, "outlier.")
        kwargs = {}
        for key in ("ratio", "magnitude_lo", "magnitude_hi"):
            if key in table:
                kwargs[key] = float(_want(table, key, (int, float),
                                          f"outlier.{key}"))
        if "seed" in table:
            kwargs["seed"] = _want(table, "seed", (int,), "outlier.seed")
        if "components_per_sample" in table:
            value = table["components_per_sample"]
            if isinstance(value, list):
                value = tuple(value)
            kwargs["components_per_sample"] = value
        try:
            cfg.outlier = OutlierSpec(**kwargs)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"outlier: {exc}") from exc

    if "trim" in raw:
        table = raw["trim"]
        if not isinstance(table, dict):
            raise ConfigError("trim: expected a table")
        _check_unknown(table, _TRIM_KEYS, "trim.")
        kwargs = dict(node_limit=cfg.trim.node_limit,
                      cstep_restarts=cfg.trim.cstep_restarts)
        for key in ("p", "big_m", "gap_tol", "time_limit"):
            if key in table:
                kwargs[key] = float(_want(table, key, (int, float),
                                          f"trim.{key}"))
        for key in ("node_limit", "cstep_restarts", "seed"):
            if key in table:
                kwargs[key] = _want(table, key, (int,), f"trim.{key}")
        try:
            cfg.trim = TrimConfig(**kwargs)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"trim: {exc}") from exc

    if "method_options" in raw:
        table = raw["method_options"]
        if not isinstance(table, dict):
            raise ConfigError("method_options: expected a table of tables")
        from .evaluate import METHODS
        for name, opts in table.items():
            if name not in METHODS:
                raise ConfigError(
                    f"method_options.{name}: unknown method; registered: "
                    f"{sorted(METHODS)}")
            if not isinstance(opts, dict):
                raise ConfigError(f"method_options.{name}: expected a table")
        cfg.method_options = {k: dict(v) for k, v in table.items()}
    return cfg
