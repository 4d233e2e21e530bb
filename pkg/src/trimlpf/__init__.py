"""Robust data-driven linear power-flow model fitting.

Builds affine voltage/power models from simulated power-flow samples,
with baseline estimators (least squares, Huber, least absolute values,
linear SVR, normalized-residual screening) and exact trimmed fitting
that jointly selects coefficients and a budgeted set of samples to
discard.  Includes dataset generation from a Newton power-flow solver,
evaluation/reporting, MPS export of the mixed-integer formulations,
and a config-driven CLI.
"""

from .netcase import (AdmittanceMatrix, Branch, Bus, BusKind, CaseError,
                      CaseSemanticError, CaseSyntaxError, NetworkCase,
                      build_ybus, load_case, parse_case, serialize_case)
from .powerflow import (ConvergenceError, PowerFlowError,
                        PowerFlowSolution, SingularJacobianError,
                        injections_from_voltages, solve_newton)
from .datagen import (Dataset, DatasetError, DatasetSchemaError, Direction,
                      OutlierSpec, generate_samples, inject_outliers,
                      load_dataset, row_voltages, save_dataset,
                      strip_injected, to_problem)
from .estimators import (HuberConfig, LnrConfig, LpfModel, RegressionProblem,
                         SvrConfig, fit_huber, fit_lav, fit_lnr, fit_ols,
                         fit_svr)
from .trimmed import (TrimConfig, TrimResult, TrimStatus, trim_budget,
                      trim_bruteforce, trim_bruteforce_l1, trim_cstep,
                      trim_exact, trim_s1, trim_s2)
from .mpsio import (MpsConstraint, MpsFormatError, MpsModel, MpsVariable,
                    build_trim_model, export_mps, parse_mps, write_mps)
from .evaluate import (ExperimentReport, ReportRow, relative_error_grid,
                       relative_errors, run_comparison, seed_streams)
from .config import ConfigError, RunConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "AdmittanceMatrix", "Branch", "Bus", "BusKind", "CaseError",
    "CaseSemanticError", "CaseSyntaxError", "NetworkCase", "build_ybus",
    "load_case", "parse_case", "serialize_case",
    "ConvergenceError", "PowerFlowError", "PowerFlowSolution",
    "SingularJacobianError", "injections_from_voltages", "solve_newton",
    "Dataset", "DatasetError", "DatasetSchemaError", "Direction",
    "OutlierSpec", "generate_samples", "inject_outliers", "load_dataset",
    "row_voltages", "save_dataset", "strip_injected", "to_problem",
    "HuberConfig", "LnrConfig", "LpfModel", "RegressionProblem", "SvrConfig",
    "fit_huber", "fit_lav", "fit_lnr", "fit_ols", "fit_svr",
    "TrimConfig", "TrimResult", "TrimStatus", "trim_budget",
    "trim_bruteforce", "trim_bruteforce_l1", "trim_cstep", "trim_exact",
    "trim_s1", "trim_s2",
    "MpsConstraint", "MpsFormatError", "MpsModel", "MpsVariable",
    "build_trim_model", "export_mps", "parse_mps", "write_mps",
    "ExperimentReport", "ReportRow", "relative_error_grid",
    "relative_errors", "run_comparison", "seed_streams",
    "ConfigError", "RunConfig", "load_config",
    "__version__",
]
