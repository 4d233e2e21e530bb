"""Linear model estimators for power-flow regression data.

All estimators fit the multi-output affine model

    y_hat = W x + b        W: (n_y, n_x),  b: (n_y,)

and return an :class:`LpfModel`.  ``z`` marks samples the estimator
discarded or flagged (always all-False for estimators that keep the
full sample set).  The robust baselines are:

fit_ols    plain least squares (column-pivoted QR)
fit_huber  per-sample Huber loss on residual L2 norms, solved by IRLS
fit_lav    least absolute values, smoothed per-component IRLS
fit_svr    linear epsilon-insensitive regression, full-batch subgradient
fit_lnr    iterative largest-normalized-residual screening, then OLS
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import design_matrix, leverages, qr_lstsq


@dataclass
class RegressionProblem:
    """Paired samples (x_i, y_i) plus the intercept choice."""

    x: np.ndarray
    y: np.ndarray
    fit_intercept: bool = True

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ValueError("x and y must be 2-D arrays")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"sample count mismatch: x has {self.x.shape[0]} rows, "
                f"y has {self.y.shape[0]}")
        if self.m <= self.n_params:
            raise ValueError(
                f"need more than {self.n_params} samples, got {self.m}")

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n_x(self) -> int:
        return self.x.shape[1]

    @property
    def n_y(self) -> int:
        return self.y.shape[1]

    @property
    def n_params(self) -> int:
        """Per-output coefficient count (features plus optional intercept)."""
        return self.n_x + (1 if self.fit_intercept else 0)

    def design(self) -> np.ndarray:
        return design_matrix(self.x, self.fit_intercept)


@dataclass
class LpfModel:
    """A fitted linear power-flow surrogate.

    ``z`` is the per-sample outlier flag vector: True marks samples the
    estimator excluded from (or flagged during) the fit.
    """

    w: np.ndarray
    b: np.ndarray
    z: np.ndarray
    objective: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.z = np.asarray(self.z, dtype=bool)
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
            raise ValueError("w must be (n_y, n_x) and b (n_y,)")

    @property
    def n_outputs(self) -> int:
        return self.w.shape[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.w.T + self.b


def _model_from_beta(prob: RegressionProblem, beta: np.ndarray,
                     z: np.ndarray, objective: float,
                     diagnostics: dict) -> LpfModel:
    # beta is (n_params, n_y): feature rows first, intercept row last
    if prob.fit_intercept:
        w = beta[:-1].T
        b = beta[-1].copy()
    else:
        w = beta.T
        b = np.zeros(prob.n_y)
    return LpfModel(w=w, b=b, z=z, objective=objective, diagnostics=diagnostics)


def _residuals(a: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return y - a @ beta


def fit_ols(prob: RegressionProblem) -> LpfModel:
    """Ordinary least squares over all samples.

    Objective is the summed squared residual over every sample and
    output.  Rank-deficient designs raise
    :class:`~trimlpf._linalg.RankDeficiencyError`.
    """
    a = prob.design()
    beta = qr_lstsq(a, prob.y)
    r = _residuals(a, prob.y, beta)
    objective = float(np.sum(r * r))
    diagnostics = {
        "iterations": 1,
        "residuals": r,
        "scales": np.sqrt(np.mean(r * r, axis=0)),
    }
    return _model_from_beta(prob, beta, np.zeros(prob.m, dtype=bool),
                            objective, diagnostics)


@dataclass
class HuberConfig:
    """Settings for :func:`fit_huber`.

    ``delta`` is the loss transition point applied to per-sample
    residual L2 norms.  Left at None it is set adaptively to twice the
    median residual norm of the initial OLS fit (floored at 1e-12), so
    typical samples stay in the quadratic regime and gross ones fall in
    the linear regime.
    """

    delta: float | None = None
    irls_tol: float = 1e-8
    irls_max_iter: int = 100

    def __post_init__(self):
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.irls_tol < 0:
            raise ValueError(f"irls_tol must be >= 0, got {self.irls_tol}")
        if self.irls_max_iter < 1:
            raise ValueError(
                f"irls_max_iter must be >= 1, got {self.irls_max_iter}")


def _huber_objective(norms: np.ndarray, delta: float) -> float:
    quad = norms <= delta
    vals = np.where(quad, norms**2, delta * (2.0 * norms - delta))
    return float(np.sum(vals))


def fit_huber(prob: RegressionProblem, cfg: HuberConfig = HuberConfig()) -> LpfModel:
    """Huber-loss fit on per-sample residual norms via IRLS.

    Weights are 1 inside the quadratic regime and delta/||r_i|| beyond
    it; each iteration solves the weighted least-squares subproblem.
    The recorded objective sequence is non-increasing.
    """
    a = prob.design()
    y = prob.y
    beta = qr_lstsq(a, y)
    norms = np.linalg.norm(_residuals(a, y, beta), axis=1)
    delta = cfg.delta
    if delta is None:
        delta = max(2.0 * float(np.median(norms)), 1e-12)
    objective = _huber_objective(norms, delta)
    obj_seq = [objective]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.irls_max_iter + 1):
        weights = np.where(norms <= delta, 1.0, delta / np.maximum(norms, 1e-300))
        sw = np.sqrt(weights)[:, None]
        beta_new = qr_lstsq(a * sw, y * sw)
        step = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        norms = np.linalg.norm(_residuals(a, y, beta), axis=1)
        objective = _huber_objective(norms, delta)
        obj_seq.append(objective)
        if step <= cfg.irls_tol * (1.0 + float(np.max(np.abs(beta)))):
            converged = True
            break
    r = _residuals(a, y, beta)
    diagnostics = {
        "iterations": iterations,
        "delta": delta,
        "converged": converged,
        "objective_sequence": obj_seq,
        "residuals": r,
        "scales": np.sqrt(np.mean(r * r, axis=0)),
    }
    return _model_from_beta(prob, beta, np.zeros(prob.m, dtype=bool),
                            objective, diagnostics)


def fit_lav(prob: RegressionProblem, tol: float = 1e-8,
            max_iter: int = 200, epsilon_smooth: float = 1e-8) -> LpfModel:
    """Least-absolute-values fit by smoothed per-component IRLS.

    Each output is reweighted independently with w_ij =
    1/max(|r_ij|, epsilon_smooth).  Iteration stops when the largest
    coefficient change drops below ``tol``; the final objective then
    sits within roughly max(tol, m*n_y*epsilon_smooth) of the true L1
    optimum, which the validation suite checks against enumeration and
    grid oracles.
    """
    a = prob.design()
    y = prob.y
    beta = qr_lstsq(a, y)
    obj_seq = [float(np.sum(np.abs(_residuals(a, y, beta))))]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r = _residuals(a, y, beta)
        beta_new = np.empty_like(beta)
        for j in range(prob.n_y):
            w = 1.0 / np.maximum(np.abs(r[:, j]), epsilon_smooth)
            sw = np.sqrt(w)[:, None]
            beta_new[:, j] = qr_lstsq(a * sw, y[:, j:j + 1] * sw)[:, 0]
        step = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        obj_seq.append(float(np.sum(np.abs(_residuals(a, y, beta)))))
        if step <= tol * (1.0 + float(np.max(np.abs(beta)))):
            converged = True
            break
    r = _residuals(a, y, beta)
    objective = float(np.sum(np.abs(r)))
    diagnostics = {
        "iterations": iterations,
        "converged": converged,
        "objective_sequence": obj_seq,
        "residuals": r,
        "scales": np.mean(np.abs(r), axis=0),
    }
    return _model_from_beta(prob, beta, np.zeros(prob.m, dtype=bool),
                            objective, diagnostics)


@dataclass
class SvrConfig:
    """Settings for :func:`fit_svr`.

    ``learning_rate`` of None picks eta0 = 1 / (1 + c_reg * mean row
    energy of the design), a scale-free choice that keeps the first
    steps bounded; the schedule is eta0 / sqrt(1 + t).
    """

    epsilon: float = 1e-3
    c_reg: float = 10.0
    iters: int = 5000
    learning_rate: float | None = None


def _svr_objective(w: np.ndarray, r: np.ndarray, epsilon: float, c_reg: float) -> float:
    hinge = np.maximum(0.0, np.abs(r) - epsilon)
    return float(0.5 * np.sum(w * w) + c_reg * np.sum(hinge))


def fit_svr(prob: RegressionProblem, cfg: SvrConfig = SvrConfig()) -> LpfModel:
    """Linear epsilon-insensitive regression, one machine per output.

    Deterministic full-batch subgradient descent with a fixed
    1/sqrt(t) schedule from w = 0, b = per-output median of y; the
    intercept is not regularised.  The best iterate by objective is
    returned, so with c_reg = 0 the fit stays at exactly that
    median-centred zero model.
    """
    x = prob.x
    y = prob.y
    m = prob.m
    w = np.zeros((prob.n_y, prob.n_x))
    b = np.median(y, axis=0) if prob.fit_intercept else np.zeros(prob.n_y)
    row_energy = float(np.mean(np.sum(x * x, axis=1))) + (1.0 if prob.fit_intercept else 0.0)
    eta0 = cfg.learning_rate
    if eta0 is None:
        eta0 = 1.0 / (1.0 + cfg.c_reg * row_energy)

    def objective(w_, b_):
        return _svr_objective(w_, y - (x @ w_.T + b_), cfg.epsilon, cfg.c_reg)

    best_obj = objective(w, b)
    best_w, best_b = w.copy(), b.copy()
    best_iter = 0
    for t in range(cfg.iters):
        r = y - (x @ w.T + b)
        s = np.sign(r) * (np.abs(r) > cfg.epsilon)
        grad_w = w - cfg.c_reg * (s.T @ x)
        eta = eta0 / np.sqrt(1.0 + t)
        w = w - eta * grad_w
        if prob.fit_intercept:
            b = b + eta * cfg.c_reg * np.sum(s, axis=0)
        obj = objective(w, b)
        if obj < best_obj:
            best_obj, best_w, best_b, best_iter = obj, w.copy(), b.copy(), t + 1
    r = y - (x @ best_w.T + best_b)
    diagnostics = {
        "iterations": cfg.iters,
        "best_iteration": best_iter,
        "learning_rate": eta0,
        "residuals": r,
        "scales": np.sqrt(np.mean(r * r, axis=0)),
    }
    return LpfModel(w=best_w, b=best_b, z=np.zeros(m, dtype=bool),
                    objective=best_obj, diagnostics=diagnostics)


@dataclass
class LnrConfig:
    """Settings for :func:`fit_lnr`.

    ``max_removals`` of None allows up to half the samples to go.
    """

    threshold: float = 3.0
    max_removals: int | None = None

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.max_removals is not None and self.max_removals < 0:
            raise ValueError(
                f"max_removals must be >= 0, got {self.max_removals}")


def fit_lnr(prob: RegressionProblem, cfg: LnrConfig = LnrConfig()) -> LpfModel:
    """Two-stage fit: screen by largest normalized residual, then OLS.

    Repeatedly fits OLS on the active set, normalizes residuals by
    per-output variance estimates and leverage, and drops the single
    sample whose worst output-normalized residual exceeds the
    threshold.  Stops when no sample exceeds it, or when the removal
    cap is hit (recorded as ``diagnostics["hit_removal_cap"]``).
    """
    a_full = prob.design()
    y_full = prob.y
    m, d = a_full.shape
    max_removals = cfg.max_removals if cfg.max_removals is not None else m // 2
    active = np.arange(m)
    removed: list[int] = []
    hit_cap = False
    tiny = np.finfo(float).tiny
    while True:
        if active.size < d + 1:
            raise ValueError(
                f"active set shrank to {active.size} samples; "
                f"need at least {d + 1}")
        a = a_full[active]
        y = y_full[active]
        beta = qr_lstsq(a, y)
        r = y - a @ beta
        sigma2 = np.sum(r * r, axis=0) / (active.size - d)
        h = leverages(a)
        denom = np.sqrt(np.outer(np.maximum(1.0 - h, 0.0), sigma2))
        with np.errstate(divide="ignore", invalid="ignore"):
            norm_r = np.abs(r) / np.maximum(denom, tiny)
        norm_r[np.abs(r) <= tiny] = 0.0
        stat = np.max(norm_r, axis=1)
        worst = int(np.argmax(stat))
        if not stat[worst] > cfg.threshold:
            break
        if len(removed) >= max_removals:
            hit_cap = True
            break
        removed.append(int(active[worst]))
        active = np.delete(active, worst)
    z = np.zeros(m, dtype=bool)
    z[removed] = True
    objective = float(np.sum(r * r))
    diagnostics = {
        "iterations": len(removed) + 1,
        "removed": removed,
        "hit_removal_cap": hit_cap,
        "residuals": r,
        "scales": np.sqrt(np.sum(r * r, axis=0) / max(active.size - d, 1)),
        "active_size": int(active.size),
    }
    return _model_from_beta(prob, beta, z, objective, diagnostics)
