"""Shared builders for randomized regression instances."""

import numpy as np

from trimlpf import RegressionProblem


def random_problem(seed: int, m: int = 12, n_x: int = 2, n_y: int = 1,
                   fit_intercept: bool = True, noise: float = 0.3,
                   gross: int = 0, gross_size: float = 15.0
                   ) -> RegressionProblem:
    """Linear data with Gaussian noise and optionally a few gross rows."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, n_x))
    w = rng.normal(size=(n_x, n_y))
    y = x @ w + rng.normal(scale=noise, size=(m, n_y))
    if fit_intercept:
        y += rng.normal(size=n_y)
    if gross:
        rows = rng.choice(m, size=gross, replace=False)
        signs = np.where(rng.random((gross, n_y)) < 0.5, -1.0, 1.0)
        y[rows] += signs * gross_size * max(noise, 0.05)
    return RegressionProblem(x, y, fit_intercept)


def planted_instance(seed: int, m: int = 200, n_x: int = 5,
                     ratio: float = 0.08, noise: float = 0.05,
                     lo: float = 20.0, hi: float = 40.0
                     ) -> tuple[RegressionProblem, np.ndarray]:
    """Single-output linear data with a known mask of gross outliers.

    Outlier magnitudes are uniform in [lo, hi] noise standard
    deviations, signs fair coin flips.  Returns (problem, bool mask).
    """
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, n_x))
    w = rng.normal(size=(n_x, 1))
    y = x @ w + 0.3 + rng.normal(scale=noise, size=(m, 1))
    planted = np.sort(rng.choice(m, size=int(ratio * m), replace=False))
    signs = np.where(rng.random(planted.size) < 0.5, -1.0, 1.0)
    y[planted, 0] += signs * rng.uniform(lo, hi, size=planted.size) * noise
    mask = np.zeros(m, dtype=bool)
    mask[planted] = True
    return RegressionProblem(x, y), mask
