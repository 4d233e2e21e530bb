"""Dense least-squares primitives shared by the estimators.

Everything here works on an explicit design matrix.  The solver uses a
column-pivoted QR factorisation; a design is treated as rank deficient
when some pivoted diagonal of R falls below

    rank_tol = max(m, d) * machine_eps * |R[0, 0]|

in which case :class:`RankDeficiencyError` reports the offending
condition estimate |R[0, 0] / R[k, k]|.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


class RankDeficiencyError(ValueError):
    """Design matrix has (numerically) dependent columns."""

    def __init__(self, rank: int, n_cols: int, cond_estimate: float):
        super().__init__(
            f"rank-deficient design: rank {rank} of {n_cols} columns "
            f"(condition estimate {cond_estimate:.3e})")
        self.rank = rank
        self.n_cols = n_cols
        self.cond_estimate = cond_estimate


def qr_lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-residual solve of ``a @ x = b`` for full-column-rank ``a``.

    ``b`` may hold several right-hand sides as columns.  Raises
    :class:`RankDeficiencyError` rather than silently regularising.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, d = a.shape
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0:
        raise RankDeficiencyError(0, d, np.inf)
    tol = max(m, d) * np.finfo(float).eps * diag[0]
    small = diag <= tol
    if small.any():
        rank = int(np.argmax(small))
        raise RankDeficiencyError(rank, d, diag[0] / diag[small].min()
                                  if diag[small].min() > 0 else np.inf)
    x_perm = scipy.linalg.solve_triangular(r, q.T @ b)
    x = np.empty_like(x_perm)
    x[perm] = x_perm
    return x


def leverages(a: np.ndarray) -> np.ndarray:
    """Diagonal of the hat matrix a (a'a)^-1 a' for full-column-rank ``a``."""
    a = np.asarray(a, dtype=float)
    q, r, _ = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0 or (diag <= a.shape[0] * np.finfo(float).eps * diag[0]).any():
        raise RankDeficiencyError(int((diag > 0).sum()), a.shape[1], np.inf)
    return np.einsum("ij,ij->i", q, q)


def design_matrix(x: np.ndarray, fit_intercept: bool) -> np.ndarray:
    """Feature matrix with an appended all-ones column when requested."""
    x = np.asarray(x, dtype=float)
    if not fit_intercept:
        return x
    return np.hstack([x, np.ones((x.shape[0], 1))])
