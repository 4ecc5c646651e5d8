"""Ordinary least squares and backward stepwise elimination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingularMatrixError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class LinearModel:
    """Intercept plus coefficients keyed by feature name.

    Features listed in ``feature_names`` but missing from ``coefficients``
    were eliminated and contribute nothing.
    """

    intercept: float
    coefficients: dict
    feature_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        unknown = set(self.coefficients) - set(self.feature_names)
        if unknown:
            raise ValueError(f"coefficients for unknown features: {sorted(unknown)}")

    @property
    def n_features(self):
        return len(self.feature_names)

    def coef_vector(self):
        return np.array([self.coefficients.get(f, 0.0) for f in self.feature_names])

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.intercept + X @ self.coef_vector()


def _default_names(p):
    return tuple(f"x{j}" for j in range(p))


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray  # intercept first
    residuals: np.ndarray
    r_inv: np.ndarray  # inverse of the triangular QR factor


def ols(X, y) -> OlsFit:
    """Least squares with an intercept column, solved by Householder QR."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n <= p:
        raise SingularMatrixError(f"need more samples than features (n={n}, p={p})")
    # fixed memory layout keeps results independent of how X was sliced
    A = np.ascontiguousarray(np.column_stack([np.ones(n), X]))
    # equilibrate columns so the rank test is scale free
    scale = np.sqrt((A * A).sum(axis=0))
    if np.any(scale == 0):
        raise SingularMatrixError("design matrix has an all-zero column")
    q, r = np.linalg.qr(A / scale)
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * diag.max():
        raise SingularMatrixError("design matrix is rank deficient")
    beta_scaled = np.linalg.solve(r, q.T @ y)
    # one step of iterative refinement tightens the normal-equation residual
    resid = y - (A / scale) @ beta_scaled
    beta_scaled = beta_scaled + np.linalg.solve(r, q.T @ resid)
    beta = beta_scaled / scale
    r_inv = np.linalg.solve(r, np.eye(p + 1)) / scale[:, None]
    return OlsFit(beta, y - A @ beta, r_inv)


def train_linear(X, y, feature_names=None) -> LinearModel:
    X = np.asarray(X, dtype=np.float64)
    names = tuple(feature_names) if feature_names is not None else _default_names(X.shape[1])
    fit = ols(X, y)
    return LinearModel(
        float(fit.beta[0]), {f: float(b) for f, b in zip(names, fit.beta[1:])}, names
    )


def t_statistics(X, y):
    """OLS slope t-statistics (intercept excluded) and the fit itself.

    The residual variance is floored at 1e-20 of the target's variance so an
    exact fit yields huge |t| for real effects and ~0 for rounding noise,
    instead of 0/0.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    fit = ols(X, y)
    dof = n - p - 1
    rss = float(fit.residuals @ fit.residuals)
    sigma2 = rss / dof if dof > 0 else 0.0
    sigma2 = max(sigma2, 1e-20 * float(np.var(y)), np.finfo(float).tiny)
    # diag of (A^T A)^-1 = row norms of R^-1 (rows already in original scale)
    var_diag = sigma2 * (fit.r_inv * fit.r_inv).sum(axis=1)
    t = fit.beta / np.sqrt(var_diag)
    return t[1:], fit


def train_stepwise(X, y, removal_threshold=1.96, feature_names=None) -> LinearModel:
    """Backward elimination on OLS t-statistics.

    Repeatedly refits and drops the slope with the smallest |t| while it is
    below ``removal_threshold``; ties go to the lowest feature index. The
    intercept is never removed.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    names = tuple(feature_names) if feature_names is not None else _default_names(X.shape[1])
    active = list(range(X.shape[1]))
    while active:
        t, fit = t_statistics(X[:, active], y)
        abs_t = np.abs(t)
        worst = int(np.argmin(abs_t))  # argmin returns the first minimum
        if abs_t[worst] >= removal_threshold:
            break
        del active[worst]
    if not active:
        intercept = float(np.mean(y))
        return LinearModel(intercept, {}, names)
    fit = ols(X[:, active], y)
    coefs = {names[j]: float(b) for j, b in zip(active, fit.beta[1:])}
    return LinearModel(float(fit.beta[0]), coefs, names)
