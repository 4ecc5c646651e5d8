"""Linear epsilon-insensitive support vector regression.

The primal objective on standardised data is

    0.5 * ||w||^2 + C * mean_i max(0, |z_i - (w . u_i + b)| - epsilon)

minimised by full-batch subgradient descent with step ``step_size / sqrt(t)``.
Averaging the loss over samples (instead of summing) makes the solution
invariant to duplicating the training set. A step that would raise the
objective is halved up to ``MAX_HALVINGS`` times and skipped if it still
does, so the recorded objective never increases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError

MAX_HALVINGS = 30


@dataclass(frozen=True)
class SvrModel:
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float

    def __post_init__(self):
        if np.any(self.feature_std <= 0) or self.target_std <= 0:
            raise ValueError("standardisation stddevs must be positive")

    @property
    def n_features(self):
        return len(self.weights)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        u = (X - self.feature_mean) / self.feature_std
        return self.target_mean + (u @ self.weights + self.bias) * self.target_std


def objective(w, b, U, z, c, epsilon):
    excess = np.maximum(0.0, np.abs(z - (U @ w + b)) - epsilon)
    return 0.5 * float(w @ w) + c * float(excess.mean())


def train_svr(X, y, c=10.0, epsilon=0.1, epochs=500, step_size=0.01, return_history=False):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n < 2:
        raise DegenerateInputError("SVR needs at least 2 samples")
    mu, sd = X.mean(axis=0), X.std(axis=0)
    if np.any(sd == 0):
        raise DegenerateInputError(f"zero-variance feature column(s): {np.flatnonzero(sd == 0).tolist()}")
    ymu, ysd = float(y.mean()), float(y.std())
    if ysd == 0:
        raise DegenerateInputError("target has zero variance")
    U = (X - mu) / sd
    z = (y - ymu) / ysd

    w = np.zeros(p)
    b = 0.0
    current = objective(w, b, U, z, c, epsilon)
    history = [current]
    for t in range(1, epochs + 1):
        resid = z - (U @ w + b)
        outside = np.abs(resid) > epsilon
        sgn = np.where(outside, np.sign(resid), 0.0)
        grad_w = w - c * (U.T @ sgn) / n
        grad_b = -c * float(sgn.sum()) / n
        eta = step_size / np.sqrt(t)
        for _ in range(MAX_HALVINGS):
            w_new = w - eta * grad_w
            b_new = b - eta * grad_b
            trial = objective(w_new, b_new, U, z, c, epsilon)
            if trial <= current:
                w, b, current = w_new, b_new, trial
                break
            eta *= 0.5
        history.append(current)
    model = SvrModel(w, float(b), mu, sd, ymu, ysd)
    if return_history:
        return model, np.array(history)
    return model
