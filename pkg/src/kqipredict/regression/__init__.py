"""The five regression techniques behind one ``fit``/``predict`` surface."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import FEATURE_NAMES, KQI_NAMES
from ..errors import DomainError
from . import _backend
from .linear import LinearModel, ols, t_statistics, train_linear, train_stepwise
from .svr import SvrModel, train_svr
from .tree import (
    ForestModel,
    Split,
    TreeModel,
    default_mtry,
    find_best_split,
    train_forest,
    train_tree,
    tree_importance,
)

TECHNIQUES = ("LR", "SW-LR", "SVR", "DTR", "RFR")
# MEAN is a diagnostic baseline that ignores the features
DIAGNOSTIC_TECHNIQUES = ("MEAN",)

DEFAULT_HYPERPARAMS = {
    "LR": {},
    "SW-LR": {"removal_threshold": 1.96},
    "SVR": {"c": 10.0, "epsilon": 0.1, "epochs": 500, "step_size": 0.01},
    # leaves of 5 overfit a pure-noise target to R^2 ~ -0.25; 25 keeps it near 0
    "DTR": {"max_depth": 20, "min_samples_leaf": 25},
    "RFR": {"n_trees": 100, "mtry": None, "min_samples_leaf": 5, "max_depth": 20},
    "MEAN": {},
}


@dataclass(frozen=True)
class MeanModel:
    value: float
    n_features: int

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.full(X.shape[0], self.value)


@dataclass(frozen=True)
class ModelSpec:
    technique: str
    target: str
    feature_names: tuple = FEATURE_NAMES
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.technique not in TECHNIQUES + DIAGNOSTIC_TECHNIQUES:
            raise DomainError(f"unknown technique {self.technique!r}")
        if self.target not in KQI_NAMES:
            raise DomainError(f"unknown target KQI {self.target!r}")
        names = tuple(self.feature_names)
        if not names:
            raise DomainError("feature_names must be non-empty")
        bad = [f for f in names if f not in FEATURE_NAMES]
        if bad:
            raise DomainError(f"unknown features {bad}")
        object.__setattr__(self, "feature_names", names)
        defaults = DEFAULT_HYPERPARAMS[self.technique]
        unknown = set(self.hyperparams) - set(defaults)
        if unknown:
            raise DomainError(f"unknown {self.technique} hyperparameters {sorted(unknown)}")
        object.__setattr__(self, "hyperparams", {**defaults, **self.hyperparams})


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    model: object

    def predict(self, X):
        return predict(self.model, X)


def fit_matrix(spec: ModelSpec, X, y, seed=0):
    """Train the raw model for ``spec`` on an already extracted matrix."""
    hp = spec.hyperparams
    if spec.technique == "LR":
        return train_linear(X, y, spec.feature_names)
    if spec.technique == "SW-LR":
        return train_stepwise(X, y, hp["removal_threshold"], spec.feature_names)
    if spec.technique == "SVR":
        return train_svr(X, y, hp["c"], hp["epsilon"], hp["epochs"], hp["step_size"])
    if spec.technique == "DTR":
        return train_tree(X, y, hp["max_depth"], hp["min_samples_leaf"])
    if spec.technique == "RFR":
        return train_forest(
            X,
            y,
            n_trees=hp["n_trees"],
            mtry=hp["mtry"],
            min_samples_leaf=hp["min_samples_leaf"],
            max_depth=hp["max_depth"],
            seed=seed,
        )
    return MeanModel(float(np.mean(y)), len(spec.feature_names))


def fit(spec: ModelSpec, X, y, seed=0) -> TrainedModel:
    return TrainedModel(spec, fit_matrix(spec, X, y, seed))


def predict(model, x):
    """Evaluate a trained model on one feature vector (-> float) or a matrix."""
    if isinstance(model, TrainedModel):
        model = model.model
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DomainError(
            f"expected {model.n_features} features per row, got shape {arr.shape}"
        )
    out = model.predict(X)
    return float(out[0]) if single else out


__all__ = [
    "DEFAULT_HYPERPARAMS",
    "TECHNIQUES",
    "ForestModel",
    "LinearModel",
    "MeanModel",
    "ModelSpec",
    "Split",
    "SvrModel",
    "TrainedModel",
    "TreeModel",
    "backend_name",
    "default_mtry",
    "find_best_split",
    "fit",
    "fit_matrix",
    "ols",
    "predict",
    "t_statistics",
    "train_forest",
    "train_linear",
    "train_stepwise",
    "train_svr",
    "train_tree",
    "tree_importance",
]

backend_name = _backend.name
