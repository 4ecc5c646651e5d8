"""Goodness-of-fit metrics, cross-validation and the comparison experiments."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import rng as _rng
from .dataset import (
    A_SIZES,
    B_SIZES,
    KQI_NAMES,
    Dataset,
    filter_by_file_size,
    holdout_indices,
    kfold_partition,
    to_matrix,
)
from .errors import DegenerateInputError, DomainError, KqiError, TrainingError
from .regression import TECHNIQUES, ModelSpec, TrainedModel, fit, predict

HOLDOUT_TRAIN_FRACTION = 0.7
DEFAULT_THRESHOLD = 0.8


def r_squared(y, yhat):
    """Coefficient of determination, using the mean of ``y`` as baseline."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise DomainError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size < 2:
        raise DomainError("r_squared needs at least 2 values")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateInputError("r_squared undefined for a constant target")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def rmse(y, yhat):
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise DomainError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size < 1:
        raise DomainError("rmse needs at least one value")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


class Metrics(NamedTuple):
    r_squared: float
    rmse: float

    @classmethod
    def of(cls, y, yhat):
        return cls(r_squared(y, yhat), rmse(y, yhat))


@dataclass(frozen=True)
class CvReport:
    technique: str
    target: str
    k: int
    seed: int
    folds: tuple  # Metrics per fold, in fold-index order

    def __post_init__(self):
        if len(self.folds) != self.k:
            raise ValueError("one Metrics entry per fold required")

    @property
    def r2_values(self):
        return np.array([m.r_squared for m in self.folds])

    @property
    def rmse_values(self):
        return np.array([m.rmse for m in self.folds])

    @property
    def mean(self):
        return Metrics(float(self.r2_values.mean()), float(self.rmse_values.mean()))

    @property
    def std(self):
        return Metrics(float(self.r2_values.std()), float(self.rmse_values.std()))

    def to_dict(self):
        return {
            "technique": self.technique,
            "kqi": self.target,
            "k": self.k,
            "seed": self.seed,
            "folds": [{"r2": m.r_squared, "rmse": m.rmse} for m in self.folds],
            "mean": {"r2": self.mean.r_squared, "rmse": self.mean.rmse},
            "std": {"r2": self.std.r_squared, "rmse": self.std.rmse},
        }

    @classmethod
    def from_dict(cls, d):
        folds = tuple(Metrics(float(f["r2"]), float(f["rmse"])) for f in d["folds"])
        return cls(d["technique"], d["kqi"], int(d["k"]), int(d["seed"]), folds)


def cross_validate(spec: ModelSpec, dataset: Dataset, k: int, seed: int) -> CvReport:
    """k-fold CV; fold ``i`` trains on every other fold and is scored on ``i``.

    Stochastic learners in fold ``i`` are seeded from ``(seed, i)``.
    """
    folds = kfold_partition(dataset, k, seed)
    X, y = to_matrix(dataset, spec.feature_names, spec.target)
    results = []
    for i in range(k):
        test = folds.test_indices(i)
        train = folds.train_indices(i)
        assert not np.intersect1d(test, train).size, "fold leak"
        try:
            model = fit(spec, X[train], y[train], seed=_rng.derive_seed(seed, i))
            results.append(Metrics.of(y[test], predict(model, X[test])))
        except (KqiError, ValueError, ArithmeticError) as exc:
            raise TrainingError(f"{spec.technique}/{spec.target}: {exc}", fold=i) from exc
    return CvReport(spec.technique, spec.target, k, seed, tuple(results))


def default_specs(techniques=TECHNIQUES, targets=KQI_NAMES, hyperparams=None, feature_names=None):
    hyperparams = hyperparams or {}
    kwargs = {} if feature_names is None else {"feature_names": tuple(feature_names)}
    return [
        ModelSpec(t, kqi, hyperparams=dict(hyperparams.get(t, {})), **kwargs)
        for t in techniques
        for kqi in targets
    ]


def compare_techniques(dataset: Dataset, specs, k: int, seed: int):
    """Cross-validated metrics keyed by (technique, KQI), in ``specs`` order."""
    table = {}
    for spec in specs:
        key = (spec.technique, spec.target)
        if key in table:
            raise DomainError(f"duplicate spec for {key}")
        table[key] = cross_validate(spec, dataset, k, seed)
    return table


@dataclass(frozen=True)
class GeneralizationReport:
    a_sizes: tuple
    b_sizes: tuple
    seed: int
    results: dict  # (technique, kqi) -> {"full": Metrics, "partial": Metrics}
    test_size: int = 0

    def to_dict(self):
        return {
            "a_sizes": list(self.a_sizes),
            "b_sizes": list(self.b_sizes),
            "seed": self.seed,
            "test_size": self.test_size,
            "results": [
                {
                    "technique": t,
                    "kqi": kqi,
                    **{arm: {"r2": m.r_squared, "rmse": m.rmse} for arm, m in arms.items()},
                }
                for (t, kqi), arms in self.results.items()
            ],
        }


@dataclass(frozen=True)
class ArmSplit:
    """Training/test sets of the full-vs-partial experiment."""

    partial_train: Dataset
    full_train: Dataset
    test: Dataset
    test_rows: np.ndarray = field(repr=False)


def generalization_split(dataset_a, dataset_b, seed, allow_overlap=False) -> ArmSplit:
    """B is split 70/30; partial trains on A, full on A plus B-train.

    Samples of B-train already present in A are not added twice, which only
    matters for the overlapping diagnostic case.
    """
    sizes_a = {s.features.file_size_bytes for s in dataset_a}
    sizes_b = {s.features.file_size_bytes for s in dataset_b}
    if not allow_overlap and sizes_a & sizes_b:
        raise DomainError(f"datasets A and B share file sizes {sorted(sizes_a & sizes_b)}")
    if len(dataset_b) < 2:
        raise DomainError("dataset B needs at least 2 samples")
    train_rows, test_rows = holdout_indices(len(dataset_b), HOLDOUT_TRAIN_FRACTION, seed)
    b_train = dataset_b.subset(train_rows)
    in_a = set(dataset_a.samples)
    extra = tuple(s for s in b_train.samples if s not in in_a)
    full = Dataset(dataset_a.samples + extra, "A+B[train]")
    return ArmSplit(dataset_a, full, dataset_b.subset(test_rows, "B[test]"), test_rows)


def full_vs_partial(dataset_a, dataset_b, specs, seed, allow_overlap=False) -> GeneralizationReport:
    split = generalization_split(dataset_a, dataset_b, seed, allow_overlap)
    results = {}
    for spec in specs:
        Xt, yt = to_matrix(split.test, spec.feature_names, spec.target)
        arms = {}
        # both arms score the identical rows of B
        for arm, train in (("full", split.full_train), ("partial", split.partial_train)):
            X, y = to_matrix(train, spec.feature_names, spec.target)
            model = fit(spec, X, y, seed=_rng.derive_seed(seed, 1))
            arms[arm] = Metrics.of(yt, predict(model, Xt))
        results[(spec.technique, spec.target)] = arms
    sizes = lambda d: tuple(sorted({s.features.file_size_bytes for s in d}))
    return GeneralizationReport(
        sizes(dataset_a), sizes(dataset_b), seed, results, test_size=len(split.test)
    )


class Fitness(enum.Enum):
    ADEQUATE = "Adequate"
    RETRAIN = "Retrain"


def fitness_gate(r2: float, threshold: float = DEFAULT_THRESHOLD) -> Fitness:
    return Fitness.ADEQUATE if r2 >= threshold else Fitness.RETRAIN


class TraceRecord(NamedTuple):
    index: int
    bandwidth_mhz: float
    measured: float
    predicted: float
    band_low: float
    band_high: float

    @property
    def inside(self):
        return self.band_low <= self.measured <= self.band_high


def prediction_trace(model: TrainedModel, dataset: Dataset, rmse_band: float):
    """Measured vs predicted KQI per sample with a +/- ``rmse_band`` interval."""
    if len(dataset) == 0:
        raise DomainError("prediction_trace needs a non-empty dataset")
    if rmse_band < 0:
        raise DomainError("rmse_band must be nonnegative")
    X, y = to_matrix(dataset, model.spec.feature_names, model.spec.target)
    yhat = predict(model, X)
    bw = dataset.column("bandwidth_mhz")
    return [
        TraceRecord(i, float(bw[i]), float(y[i]), float(yhat[i]), float(yhat[i] - rmse_band), float(yhat[i] + rmse_band))
        for i in range(len(dataset))
    ]


def ab_split(dataset: Dataset, a_sizes=A_SIZES, b_sizes=B_SIZES):
    """Datasets A and B selected by file size."""
    return filter_by_file_size(dataset, a_sizes), filter_by_file_size(dataset, b_sizes)
