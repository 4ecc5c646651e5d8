"""Training and application phases with a persistent model registry.

Training cross-validates every configured technique per KQI, keeps the one
with the best mean R^2, refits it on all data and gates it on a fitness
threshold. Application predicts KQIs from low-layer features only, and
yields :class:`Unavailable` for KQIs whose model failed the gate.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dataset import (
    CSV_HEADER,
    FEATURE_NAMES,
    KQI_NAMES,
    Dataset,
    KqiVector,
    LowLayerFeatures,
    MeasurementSample,
    dumps_csv,
    to_matrix,
)
from .errors import (
    DomainError,
    RegistryParseError,
    RegistryVersionError,
    TrainingError,
    ValidationError,
)
from .evaluation import CvReport, Fitness, cross_validate, fitness_gate, rmse
from .regression import (
    TECHNIQUES,
    ForestModel,
    LinearModel,
    MeanModel,
    ModelSpec,
    SvrModel,
    TrainedModel,
    TreeModel,
    fit,
    predict,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FrameworkConfig:
    techniques: tuple = TECHNIQUES
    hyperparams: dict = field(default_factory=dict)
    k: int = 5
    threshold: float = 0.8
    seed: int = 0
    feature_names: tuple = FEATURE_NAMES
    targets: tuple = KQI_NAMES

    def __post_init__(self):
        object.__setattr__(self, "techniques", tuple(self.techniques))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.k < 2:
            raise DomainError(f"k must be >= 2, got {self.k}")
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold must lie in [0, 1], got {self.threshold}")
        if not self.techniques:
            raise DomainError("at least one technique is required")
        for t in self.techniques:
            ModelSpec(t, KQI_NAMES[0], self.feature_names, dict(self.hyperparams.get(t, {})))
        unknown = [t for t in self.targets if t not in KQI_NAMES]
        if unknown:
            raise DomainError(f"unknown targets {unknown}")

    def spec(self, technique, target):
        return ModelSpec(
            technique, target, self.feature_names, dict(self.hyperparams.get(technique, {}))
        )

    def to_dict(self):
        return {
            "techniques": list(self.techniques),
            "hyperparams": {t: dict(h) for t, h in self.hyperparams.items()},
            "k": self.k,
            "threshold": self.threshold,
            "seed": self.seed,
            "feature_names": list(self.feature_names),
            "targets": list(self.targets),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            techniques=tuple(d["techniques"]),
            hyperparams={t: dict(h) for t, h in d["hyperparams"].items()},
            k=int(d["k"]),
            threshold=float(d["threshold"]),
            seed=int(d["seed"]),
            feature_names=tuple(d["feature_names"]),
            targets=tuple(d["targets"]),
        )


class Fingerprint(NamedTuple):
    n: int
    content_hash: str

    @classmethod
    def of(cls, dataset):
        digest = hashlib.sha256(dumps_csv(dataset).encode("utf-8")).hexdigest()
        return cls(len(dataset), digest)


@dataclass(frozen=True)
class RegistryEntry:
    technique: str
    status: Fitness
    cv: CvReport
    model: TrainedModel
    train_rmse: float
    candidates: dict  # technique -> CvReport for every technique that trained
    failures: dict = field(default_factory=dict)  # technique -> error message

    @property
    def cv_r2(self):
        return self.cv.mean.r_squared


@dataclass(frozen=True)
class ModelRegistry:
    entries: dict
    config: FrameworkConfig
    fingerprint: Fingerprint
    training_data: Dataset = field(repr=False)
    schema_version: int = SCHEMA_VERSION

    @property
    def all_adequate(self):
        return all(e.status is Fitness.ADEQUATE for e in self.entries.values())


class Unavailable(NamedTuple):
    """Placeholder for a KQI whose model did not pass the fitness gate."""

    r_squared: float


def _select(candidates):
    # canonical technique order settles exact ties
    order = sorted(candidates, key=lambda t: TECHNIQUES.index(t) if t in TECHNIQUES else len(TECHNIQUES))
    best = order[0]
    for t in order[1:]:
        if candidates[t].mean.r_squared > candidates[best].mean.r_squared:
            best = t
    return best


def train_phase(dataset: Dataset, config: FrameworkConfig) -> ModelRegistry:
    if len(dataset) == 0:
        raise DomainError("cannot train on an empty dataset")
    entries = {}
    for target in config.targets:
        candidates, failures = {}, {}
        for technique in config.techniques:
            try:
                candidates[technique] = cross_validate(
                    config.spec(technique, target), dataset, config.k, config.seed
                )
            except (TrainingError, DomainError) as exc:
                failures[technique] = str(exc)
        if not candidates:
            raise TrainingError(f"every technique failed for {target}: {failures}")
        best = _select(candidates)
        spec = config.spec(best, target)
        X, y = to_matrix(dataset, spec.feature_names, target)
        model = fit(spec, X, y, seed=config.seed)
        report = candidates[best]
        entries[target] = RegistryEntry(
            technique=best,
            status=fitness_gate(report.mean.r_squared, config.threshold),
            cv=report,
            model=model,
            train_rmse=rmse(y, predict(model, X)),
            candidates=candidates,
            failures=failures,
        )
    return ModelRegistry(entries, config, Fingerprint.of(dataset), dataset)


def predict_kqi(registry: ModelRegistry, features: LowLayerFeatures):
    """Per-KQI prediction, or :class:`Unavailable` for gated-out KQIs."""
    if not isinstance(features, LowLayerFeatures):
        raise ValidationError("features must be a LowLayerFeatures instance")
    out = {}
    for target, entry in registry.entries.items():
        if entry.status is Fitness.ADEQUATE:
            x = features.as_vector(entry.model.spec.feature_names)
            out[target] = predict(entry.model, x)
        else:
            out[target] = Unavailable(entry.cv_r2)
    return out


def augment_and_retrain(registry: ModelRegistry, new_data: Dataset, config=None) -> ModelRegistry:
    """Re-run training on the retained data followed by ``new_data``."""
    config = registry.config if config is None else config
    return train_phase(registry.training_data.concat(new_data, "augmented"), config)


# -- persistence -------------------------------------------------------------


def model_to_dict(model):
    if isinstance(model, LinearModel):
        return {
            "kind": "linear",
            "intercept": model.intercept,
            "coefficients": dict(model.coefficients),
            "feature_names": list(model.feature_names),
        }
    if isinstance(model, TreeModel):
        nodes = []
        for i in range(model.n_nodes):
            if model.feature[i] >= 0:
                nodes.append(
                    {
                        "kind": "branch",
                        "feature": int(model.feature[i]),
                        "threshold": float(model.threshold[i]),
                        "left": int(model.left[i]),
                        "right": int(model.right[i]),
                        "risk_reduction": float(model.risk_reduction[i]),
                        "n_samples": int(model.n_samples[i]),
                        "mean": float(model.value[i]),
                    }
                )
            else:
                nodes.append(
                    {"kind": "leaf", "mean": float(model.value[i]), "n_samples": int(model.n_samples[i])}
                )
        return {"kind": "tree", "n_features": model.n_features, "root": 0, "nodes": nodes}
    if isinstance(model, ForestModel):
        return {"kind": "forest", "seed": model.seed, "trees": [model_to_dict(t) for t in model.trees]}
    if isinstance(model, SvrModel):
        return {
            "kind": "svr",
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "feature_mean": model.feature_mean.tolist(),
            "feature_std": model.feature_std.tolist(),
            "target_mean": model.target_mean,
            "target_std": model.target_std,
        }
    if isinstance(model, MeanModel):
        return {"kind": "mean", "value": model.value, "n_features": model.n_features}
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d):
    kind = d["kind"]
    if kind == "linear":
        return LinearModel(float(d["intercept"]), {k: float(v) for k, v in d["coefficients"].items()}, tuple(d["feature_names"]))
    if kind == "tree":
        nodes = d["nodes"]
        if d.get("root", 0) != 0:
            raise RegistryParseError("tree root must be node 0")
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        value = np.zeros(n)
        count = np.zeros(n, dtype=np.int64)
        delta = np.zeros(n)
        for i, node in enumerate(nodes):
            value[i] = float(node["mean"])
            count[i] = int(node["n_samples"])
            if node["kind"] == "branch":
                feature[i] = int(node["feature"])
                threshold[i] = float(node["threshold"])
                left[i] = int(node["left"])
                right[i] = int(node["right"])
                delta[i] = float(node["risk_reduction"])
            elif node["kind"] != "leaf":
                raise RegistryParseError(f"unknown node kind {node['kind']!r}")
        tree = TreeModel(feature, threshold, left, right, value, count, delta, int(d["n_features"]))
        try:
            tree.check_structure()
        except ValueError as exc:
            raise RegistryParseError(f"invalid tree: {exc}") from None
        return tree
    if kind == "forest":
        return ForestModel(tuple(model_from_dict(t) for t in d["trees"]), int(d["seed"]))
    if kind == "svr":
        return SvrModel(
            np.array(d["weights"], dtype=np.float64),
            float(d["bias"]),
            np.array(d["feature_mean"], dtype=np.float64),
            np.array(d["feature_std"], dtype=np.float64),
            float(d["target_mean"]),
            float(d["target_std"]),
        )
    if kind == "mean":
        return MeanModel(float(d["value"]), int(d["n_features"]))
    raise RegistryParseError(f"unknown model kind {kind!r}")


def registry_to_dict(registry: ModelRegistry):
    entries = {}
    for target, e in registry.entries.items():
        spec = e.model.spec
        entries[target] = {
            "technique": e.technique,
            "status": e.status.value,
            "cv": e.cv.to_dict(),
            "train_rmse": e.train_rmse,
            "candidates": {t: r.to_dict() for t, r in e.candidates.items()},
            "failures": dict(e.failures),
            "spec": {
                "technique": spec.technique,
                "target": spec.target,
                "feature_names": list(spec.feature_names),
                "hyperparams": dict(spec.hyperparams),
            },
            "model": model_to_dict(e.model.model),
        }
    return {
        "schema_version": registry.schema_version,
        "config": registry.config.to_dict(),
        "dataset_fingerprint": {"n": registry.fingerprint.n, "content_hash": registry.fingerprint.content_hash},
        "entries": entries,
        "training_data": {
            "header": list(CSV_HEADER),
            "rows": [
                [*s.row()[:4], s.features.load_level.token, *s.row()[5:]]
                for s in registry.training_data.samples
            ],
        },
    }


def _dataset_from_rows(block):
    if list(block["header"]) != list(CSV_HEADER):
        raise RegistryParseError("training_data header mismatch")
    samples = []
    for row in block["rows"]:
        features = LowLayerFeatures(*row[:6])
        samples.append(MeasurementSample(features, KqiVector(*row[6:])))
    return Dataset(tuple(samples), "registry")


def registry_from_dict(doc):
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise RegistryParseError("registry document lacks schema_version")
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        raise RegistryVersionError(
            f"registry schema_version {version} is not supported (this build reads version {SCHEMA_VERSION})"
        )
    try:
        config = FrameworkConfig.from_dict(doc["config"])
        data = _dataset_from_rows(doc["training_data"])
        fp = Fingerprint(int(doc["dataset_fingerprint"]["n"]), str(doc["dataset_fingerprint"]["content_hash"]))
        entries = {}
        for target, e in doc["entries"].items():
            s = e["spec"]
            spec = ModelSpec(s["technique"], s["target"], tuple(s["feature_names"]), dict(s["hyperparams"]))
            entries[target] = RegistryEntry(
                technique=e["technique"],
                status=Fitness(e["status"]),
                cv=CvReport.from_dict(e["cv"]),
                model=TrainedModel(spec, model_from_dict(e["model"])),
                train_rmse=float(e["train_rmse"]),
                candidates={t: CvReport.from_dict(r) for t, r in e["candidates"].items()},
                failures=dict(e.get("failures", {})),
            )
    except RegistryParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise RegistryParseError(f"malformed registry: {exc!r}") from None
    if Fingerprint.of(data) != fp:
        raise RegistryParseError("training data does not match dataset_fingerprint")
    return ModelRegistry(entries, config, fp, data, version)


def save_registry(registry: ModelRegistry, path) -> None:
    Path(path).write_text(json.dumps(registry_to_dict(registry), separators=(",", ":")), encoding="utf-8")


def load_registry(path) -> ModelRegistry:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RegistryParseError(f"{path}: {exc}") from None
    return registry_from_dict(doc)
