"""Measurement samples, CSV I/O and dataset partitioning.

A sample pairs one row of low-layer features (radio metrics, cell bandwidth,
load level, requested file size) with the three file-transfer KQIs measured
for that download. Datasets are immutable, ordered tuples of samples.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import rng as _rng
from .errors import DomainError, SchemaError, ValidationError

FEATURE_NAMES = (
    "rsrp_dbm",
    "rsrq_db",
    "rssi_dbm",
    "bandwidth_mhz",
    "load_level",
    "file_size_bytes",
)
KQI_NAMES = ("iftd_s", "fthr_mbps", "tftd_s")
CSV_HEADER = FEATURE_NAMES + KQI_NAMES

KB = 1000
MB = 1000 * KB

# Experiment groups used to test generalisation to unseen file sizes.
A_SIZES = (1 * KB, 100 * KB, 1 * MB, 10 * MB, 100 * MB)
B_SIZES = (10 * KB, 500 * KB, 5 * MB, 20 * MB)


class LoadLevel(enum.IntEnum):
    """Additional cell traffic demand; the integer value is the ordinal code."""

    NONE = 0
    LOW = 1
    MEDIUM = 2

    @property
    def token(self):
        return self.name.lower()

    @classmethod
    def parse(cls, value):
        if isinstance(value, LoadLevel):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValidationError(f"unknown load_level token {value!r}") from None
        raise ValidationError(f"load_level must be a token, got {value!r}")


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class LowLayerFeatures:
    rsrp_dbm: float
    rsrq_db: float
    rssi_dbm: float
    bandwidth_mhz: float
    load_level: LoadLevel
    file_size_bytes: int

    def __post_init__(self):
        for name in ("rsrp_dbm", "rsrq_db", "rssi_dbm", "bandwidth_mhz"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        object.__setattr__(self, "load_level", LoadLevel.parse(self.load_level))
        size = self.file_size_bytes
        if isinstance(size, float) and size.is_integer():
            size = int(size)
        if isinstance(size, bool) or not isinstance(size, (int, np.integer)):
            raise ValidationError(f"file_size_bytes must be an integer, got {size!r}")
        object.__setattr__(self, "file_size_bytes", int(size))
        if self.file_size_bytes <= 0:
            raise ValidationError(f"file_size_bytes must be positive, got {self.file_size_bytes}")
        if self.bandwidth_mhz <= 0:
            raise ValidationError(f"bandwidth_mhz must be positive, got {self.bandwidth_mhz}")
        if self.rsrq_db >= 0:
            raise ValidationError(f"rsrq_db must be negative, got {self.rsrq_db}")
        if self.rssi_dbm < self.rsrp_dbm:
            raise ValidationError(
                f"rssi_dbm ({self.rssi_dbm}) must not be below rsrp_dbm ({self.rsrp_dbm})"
            )

    def as_vector(self, feature_names=FEATURE_NAMES):
        """Numeric encoding in ``feature_names`` order (load as 0/1/2)."""
        out = []
        for name in feature_names:
            if name not in FEATURE_NAMES:
                raise DomainError(f"unknown feature {name!r}")
            out.append(float(getattr(self, name)))
        return np.array(out, dtype=np.float64)


@dataclass(frozen=True)
class KqiVector:
    iftd_s: float
    fthr_mbps: float
    tftd_s: float

    def __post_init__(self):
        for name in KQI_NAMES:
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.iftd_s < 0:
            raise ValidationError(f"iftd_s must be nonnegative, got {self.iftd_s}")
        if self.fthr_mbps <= 0:
            raise ValidationError(f"fthr_mbps must be positive, got {self.fthr_mbps}")
        if self.tftd_s <= 0:
            raise ValidationError(f"tftd_s must be positive, got {self.tftd_s}")
        if self.tftd_s < self.iftd_s:
            raise ValidationError(
                f"tftd_s ({self.tftd_s}) must not be below iftd_s ({self.iftd_s})"
            )


@dataclass(frozen=True)
class MeasurementSample:
    features: LowLayerFeatures
    kqis: KqiVector

    def row(self):
        f, k = self.features, self.kqis
        return (
            f.rsrp_dbm,
            f.rsrq_db,
            f.rssi_dbm,
            f.bandwidth_mhz,
            f.load_level,
            f.file_size_bytes,
            k.iftd_s,
            k.fthr_mbps,
            k.tftd_s,
        )


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of measurement samples."""

    samples: tuple = ()
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        for i, s in enumerate(samples):
            if not isinstance(s, MeasurementSample):
                raise ValidationError(f"sample {i} is not a MeasurementSample")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, item):
        return self.samples[item]

    @cached_property
    def _columns(self):
        cols = {}
        n = len(self.samples)
        for name in FEATURE_NAMES:
            cols[name] = np.fromiter(
                (float(getattr(s.features, name)) for s in self.samples), np.float64, n
            )
        for name in KQI_NAMES:
            cols[name] = np.fromiter((getattr(s.kqis, name) for s in self.samples), np.float64, n)
        for arr in cols.values():
            arr.setflags(write=False)
        return cols

    def column(self, name):
        """Read-only float column for a feature or KQI name."""
        if name not in CSV_HEADER:
            raise DomainError(f"unknown column {name!r}")
        return self._columns[name]

    def subset(self, indices, provenance=None):
        return Dataset(
            tuple(self.samples[i] for i in indices),
            self.provenance if provenance is None else provenance,
        )

    def concat(self, other, provenance=None):
        prov = provenance if provenance is not None else f"{self.provenance}+{other.provenance}"
        return Dataset(self.samples + other.samples, prov)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: np.ndarray
    seed: int

    def test_indices(self, fold):
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold):
        return np.flatnonzero(self.assignment != fold)

    def fold_sizes(self):
        return np.bincount(self.assignment, minlength=self.k)


def _format_real(x):
    # repr gives the shortest string that round-trips to the same double
    return repr(float(x))


def dumps_csv(dataset: Dataset) -> str:
    """CSV text of ``dataset`` exactly as :func:`save_csv` writes it."""
    lines = [",".join(CSV_HEADER)]
    for s in dataset.samples:
        row = s.row()
        fields = [_format_real(v) for v in row[:4]]
        fields += [row[4].token, str(row[5])]
        fields += [_format_real(v) for v in row[6:]]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def save_csv(dataset: Dataset, path) -> None:
    Path(path).write_text(dumps_csv(dataset), encoding="utf-8", newline="")


def _parse_real(token, name, row):
    try:
        return float(token)
    except ValueError:
        raise ValidationError(f"{name} is not numeric: {token!r}", row=row) from None


def _parse_int(token, name, row):
    try:
        return int(token)
    except ValueError:
        raise ValidationError(f"{name} is not an integer: {token!r}", row=row) from None


def parse_features(values, row=None) -> LowLayerFeatures:
    """Build features from six CSV tokens in ``FEATURE_NAMES`` order."""
    try:
        return LowLayerFeatures(
            rsrp_dbm=_parse_real(values[0], "rsrp_dbm", row),
            rsrq_db=_parse_real(values[1], "rsrq_db", row),
            rssi_dbm=_parse_real(values[2], "rssi_dbm", row),
            bandwidth_mhz=_parse_real(values[3], "bandwidth_mhz", row),
            load_level=LoadLevel.parse(values[4]),
            file_size_bytes=_parse_int(values[5], "file_size_bytes", row),
        )
    except ValidationError as exc:
        if exc.row is None and row is not None:
            raise ValidationError(str(exc), row=row) from None
        raise


def read_rows(path, header):
    """Yield (row_number, tokens) after checking the exact header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(t.strip() for t in first) != tuple(header):
            raise SchemaError(f"{path}: expected header {','.join(header)!r}, got {first!r}")
        for i, tokens in enumerate(reader, start=1):
            if not tokens:
                continue
            if len(tokens) != len(header):
                raise ValidationError(
                    f"expected {len(header)} fields, got {len(tokens)}", row=i
                )
            yield i, tokens


def load_csv(path, provenance=None) -> Dataset:
    samples = []
    for i, tokens in read_rows(path, CSV_HEADER):
        features = parse_features(tokens[:6], row=i)
        try:
            kqis = KqiVector(
                iftd_s=_parse_real(tokens[6], "iftd_s", i),
                fthr_mbps=_parse_real(tokens[7], "fthr_mbps", i),
                tftd_s=_parse_real(tokens[8], "tftd_s", i),
            )
        except ValidationError as exc:
            if exc.row is None:
                raise ValidationError(str(exc), row=i) from None
            raise
        samples.append(MeasurementSample(features, kqis))
    return Dataset(tuple(samples), provenance if provenance is not None else str(path))


def split_holdout(dataset: Dataset, train_fraction: float, seed: int):
    """Seeded shuffle, then the first ceil(n * fraction) samples go to train."""
    n = len(dataset)
    if n == 0:
        raise DomainError("cannot split an empty dataset")
    if not 0.0 < train_fraction <= 1.0:
        raise DomainError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    # round first so 10 * 0.7 = 7.000000000000001 does not ceil to 8
    n_train = math.ceil(round(n * train_fraction, 9))
    perm = _rng.stream(seed).permutation(n)
    return (
        dataset.subset(perm[:n_train], f"{dataset.provenance}[train]"),
        dataset.subset(perm[n_train:], f"{dataset.provenance}[test]"),
    )


def holdout_indices(n, train_fraction, seed):
    """Index form of :func:`split_holdout` (same permutation)."""
    n_train = math.ceil(round(n * train_fraction, 9))
    perm = _rng.stream(seed).permutation(n)
    return perm[:n_train], perm[n_train:]


def kfold_partition(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    n = len(dataset)
    if k < 2 or k > n:
        raise DomainError(f"k must satisfy 2 <= k <= n (n={n}), got {k}")
    perm = _rng.stream(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % k
    assignment.setflags(write=False)
    return FoldAssignment(k=k, assignment=assignment, seed=seed)


def filter_by_file_size(dataset: Dataset, sizes: Iterable[int]) -> Dataset:
    wanted = {int(s) for s in sizes}
    return Dataset(
        tuple(s for s in dataset.samples if s.features.file_size_bytes in wanted),
        dataset.provenance,
    )


def to_matrix(dataset: Dataset, feature_names: Sequence[str], target: str):
    """Design matrix (n x p, float64) and target vector for one KQI."""
    feature_names = list(feature_names)
    for name in feature_names:
        if name not in FEATURE_NAMES:
            raise DomainError(f"unknown feature {name!r}")
    if target not in KQI_NAMES:
        raise DomainError(f"unknown target KQI {target!r}")
    n = len(dataset)
    X = np.empty((n, len(feature_names)), dtype=np.float64)
    for j, name in enumerate(feature_names):
        X[:, j] = dataset.column(name) if n else 0.0
    y = np.array(dataset.column(target), dtype=np.float64) if n else np.empty(0)
    return X, y
