"""Synthetic file-transfer measurement campaign.

Stands in for a physical LTE testbed: for every combination of file size,
cell bandwidth and load level it draws radio conditions for a static UE and
derives ground-truth KQIs from a simple link model:

* spectral efficiency follows a logistic curve in RSRP,
* the cell rate scales with bandwidth and the share left by background load,
* the initial delay is a server-side constant plus jitter (radio independent),
* a slow-start ramp penalises the average throughput of small files.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

from . import rng as _rng
from .dataset import (
    KB,
    MB,
    Dataset,
    KqiVector,
    LoadLevel,
    LowLayerFeatures,
    MeasurementSample,
)
from .errors import DomainError

IFTD_FLOOR_S = 1e-6


@dataclass(frozen=True)
class CampaignGrid:
    file_sizes_bytes: tuple = (
        1 * KB,
        10 * KB,
        100 * KB,
        500 * KB,
        1 * MB,
        5 * MB,
        10 * MB,
        20 * MB,
        100 * MB,
    )
    bandwidths_mhz: tuple = (5.0, 10.0, 15.0, 20.0)
    load_levels: tuple = (LoadLevel.NONE, LoadLevel.LOW, LoadLevel.MEDIUM)

    def __post_init__(self):
        object.__setattr__(self, "file_sizes_bytes", tuple(int(s) for s in self.file_sizes_bytes))
        object.__setattr__(self, "bandwidths_mhz", tuple(float(b) for b in self.bandwidths_mhz))
        object.__setattr__(self, "load_levels", tuple(LoadLevel.parse(l) for l in self.load_levels))
        for name in ("file_sizes_bytes", "bandwidths_mhz", "load_levels"):
            values = getattr(self, name)
            if not values:
                raise DomainError(f"{name} must be non-empty")
            if len(set(values)) != len(values):
                raise DomainError(f"{name} has duplicate entries")
        if any(s <= 0 for s in self.file_sizes_bytes) or any(b <= 0 for b in self.bandwidths_mhz):
            raise DomainError("grid values must be positive")

    def combinations(self):
        """(file_size, bandwidth, load) triples in grid iteration order."""
        return [
            (size, bw, load)
            for size in self.file_sizes_bytes
            for bw in self.bandwidths_mhz
            for load in self.load_levels
        ]

    def __len__(self):
        return len(self.file_sizes_bytes) * len(self.bandwidths_mhz) * len(self.load_levels)


@dataclass(frozen=True)
class NoiseParams:
    rate_lognormal_sigma: float = 0.1
    rsrq_sigma_db: float = 0.5
    # 0.005 s keeps IFTD spread under 5% of the 0.12 s server delay
    iftd_sigma_s: float = 0.005

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise DomainError(f"noise.{f.name} must be nonnegative")


@dataclass(frozen=True)
class GeneratorParams:
    prb_per_bw: dict = field(default_factory=lambda: {5.0: 25, 10.0: 50, 15.0: 75, 20.0: 100})
    load_fraction: dict = field(
        default_factory=lambda: {LoadLevel.NONE: 0.0, LoadLevel.LOW: 0.2, LoadLevel.MEDIUM: 0.5}
    )
    rsrp_range_dbm: tuple = (-110.0, -75.0)
    eff_max_bps_hz: float = 5.0
    # midpoint/slope set so bandwidth outranks radio for TFTD while RSRP
    # still ranks among the top FTHR predictors
    eff_midpoint_dbm: float = -100.0
    eff_slope_db: float = 10.0
    overhead_factor: float = 0.75
    ramp_time_s: float = 0.4
    ramp_scale_bytes: float = 50000.0
    server_delay_s: float = 0.12
    noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        prb = {float(k): int(v) for k, v in self.prb_per_bw.items()}
        loads = {LoadLevel.parse(k): float(v) for k, v in self.load_fraction.items()}
        object.__setattr__(self, "prb_per_bw", prb)
        object.__setattr__(self, "load_fraction", loads)
        object.__setattr__(self, "rsrp_range_dbm", tuple(float(v) for v in self.rsrp_range_dbm))
        if any(v <= 0 for v in prb.values()):
            raise DomainError("PRB counts must be positive")
        if any(not 0.0 <= v < 1.0 for v in loads.values()):
            raise DomainError("load fractions must lie in [0, 1)")
        lo, hi = self.rsrp_range_dbm
        if not lo <= hi:
            raise DomainError("rsrp_range_dbm must be (low, high) with low <= high")
        for name in (
            "eff_max_bps_hz",
            "eff_slope_db",
            "overhead_factor",
            "ramp_scale_bytes",
        ):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.ramp_time_s < 0 or self.server_delay_s < 0:
            raise DomainError("ramp_time_s and server_delay_s must be nonnegative")

    def without_noise(self):
        return replace(self, noise=NoiseParams(0.0, 0.0, 0.0))

    def spectral_efficiency(self, rsrp_dbm):
        return self.eff_max_bps_hz / (
            1.0 + math.exp(-(rsrp_dbm - self.eff_midpoint_dbm) / self.eff_slope_db)
        )


def default_grid() -> CampaignGrid:
    return CampaignGrid()


def _load_fraction(params, load):
    try:
        return params.load_fraction[LoadLevel.parse(load)]
    except KeyError:
        raise DomainError(f"no load fraction configured for {load!r}") from None


def sample_radio(bandwidth_mhz, load, params: GeneratorParams, rng):
    """Draw (rsrp, rsrq, rssi) for one experiment.

    RSSI adds the reference-signal power over all 12 * N_PRB subcarriers and a
    load-dependent interference term; RSRQ = N_PRB * RSRP / RSSI in dB.
    """
    try:
        n_prb = params.prb_per_bw[float(bandwidth_mhz)]
    except KeyError:
        raise DomainError(f"no PRB mapping for bandwidth {bandwidth_mhz} MHz") from None
    frac = _load_fraction(params, load)
    lo, hi = params.rsrp_range_dbm
    rsrp = float(rng.uniform(lo, hi))
    rssi = rsrp + 10.0 * math.log10(12 * n_prb) + 3.0 * frac
    rsrq = 10.0 * math.log10(n_prb) + rsrp - rssi + float(rng.normal(0.0, params.noise.rsrq_sigma_db))
    return rsrp, rsrq, rssi


def ground_truth_kqi(features: LowLayerFeatures, params: GeneratorParams, rng) -> KqiVector:
    frac = _load_fraction(params, features.load_level)
    eta = params.spectral_efficiency(features.rsrp_dbm)
    rate_noise = float(rng.lognormal(0.0, params.noise.rate_lognormal_sigma))
    rate_bps = eta * features.bandwidth_mhz * 1e6 * params.overhead_factor * (1.0 - frac) * rate_noise
    iftd = max(IFTD_FLOOR_S, params.server_delay_s + float(rng.normal(0.0, params.noise.iftd_sigma_s)))
    size_bits = 8.0 * features.file_size_bytes
    transfer_time = size_bits / rate_bps + params.ramp_time_s * (
        1.0 - math.exp(-features.file_size_bytes / params.ramp_scale_bytes)
    )
    return KqiVector(
        iftd_s=iftd,
        fthr_mbps=size_bits / transfer_time / 1e6,
        tftd_s=iftd + transfer_time,
    )


def _replicate_counts(n_combos, total):
    base, extra = divmod(total, n_combos)
    return [base + (1 if i < extra else 0) for i in range(n_combos)]


def _generate_combination(args):
    combo_index, (size, bw, load), count, params, seed = args
    out = []
    for rep in range(count):
        gen = _rng.stream(seed, combo_index, rep)
        rsrp, rsrq, rssi = sample_radio(bw, load, params, gen)
        features = LowLayerFeatures(rsrp, rsrq, rssi, bw, load, size)
        out.append(MeasurementSample(features, ground_truth_kqi(features, params, gen)))
    return out


def run_campaign(
    grid: CampaignGrid,
    params: GeneratorParams,
    total_samples: int,
    seed: int,
    workers: int = 1,
) -> Dataset:
    """Generate ``total_samples`` experiments spread evenly over the grid.

    Each replicate draws from its own stream keyed by (seed, combination,
    replicate), so the result does not depend on ``workers``.
    """
    combos = grid.combinations()
    if total_samples < len(combos):
        raise DomainError(
            f"total_samples={total_samples} is below the {len(combos)} grid combinations"
        )
    counts = _replicate_counts(len(combos), total_samples)
    jobs = [(i, combo, counts[i], params, seed) for i, combo in enumerate(combos)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_generate_combination, jobs))
    else:
        chunks = [_generate_combination(job) for job in jobs]
    samples = tuple(s for chunk in chunks for s in chunk)
    return Dataset(samples, f"synthetic campaign seed={seed} n={total_samples}")
