"""Acceptance criteria 1-10, each checked at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the same condition. Pipeline-level criteria share one
9000-sample default campaign generated with ``ACCEPTANCE_SEED``.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_SEED
from test_tree import brute_force_split

from kqipredict import rng
from kqipredict.cli import main
from kqipredict.dataset import FEATURE_NAMES, LowLayerFeatures, to_matrix
from kqipredict.evaluation import (
    Fitness,
    ab_split,
    compare_techniques,
    cross_validate,
    default_specs,
    full_vs_partial,
    generalization_split,
    prediction_trace,
    r_squared,
    rmse,
)
from kqipredict.framework import FrameworkConfig, augment_and_retrain, load_registry, save_registry, train_phase
from kqipredict.regression import (
    TECHNIQUES,
    ModelSpec,
    find_best_split,
    fit,
    predict,
    train_forest,
    train_linear,
    train_svr,
    train_tree,
    tree_importance,
)
from kqipredict.simulator import GeneratorParams, default_grid, ground_truth_kqi, run_campaign

RADIO = ("rsrp_dbm", "rsrq_db", "rssi_dbm")


@pytest.fixture(scope="module")
def cv_table(campaign):
    start = time.perf_counter()
    table = compare_techniques(campaign, default_specs(), 5, ACCEPTANCE_SEED)
    return table, time.perf_counter() - start


@pytest.fixture(scope="module")
def generalization(campaign):
    a, b = ab_split(campaign)
    specs = default_specs(("DTR", "RFR"), ("tftd_s",))
    return a, b, full_vs_partial(a, b, specs, ACCEPTANCE_SEED)


def test_criterion_01_ols_oracle(verdict):
    gen = np.random.default_rng(ACCEPTANCE_SEED)
    start = time.perf_counter()
    worst_coef = worst_orth = 0.0
    for _ in range(200):
        n, p = int(gen.integers(6, 51)), int(gen.integers(1, 5))
        X = gen.normal(size=(n, p)) * gen.uniform(0.1, 10, size=p)
        y = X @ gen.normal(size=p) + gen.normal(size=n)
        A = np.column_stack([np.ones(n), X])
        want = np.linalg.solve(A.T @ A, A.T @ y)
        model = train_linear(X, y)
        got = np.concatenate([[model.intercept], model.coef_vector()])
        worst_coef = max(worst_coef, float(np.abs(got - want).max()))
        worst_orth = max(worst_orth, float(np.abs(A.T @ (y - model.predict(X))).max()))
    elapsed = time.perf_counter() - start
    ok = worst_coef <= 1e-8 and worst_orth <= 1e-8 and elapsed < 5
    verdict(1, ok, f"200 instances, max |beta diff| {worst_coef:.1e}, max |A^T r| {worst_orth:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_split_oracle(verdict):
    gen = np.random.default_rng(ACCEPTANCE_SEED)
    start = time.perf_counter()
    mismatches, worst_rel = 0, 0.0
    for _ in range(600):
        n, p = int(gen.integers(2, 31)), int(gen.integers(1, 5))
        X = gen.integers(0, 5, size=(n, p)).astype(float) if gen.random() < 0.5 else gen.normal(size=(n, p))
        y = gen.normal(size=n)
        got = find_best_split(X, y)
        want = brute_force_split(X, y, range(p))
        if want is None or got is None:
            mismatches += (want is None) != (got is None)
            continue
        if (got.feature, got.threshold) != want[:2]:
            mismatches += 1
            continue
        exact = want[2]
        rel = abs(Fraction(got.risk_reduction) - exact) / exact
        worst_rel = max(worst_rel, float(rel))
        mismatches += rel > Fraction(1, 10**12)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    verdict(2, ok, f"600 instances, {mismatches} mismatches, max rel Delta error {worst_rel:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_metric_oracles(verdict):
    gen = np.random.default_rng(ACCEPTANCE_SEED)
    worst = 0.0
    for _ in range(300):
        n = int(gen.integers(2, 200))
        y, yhat = gen.normal(size=n) * 5, gen.normal(size=n) * 5
        mean = math.fsum(y) / n
        ss_res = math.fsum((a - b) ** 2 for a, b in zip(y, yhat))
        ss_tot = math.fsum((a - mean) ** 2 for a in y)
        worst = max(worst, abs(r_squared(y, yhat) - (1 - ss_res / ss_tot)), abs(rmse(y, yhat) - math.sqrt(ss_res / n)))
    examples = (
        r_squared([1, 2, 3, 4], [1.1, 1.9, 3.2, 3.8]) == 0.98,
        rmse([0, 0], [3, 4]) == math.sqrt(12.5),
        rmse([2], [5]) == 3.0,
    )
    ok = worst <= 1e-12 and all(examples)
    verdict(3, ok, f"max deviation {worst:.1e}; worked examples {examples}")
    assert ok


def test_criterion_04_technique_comparison(cv_table, verdict):
    table, elapsed = cv_table
    r2 = {key: report.mean.r_squared for key, report in table.items()}
    trees_good = all(r2[(t, k)] >= 0.9 for t in ("DTR", "RFR") for k in ("tftd_s", "fthr_mbps"))
    iftd_flat = all(abs(r2[(t, "iftd_s")]) <= 0.15 for t in TECHNIQUES)
    trees_beat = all(r2[(t, "tftd_s")] > r2[(o, "tftd_s")] for t in ("DTR", "RFR") for o in ("LR", "SVR"))
    ok = trees_good and iftd_flat and trees_beat and elapsed < 120
    summary = ", ".join(f"{t}/{k[:4]} {r2[(t, k)]:.3f}" for t in TECHNIQUES for k in ("tftd_s", "fthr_mbps"))
    iftd = max(abs(r2[(t, "iftd_s")]) for t in TECHNIQUES)
    verdict(4, ok, f"{summary}; max |IFTD R2| {iftd:.3f}; {elapsed:.1f}s")
    assert ok


def test_criterion_05_importance_ranking(campaign, verdict):
    ranks = {}
    for kqi in ("tftd_s", "fthr_mbps"):
        X, y = to_matrix(campaign, FEATURE_NAMES, kqi)
        model = fit(ModelSpec("DTR", kqi), X, y)
        scores = tree_importance(model.model, FEATURE_NAMES)
        ranks[kqi] = sorted(scores, key=lambda f: -scores[f])
    ok = (
        ranks["tftd_s"][:2] == ["file_size_bytes", "bandwidth_mhz"]
        and ranks["fthr_mbps"][0] == "file_size_bytes"
        and "rsrp_dbm" in ranks["fthr_mbps"][:3]
    )
    verdict(5, ok, f"TFTD order {ranks['tftd_s'][:3]}, FTHR order {ranks['fthr_mbps'][:3]}")
    assert ok


def test_criterion_06_full_vs_partial(generalization, cv_table, verdict):
    _, _, report = generalization
    table, _ = cv_table
    parts = []
    ok = True
    for t in ("DTR", "RFR"):
        arms = report.results[(t, "tftd_s")]
        gap = arms["full"].r_squared - arms["partial"].r_squared
        drift = abs(arms["full"].r_squared - table[(t, "tftd_s")].mean.r_squared)
        ok &= gap >= 0.05 and drift <= 0.05
        parts.append(f"{t} full {arms['full'].r_squared:.3f} partial {arms['partial'].r_squared:.3f} gap {gap:.3f} |full-CV| {drift:.3f}")
    verdict(6, ok, "; ".join(parts))
    assert ok


def test_criterion_07_trace_coverage(generalization, verdict):
    a, b, report = generalization
    split = generalization_split(a, b, ACCEPTANCE_SEED)
    spec = ModelSpec("DTR", "tftd_s")
    X, y = to_matrix(split.full_train, FEATURE_NAMES, "tftd_s")
    model = fit(spec, X, y, seed=rng.derive_seed(ACCEPTANCE_SEED, 1))
    band = report.results[("DTR", "tftd_s")]["full"].rmse
    records = prediction_trace(model, split.test, band)
    coverage = sum(r.inside for r in records) / len(records)
    ok = coverage >= 0.7
    verdict(7, ok, f"{coverage:.1%} of {len(records)} B-test TFTD values within predicted +/- {band:.3f}s")
    assert ok


def test_criterion_08_framework_loop(campaign, tmp_path, verdict):
    registry = train_phase(campaign, FrameworkConfig(seed=ACCEPTANCE_SEED))
    status = {k: e.status for k, e in registry.entries.items()}
    gate_ok = status == {
        "iftd_s": Fitness.RETRAIN,
        "fthr_mbps": Fitness.ADEQUATE,
        "tftd_s": Fitness.ADEQUATE,
    }

    save_registry(registry, tmp_path / "reg.json")
    loaded = load_registry(tmp_path / "reg.json")
    probe = np.array([s.features.as_vector() for s in campaign[::90]])
    drift = max(
        float(np.abs(predict(e.model, probe) - predict(loaded.entries[k].model, probe)).max())
        for k, e in registry.entries.items()
    )

    a, b = ab_split(campaign)
    split = generalization_split(a, b, ACCEPTANCE_SEED)
    b_train = b.subset([i for i in range(len(b)) if i not in set(split.test_rows.tolist())])
    cfg = FrameworkConfig(techniques=("DTR",), targets=("tftd_s",), seed=ACCEPTANCE_SEED)
    before = train_phase(a, cfg)
    after = augment_and_retrain(before, b_train)
    Xt, yt = to_matrix(split.test, FEATURE_NAMES, "tftd_s")
    r2_before = r_squared(yt, predict(before.entries["tftd_s"].model, Xt))
    r2_after = r_squared(yt, predict(after.entries["tftd_s"].model, Xt))

    ok = gate_ok and drift <= 1e-12 and r2_after > r2_before
    gates = ", ".join(f"{k} {e.technique} {e.cv_r2:.3f} {e.status.value}" for k, e in registry.entries.items())
    verdict(8, ok, f"{gates}; round-trip drift {drift:.1e}; B-test DTR R2 {r2_before:.3f} -> {r2_after:.3f}")
    assert ok


def test_criterion_09_determinism(tmp_path, small_campaign, verdict):
    outs = []
    for i, workers in enumerate((1, 1, 4)):
        path = tmp_path / f"c{i}.csv"
        assert main(["simulate", "--seed", str(ACCEPTANCE_SEED), "--total", "9000", "--workers", str(workers), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    csv_same = outs[0] == outs[1] == outs[2]

    X, y = to_matrix(small_campaign, FEATURE_NAMES, "tftd_s")
    probe = X[::7]
    runs = []
    for _ in range(2):
        runs.append(
            (
                train_forest(X, y, n_trees=10, seed=5).predict(probe),
                train_tree(X, y).predict(probe),
                train_svr(X, y, epochs=100).predict(probe),
                cross_validate(ModelSpec("RFR", "fthr_mbps", hyperparams={"n_trees": 5}), small_campaign, 5, 9).to_dict(),
            )
        )
    train_same = all(np.array_equal(u, v) for u, v in zip(runs[0][:3], runs[1][:3])) and runs[0][3] == runs[1][3]
    ok = csv_same and train_same
    verdict(9, ok, f"simulate byte-identical across runs and 1/4 workers: {csv_same}; seeded training identical: {train_same}")
    assert ok


def test_criterion_10_generator_invariants(campaign, verdict):
    iftd = campaign.column("iftd_s")
    flat = float(iftd.std() / iftd.mean())
    corr = max(abs(float(np.corrcoef(iftd, campaign.column(f))[0, 1])) for f in RADIO)

    quiet = GeneratorParams().without_noise()
    quiet_campaign = run_campaign(default_grid(), quiet, 1080, seed=ACCEPTANCE_SEED)
    worst_rel = max(
        abs(s.kqis.fthr_mbps * (s.kqis.tftd_s - s.kqis.iftd_s) - 8 * s.features.file_size_bytes / 1e6)
        / (8 * s.features.file_size_bytes / 1e6)
        for s in quiet_campaign
    )

    monotone = True
    g = default_grid()
    for rsrp in (-110.0, -95.0, -75.0):
        for load in ("none", "low", "medium"):
            grid = np.empty((len(g.file_sizes_bytes), len(g.bandwidths_mhz)))
            for i, size in enumerate(g.file_sizes_bytes):
                for j, bw in enumerate(g.bandwidths_mhz):
                    f = LowLayerFeatures(rsrp, -11.0, rsrp + 30.0, bw, load, size)
                    grid[i, j] = ground_truth_kqi(f, quiet, rng.stream(0)).tftd_s
            monotone &= bool((np.diff(grid, axis=0) > 0).all() and (np.diff(grid, axis=1) < 0).all())

    ok = flat <= 0.05 and corr <= 0.1 and worst_rel <= 1e-12 and monotone
    verdict(10, ok, f"IFTD std/mean {flat:.3f}, max |corr| {corr:.3f}; fthr*(tftd-iftd) rel error {worst_rel:.1e}; monotone {monotone}")
    assert ok
