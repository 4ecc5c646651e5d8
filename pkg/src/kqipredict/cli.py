"""``kqipredict`` command-line tool.

Exit codes: 0 success, 1 usage error, 2 data/validation/config error,
3 registry written but at least one KQI failed the fitness gate.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import CliConfig, load_config
from .dataset import (
    FEATURE_NAMES,
    KQI_NAMES,
    filter_by_file_size,
    load_csv,
    parse_features,
    read_rows,
    save_csv,
    to_matrix,
)
from .errors import DomainError, KqiError
from .evaluation import (
    Fitness,
    compare_techniques,
    default_specs,
    full_vs_partial,
    prediction_trace,
)
from .framework import Unavailable, load_registry, predict_kqi, save_registry, train_phase
from .regression import ModelSpec, fit, tree_importance
from .simulator import run_campaign

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RETRAIN = 0, 1, 2, 3

UNAVAILABLE = "unavailable"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _k_value(text):
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if k < 2:
        raise argparse.ArgumentTypeError("k must be >= 2")
    return k


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _fmt(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _json_sibling(path):
    return Path(path).with_suffix(".json")


def _config(args) -> CliConfig:
    return load_config(args.config) if args.config else CliConfig()


# -- commands ----------------------------------------------------------------


def cmd_simulate(args):
    cfg = _config(args)
    dataset = run_campaign(cfg.grid, cfg.generator, args.total, args.seed, workers=args.workers)
    save_csv(dataset, args.out)
    return EXIT_OK


def cmd_evaluate(args):
    cfg = _config(args)
    k = cfg.k if args.k is None else args.k
    dataset = load_csv(args.data)
    specs = default_specs(cfg.techniques, KQI_NAMES, cfg.hyperparams, cfg.feature_names)
    table = compare_techniques(dataset, specs, k, args.seed)
    rows = []
    for (technique, kqi), report in table.items():
        for i, m in enumerate(report.folds):
            rows.append((technique, kqi, i, _fmt(m.r_squared), _fmt(m.rmse)))
        rows.append((technique, kqi, "mean", _fmt(report.mean.r_squared), _fmt(report.mean.rmse)))
        rows.append((technique, kqi, "std", _fmt(report.std.r_squared), _fmt(report.std.rmse)))
    _write_csv(args.out, ("technique", "kqi", "fold", "r2", "rmse"), rows)
    _write_json(
        _json_sibling(args.out),
        {"k": k, "seed": args.seed, "reports": [r.to_dict() for r in table.values()]},
    )
    return EXIT_OK


def importance_scores(dataset, target, cfg: CliConfig, normalize=False):
    """DTR importance for ``target`` as (feature, score) sorted descending.

    With ``normalize`` the scores are divided by the target variance, which
    makes them comparable across KQIs with different units.
    """
    spec = ModelSpec("DTR", target, cfg.feature_names, dict(cfg.hyperparams.get("DTR", {})))
    X, y = to_matrix(dataset, spec.feature_names, target)
    model = fit(spec, X, y)
    scores = tree_importance(model.model)
    if normalize:
        var = float(np.var(y))
        scores = scores / var if var > 0 else np.zeros_like(scores)
    # stable sort keeps feature order for equal scores
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    return [(spec.feature_names[i], float(scores[i])) for i in order]


def cmd_importance(args):
    cfg = _config(args)
    dataset = load_csv(args.data)
    ranked = importance_scores(dataset, args.target, cfg, args.normalize)
    rows = [(args.target, name, _fmt(score), rank) for rank, (name, score) in enumerate(ranked, 1)]
    _write_csv(args.out, ("kqi", "feature", "score", "rank"), rows)
    return EXIT_OK


def cmd_generalize(args):
    cfg = _config(args)
    dataset = load_csv(args.data)
    present = {s.features.file_size_bytes for s in dataset}
    missing = [s for s in (*cfg.a_sizes, *cfg.b_sizes) if s not in present]
    if missing:
        raise DomainError(f"campaign lacks file sizes required by the A/B split: {missing}")
    a = filter_by_file_size(dataset, cfg.a_sizes)
    b = filter_by_file_size(dataset, cfg.b_sizes)
    specs = default_specs(cfg.techniques, KQI_NAMES, cfg.hyperparams, cfg.feature_names)
    report = full_vs_partial(a, b, specs, args.seed)
    rows = []
    for (technique, kqi), arms in report.results.items():
        for arm in ("full", "partial"):
            rows.append((technique, kqi, arm, _fmt(arms[arm].r_squared), _fmt(arms[arm].rmse)))
    _write_csv(args.out, ("technique", "kqi", "arm", "r2", "rmse"), rows)
    _write_json(_json_sibling(args.out), report.to_dict())
    return EXIT_OK


def cmd_train(args):
    cfg = _config(args)
    dataset = load_csv(args.data)
    registry = train_phase(dataset, cfg.framework(args.seed))
    save_registry(registry, args.out)
    for kqi, entry in registry.entries.items():
        print(f"{kqi}: {entry.technique} R2={entry.cv_r2:.4f} {entry.status.value}")
    return EXIT_OK if registry.all_adequate else EXIT_RETRAIN


def cmd_predict(args):
    registry = load_registry(args.registry)
    rows = []
    for i, tokens in read_rows(args.data, FEATURE_NAMES):
        features = parse_features(tokens, row=i)
        result = predict_kqi(registry, features)
        kqis = [
            UNAVAILABLE if isinstance(result.get(k), Unavailable) or k not in result else _fmt(result[k])
            for k in KQI_NAMES
        ]
        rows.append((*tokens, *kqis))
    _write_csv(args.out, FEATURE_NAMES + KQI_NAMES, rows)
    return EXIT_OK


def cmd_trace(args):
    registry = load_registry(args.registry)
    if args.target not in registry.entries:
        raise DomainError(f"registry has no entry for {args.target}")
    entry = registry.entries[args.target]
    dataset = load_csv(args.data)
    records = prediction_trace(entry.model, dataset, entry.cv.mean.rmse)
    rows = [
        (r.index, _fmt(r.bandwidth_mhz), _fmt(r.measured), _fmt(r.predicted), _fmt(r.band_low), _fmt(r.band_high))
        for r in records
    ]
    _write_csv(args.out, ("index", "bandwidth_mhz", "measured", "predicted", "band_low", "band_high"), rows)
    if entry.status is Fitness.RETRAIN:
        print(f"warning: {args.target} model is gated Retrain", file=sys.stderr)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="kqipredict", description="Predict file-transfer KQIs from low-layer metrics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_text, data=True, seed=True, config=True):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if data:
            p.add_argument("--data", required=True, help="campaign CSV")
        if seed:
            p.add_argument("--seed", type=_seed, default=0)
        if config:
            p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", required=True, help="output path")
        return p

    p = command("simulate", cmd_simulate, "generate a synthetic measurement campaign", data=False)
    p.add_argument("--total", type=_positive_int, default=9000, help="number of experiments")
    p.add_argument("--workers", type=_positive_int, default=1)

    p = command("evaluate", cmd_evaluate, "cross-validated R2/RMSE of every technique and KQI")
    p.add_argument("--k", type=_k_value, default=None, help="folds (default from config, 5)")

    p = command("importance", cmd_importance, "decision-tree variable importance", seed=False)
    p.add_argument("--target", required=True, choices=KQI_NAMES)
    p.add_argument("--normalize", action="store_true", help="divide scores by the target variance")

    command("generalize", cmd_generalize, "full vs partial training-set comparison")
    command("train", cmd_train, "train and gate one model per KQI, write a registry")

    p = command("predict", cmd_predict, "predict KQIs for a feature CSV", seed=False, config=False)
    p.add_argument("--registry", required=True)

    p = command("trace", cmd_trace, "measured vs predicted with a +/- RMSE band", seed=False, config=False)
    p.add_argument("--registry", required=True)
    p.add_argument("--target", choices=KQI_NAMES, default="tftd_s")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (KqiError, OSError) as exc:
        print(f"kqipredict {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
