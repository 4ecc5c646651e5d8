"""JSON configuration document for the command-line tool.

Schema (every section and key optional)::

    {
      "generator":  {<GeneratorParams field>: value, ..., "noise": {<NoiseParams field>: value}},
      "grid":       {"file_sizes_bytes": [int], "bandwidths_mhz": [num], "load_levels": [str]},
      "framework":  {"techniques": [str], "k": int, "threshold": num, "feature_names": [str]},
      "hyperparams": {<technique>: {<name>: value}},
      "split":      {"a_sizes": [int], "b_sizes": [int]}
    }

``prb_per_bw`` and ``load_fraction`` are objects keyed by bandwidth (as a
string, e.g. ``"10"``) and load token respectively. Unknown keys and values of
the wrong type raise :class:`~kqipredict.errors.ConfigError`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dataset import A_SIZES, B_SIZES, FEATURE_NAMES
from .errors import ConfigError, KqiError
from .regression import DEFAULT_HYPERPARAMS, TECHNIQUES
from .simulator import CampaignGrid, GeneratorParams, NoiseParams

SECTIONS = ("generator", "grid", "framework", "hyperparams", "split")


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _expect(cond, where, what):
    if not cond:
        raise ConfigError(f"{where}: expected {what}")


def _check_keys(obj, allowed, where):
    _expect(isinstance(obj, dict), where, "an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _num_list(v, where, check=_is_num, what="a list of numbers"):
    _expect(isinstance(v, list) and v and all(check(x) for x in v), where, f"a non-empty {what}")
    return tuple(v)


_GENERATOR_SCALARS = {
    f.name for f in fields(GeneratorParams) if f.name not in ("prb_per_bw", "load_fraction", "rsrp_range_dbm", "noise")
}


def _generator(doc):
    names = {f.name for f in fields(GeneratorParams)}
    _check_keys(doc, names, "generator")
    kwargs = {}
    for key, value in doc.items():
        where = f"generator.{key}"
        if key in _GENERATOR_SCALARS:
            _expect(_is_num(value), where, "a number")
            kwargs[key] = float(value)
        elif key == "rsrp_range_dbm":
            _expect(isinstance(value, list) and len(value) == 2 and all(map(_is_num, value)), where, "[low, high]")
            kwargs[key] = tuple(float(v) for v in value)
        elif key == "prb_per_bw":
            _expect(isinstance(value, dict), where, "an object")
            out = {}
            for bw, prb in value.items():
                try:
                    bw_f = float(bw)
                except ValueError:
                    raise ConfigError(f"{where}: key {bw!r} is not a bandwidth") from None
                _expect(_is_int(prb), f"{where}.{bw}", "an integer")
                out[bw_f] = prb
            kwargs[key] = out
        elif key == "load_fraction":
            _expect(isinstance(value, dict) and all(_is_num(v) for v in value.values()), where, "an object of numbers")
            kwargs[key] = dict(value)
        else:  # noise
            noise_names = {f.name for f in fields(NoiseParams)}
            _check_keys(value, noise_names, where)
            for k, v in value.items():
                _expect(_is_num(v), f"{where}.{k}", "a number")
            kwargs[key] = NoiseParams(**{k: float(v) for k, v in value.items()})
    return GeneratorParams(**kwargs)


def _grid(doc):
    _check_keys(doc, ("file_sizes_bytes", "bandwidths_mhz", "load_levels"), "grid")
    kwargs = {}
    if "file_sizes_bytes" in doc:
        kwargs["file_sizes_bytes"] = _num_list(doc["file_sizes_bytes"], "grid.file_sizes_bytes", _is_int, "list of integers")
    if "bandwidths_mhz" in doc:
        kwargs["bandwidths_mhz"] = _num_list(doc["bandwidths_mhz"], "grid.bandwidths_mhz")
    if "load_levels" in doc:
        kwargs["load_levels"] = _num_list(
            doc["load_levels"], "grid.load_levels", lambda x: isinstance(x, str), "list of load tokens"
        )
    return CampaignGrid(**kwargs)


@dataclass(frozen=True)
class CliConfig:
    generator: GeneratorParams = field(default_factory=GeneratorParams)
    grid: CampaignGrid = field(default_factory=CampaignGrid)
    techniques: tuple = TECHNIQUES
    k: int = 5
    threshold: float = 0.8
    feature_names: tuple = FEATURE_NAMES
    hyperparams: dict = field(default_factory=dict)
    a_sizes: tuple = A_SIZES
    b_sizes: tuple = B_SIZES

    def framework(self, seed):
        from .framework import FrameworkConfig

        return FrameworkConfig(
            techniques=self.techniques,
            hyperparams=self.hyperparams,
            k=self.k,
            threshold=self.threshold,
            seed=seed,
            feature_names=self.feature_names,
        )


def parse_config(doc) -> CliConfig:
    _check_keys(doc, SECTIONS, "config")
    kwargs = {}
    try:
        if "generator" in doc:
            kwargs["generator"] = _generator(doc["generator"])
        if "grid" in doc:
            kwargs["grid"] = _grid(doc["grid"])
    except ConfigError:
        raise
    except (KqiError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    fw = doc.get("framework", {})
    _check_keys(fw, ("techniques", "k", "threshold", "feature_names"), "framework")
    if "techniques" in fw:
        kwargs["techniques"] = _num_list(
            fw["techniques"], "framework.techniques", lambda t: t in TECHNIQUES, f"list drawn from {list(TECHNIQUES)}"
        )
    if "k" in fw:
        _expect(_is_int(fw["k"]) and fw["k"] >= 2, "framework.k", "an integer >= 2")
        kwargs["k"] = fw["k"]
    if "threshold" in fw:
        _expect(_is_num(fw["threshold"]) and 0 <= fw["threshold"] <= 1, "framework.threshold", "a number in [0, 1]")
        kwargs["threshold"] = float(fw["threshold"])
    if "feature_names" in fw:
        kwargs["feature_names"] = _num_list(
            fw["feature_names"], "framework.feature_names", lambda f: f in FEATURE_NAMES, "list of feature names"
        )

    hp = doc.get("hyperparams", {})
    _check_keys(hp, TECHNIQUES, "hyperparams")
    parsed = {}
    for technique, values in hp.items():
        where = f"hyperparams.{technique}"
        _check_keys(values, DEFAULT_HYPERPARAMS[technique], where)
        for name, v in values.items():
            default = DEFAULT_HYPERPARAMS[technique][name]
            if default is None or _is_int(default):
                # integer-valued; None (mtry) means "use the default rule"
                _expect(v is None or _is_int(v), f"{where}.{name}", "an integer or null")
            else:
                _expect(_is_num(v), f"{where}.{name}", "a number")
        parsed[technique] = dict(values)
    kwargs["hyperparams"] = parsed

    split = doc.get("split", {})
    _check_keys(split, ("a_sizes", "b_sizes"), "split")
    for key in ("a_sizes", "b_sizes"):
        if key in split:
            kwargs[key] = _num_list(split[key], f"split.{key}", _is_int, "list of integers")
    return CliConfig(**kwargs)


def load_config(path) -> CliConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)
