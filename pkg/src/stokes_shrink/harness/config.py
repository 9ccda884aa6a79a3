"""Experiment configuration from YAML/JSON files with command-line overrides."""
from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import yaml

from ..errors import ConfigInvalid, StokesShrinkError
from ..geometry import GeometryConfig, build_geometry

DEFAULTS = {
    "seed": 0,
    "geometry": {"R_e": 1.0, "R_i": 0.5, "eps": math.exp(-9.0)},
    "solver": {"N_r": 48, "n_max": 12, "quad_order": None, "eig_tol": 1e-10, "k_max": 12},
    "sweep": {"eps_list": [1e-2, 1e-3, 1e-4, 1e-6], "k_max": 8, "N_r": 64},
    "semigroup": {"eps_list": [1e-2, 1e-3, 1e-4], "T": 1.0, "n_max": 4, "m_times": 64,
                  "thetas": ["eig1", "eig5", "random"]},
    "ns": {"nu": 0.05, "T": 1.0, "N": 24, "init": "mix", "seed": 0, "k": 1,
           "domain": "disk", "eps_list": [1e-2, 1e-3, 1e-4], "n_out": 101},
    "harmonic": {"count": 100, "N_modes": 64, "far_delta": 12.0,
                 "split_eps": [1e-2, 1e-3, 1e-4, 1e-6]},
    "output": {"directory": "results", "formats": ["csv", "json"]},
}

# (block, key) -> (type check, predicate, message)
_NUM = (int, float)


def _is_num(v):
    return isinstance(v, _NUM) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _eps_list(v):
    return (isinstance(v, list) and len(v) >= 2 and all(_is_num(x) and 0 < x < 1 for x in v)
            and all(b < a for a, b in zip(v, v[1:])))


_RULES = {
    ("seed",): (lambda v: _is_int(v) and v >= 0, "non-negative integer"),
    ("geometry", "R_e"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("geometry", "R_i"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("geometry", "eps"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("solver", "N_r"): (lambda v: _is_int(v) and v >= 4, "integer >= 4"),
    ("solver", "n_max"): (lambda v: _is_int(v) and v >= 0, "integer >= 0"),
    ("solver", "quad_order"): (lambda v: v is None or (_is_int(v) and v >= 8), "null or integer >= 8"),
    ("solver", "eig_tol"): (lambda v: _is_num(v) and 0 < v < 1, "number in (0, 1)"),
    ("solver", "k_max"): (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    ("sweep", "eps_list"): (_eps_list, "strictly descending list of radii in (0, 1)"),
    ("sweep", "k_max"): (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    ("sweep", "N_r"): (lambda v: _is_int(v) and v >= 4, "integer >= 4"),
    ("semigroup", "eps_list"): (_eps_list, "strictly descending list of radii in (0, 1)"),
    ("semigroup", "T"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("semigroup", "n_max"): (lambda v: _is_int(v) and v >= 0, "integer >= 0"),
    ("semigroup", "m_times"): (lambda v: _is_int(v) and v >= 2, "integer >= 2"),
    ("semigroup", "thetas"): (lambda v: isinstance(v, list) and v and all(
        isinstance(x, str) and (x == "random" or (x.startswith("eig") and x[3:].isdigit() and int(x[3:]) >= 1))
        for x in v), "list of 'eigK' or 'random'"),
    ("ns", "nu"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("ns", "T"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("ns", "N"): (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    ("ns", "init"): (lambda v: v in ("mix", "eig"), "'mix' or 'eig'"),
    ("ns", "seed"): (lambda v: _is_int(v) and v >= 0, "non-negative integer"),
    ("ns", "k"): (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    ("ns", "domain"): (lambda v: v in ("disk", "annulus"), "'disk' or 'annulus'"),
    ("ns", "eps_list"): (_eps_list, "strictly descending list of radii in (0, 1)"),
    ("ns", "n_out"): (lambda v: _is_int(v) and v >= 2, "integer >= 2"),
    ("harmonic", "count"): (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    ("harmonic", "N_modes"): (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    ("harmonic", "far_delta"): (lambda v: _is_num(v) and v > 0, "positive number"),
    ("harmonic", "split_eps"): (_eps_list, "strictly descending list of radii in (0, 1)"),
    ("output", "directory"): (lambda v: isinstance(v, str) and v != "", "non-empty string"),
    ("output", "formats"): (lambda v: isinstance(v, list) and set(v) <= {"csv", "json"} and v,
                            "non-empty subset of ['csv', 'json']"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``data`` is the canonical nested dictionary."""

    data: dict
    geometry: GeometryConfig

    def block(self, name: str) -> dict:
        return self.data[name]

    def canonical(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))


def _merge(base: dict, extra: dict, path=()) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        p = path + (k,)
        if k not in base:
            raise ConfigInvalid(".".join(p), "unknown key")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigInvalid(".".join(p), "expected a mapping")
            out[k] = _merge(base[k], v, p)
        else:
            out[k] = v
    return out


# YAML 1.1 reads "1e-3" (no dot in the mantissa) as a string
_EXP_FLOAT = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)[eE][-+]?\d+")


def _coerce(v):
    if isinstance(v, str) and _EXP_FLOAT.fullmatch(v):
        return float(v)
    if isinstance(v, list):
        return [_coerce(x) for x in v]
    if isinstance(v, dict):
        return {k: _coerce(x) for k, x in v.items()}
    return v


def parse_override(text: str):
    """'--block.key=value' (leading dashes optional) -> (path tuple, parsed value)."""
    body = text.lstrip("-")
    if "=" not in body:
        raise ConfigInvalid(body, "override must look like --key=value")
    key, raw = body.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(key, f"cannot parse value {raw!r}: {exc}") from None
    return tuple(key.split(".")), _coerce(value)


def _apply_override(data: dict, path, value):
    node = data
    for i, k in enumerate(path[:-1]):
        if k not in node or not isinstance(node[k], dict):
            raise ConfigInvalid(".".join(path[:i + 1]), "unknown block")
        node = node[k]
    if path[-1] not in node:
        raise ConfigInvalid(".".join(path), "unknown key")
    node[path[-1]] = value


def _normalise(v):
    # YAML gives ints for values like 1; store numbers that must be floats as floats
    return float(v) if _is_int(v) else v


_FLOAT_KEYS = {("geometry", "R_e"), ("geometry", "R_i"), ("geometry", "eps"), ("solver", "eig_tol"),
               ("semigroup", "T"), ("ns", "nu"), ("ns", "T"), ("harmonic", "far_delta")}


def validate(data: dict) -> ExperimentConfig:
    for path, (ok, what) in _RULES.items():
        node = data
        for i, k in enumerate(path):
            if not isinstance(node, dict) or k not in node:
                raise ConfigInvalid(".".join(path[:i + 1]), "missing")
            node = node[k]
        if not ok(node):
            raise ConfigInvalid(".".join(path), f"expected {what}, got {node!r}")
    for path in _FLOAT_KEYS:
        data[path[0]][path[1]] = _normalise(data[path[0]][path[1]])
    for blk in ("sweep", "semigroup", "ns", "harmonic"):
        key = "split_eps" if blk == "harmonic" else "eps_list"
        data[blk][key] = [float(x) for x in data[blk][key]]
    g = data["geometry"]
    try:
        geo = build_geometry(g["R_e"], g["R_i"], g["eps"])
    except StokesShrinkError as exc:
        raise ConfigInvalid("geometry", str(exc)) from None
    for blk in ("sweep", "semigroup", "ns"):
        if max(data[blk]["eps_list"]) >= g["R_i"] / g["R_e"]:
            raise ConfigInvalid(f"{blk}.eps_list", "hole radii must stay below R_i / R_e")
    if data["harmonic"]["far_delta"] <= 4 * geo.delta0:
        raise ConfigInvalid("harmonic.far_delta", f"must exceed 4 delta0 = {4 * geo.delta0:.6g}")
    return ExperimentConfig(data, geo)


def load_config(path=None, overrides=()) -> ExperimentConfig:
    """Read a YAML or JSON file (missing blocks fall back to defaults) and apply overrides.

    Only the geometry block must be given explicitly when a file is used.
    """
    data = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        try:
            raw = yaml.safe_load(p.read_text())
        except OSError as exc:
            raise ConfigInvalid(str(p), f"cannot read: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigInvalid(str(p), f"malformed: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigInvalid("<root>", "expected a mapping")
        if "geometry" not in raw or not isinstance(raw["geometry"], dict):
            raise ConfigInvalid("geometry", "missing")
        for k in ("R_e", "R_i", "eps"):
            if k not in raw["geometry"]:
                raise ConfigInvalid(f"geometry.{k}", "missing")
        data = _merge(data, _coerce(raw))
    for item in overrides:
        path_, value = parse_override(item) if isinstance(item, str) else item
        _apply_override(data, path_, value)
    return validate(data)
DEFAULT_CONFIG_PATH = Path(__file__).with_name("default_config.yaml")
