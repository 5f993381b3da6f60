"""Run configuration: a single flat JSON document with a closed field set.

Unknown fields are errors, not warnings; a silently ignored typo in a
parameter name would corrupt a scientific sweep. Every diagnostic carries
the offending field path so the CLI can point at it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ParameterError
from .model import ModelParams
from .regress import FeatureSpec

__all__ = ["RunConfig", "load_config", "config_from_dict", "config_echo"]

_PARAM_KEYS = {
    "T": ("T", float),
    "gamma_star": ("gamma_star", float),
    "rho": ("rho", float),
    "lambda": ("lam", float),
    "gamma_pen": ("gamma_pen", float),
    "sigma0": ("sigma0", float),
    "mu": ("mu", float),
    "v_bar": ("v_bar", float),
    "c_bar": ("c_bar", float),
    "c2_bar": ("c2_bar", float),
    "sigma_idio": ("sigma_idio", float),
    "n": ("n", int),
    "N": ("N", int),
    "p": ("p", int),
    "n_iter": ("n_iter", int),
    "seed": ("seed", int),
}

_FEATURE_KEYS = {
    "feature_kind": ("kind", str),
    "degree": ("degree", int),
    "ridge": ("ridge", float),
}

_RUN_KEYS = {
    "out_dir": str,
    "repetitions": int,
    "sweep_gamma_pen": list,
    "sweep_lambda": list,
    "sweep_rho": list,
    "antithetic": bool,
    "oracle_crosscheck": bool,
    "ensemble_dump": bool,
    "common_random_numbers": bool,
}

ALLOWED_KEYS = set(_PARAM_KEYS) | set(_FEATURE_KEYS) | set(_RUN_KEYS)


@dataclass(frozen=True)
class RunConfig:
    """Resolved experiment configuration: model, regression and harness settings."""

    params: ModelParams
    features: FeatureSpec
    out_dir: str = "out"
    repetitions: int = 10
    sweep_gamma_pen: tuple = ()
    sweep_lambda: tuple = ()
    sweep_rho: tuple = ()
    antithetic: bool = False
    oracle_crosscheck: bool = False
    ensemble_dump: bool = False
    common_random_numbers: bool = True

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError(f"config.repetitions: repetitions >= 1 required (got {self.repetitions})",
                              field="repetitions")
        for name in ("sweep_gamma_pen", "sweep_lambda", "sweep_rho"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"config.{name}: sweep list must be nonempty", field=name)
        if self.oracle_crosscheck and self.params.n > 2:
            raise ConfigError(
                f"config.oracle_crosscheck: requires n <= 2 (got n={self.params.n})",
                field="oracle_crosscheck")

    def sweep_points(self) -> list[tuple[float, float, float]]:
        """Cartesian product of the three sweep lists, in document order."""
        return [
            (g, l, r)
            for g in self.sweep_gamma_pen
            for l in self.sweep_lambda
            for r in self.sweep_rho
        ]


def _coerce(key: str, value, typ):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config.{key}: expected a number (got {value!r})", field=key)
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config.{key}: expected an integer (got {value!r})", field=key)
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config.{key}: expected true/false (got {value!r})", field=key)
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"config.{key}: expected a string (got {value!r})", field=key)
        return value
    if typ is list:
        if not isinstance(value, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            raise ConfigError(f"config.{key}: expected a list of numbers (got {value!r})", field=key)
        return tuple(float(x) for x in value)
    raise AssertionError(typ)


def config_from_dict(doc: dict) -> RunConfig:
    """Build and validate a RunConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top-level JSON value must be an object")
    unknown = sorted(set(doc) - ALLOWED_KEYS)
    if unknown:
        raise ConfigError(f"config.{unknown[0]}: unknown field", field=unknown[0])

    param_kwargs = {}
    for key, (attr, typ) in _PARAM_KEYS.items():
        if key in doc:
            param_kwargs[attr] = _coerce(key, doc[key], typ)
    feature_kwargs = {}
    for key, (attr, typ) in _FEATURE_KEYS.items():
        if key in doc:
            feature_kwargs[attr] = _coerce(key, doc[key], typ)
    try:
        params = ModelParams(**param_kwargs)
        features = FeatureSpec(**feature_kwargs)
    except ParameterError as err:
        raise ConfigError(f"config.{err}", field=None) from err

    run_kwargs = {}
    for key, typ in _RUN_KEYS.items():
        if key in doc:
            run_kwargs[key] = _coerce(key, doc[key], typ)
    run_kwargs.setdefault("sweep_gamma_pen", (params.gamma_pen,))
    run_kwargs.setdefault("sweep_lambda", (params.lam,))
    run_kwargs.setdefault("sweep_rho", (params.rho,))
    return RunConfig(params=params, features=features, **run_kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path}: invalid JSON ({err})") from err
    return config_from_dict(doc)


def config_echo(cfg: RunConfig) -> dict:
    """Round-trippable JSON echo of a resolved configuration."""
    p = cfg.params
    return {
        "T": p.T,
        "gamma_star": p.gamma_star,
        "rho": p.rho,
        "lambda": p.lam,
        "gamma_pen": p.gamma_pen,
        "sigma0": p.sigma0,
        "mu": p.mu,
        "v_bar": p.v_bar,
        "c_bar": p.c_bar,
        "c2_bar": p.c2_bar,
        "sigma_idio": p.sigma_idio,
        "n": p.n,
        "N": p.N,
        "p": p.p,
        "n_iter": p.n_iter,
        "seed": p.seed,
        "feature_kind": cfg.features.kind,
        "degree": cfg.features.degree,
        "ridge": cfg.features.ridge,
        "out_dir": cfg.out_dir,
        "repetitions": cfg.repetitions,
        "sweep_gamma_pen": list(cfg.sweep_gamma_pen),
        "sweep_lambda": list(cfg.sweep_lambda),
        "sweep_rho": list(cfg.sweep_rho),
        "antithetic": cfg.antithetic,
        "oracle_crosscheck": cfg.oracle_crosscheck,
        "ensemble_dump": cfg.ensemble_dump,
        "common_random_numbers": cfg.common_random_numbers,
    }
