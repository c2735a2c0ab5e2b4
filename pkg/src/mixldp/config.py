"""
JSON problem configurations.

A configuration is a JSON object::

    {
      "risk_measure": {"kind": "quantile", "alpha": 0.95},
      "components": [{"kind": "exponential", "rate": 1.0},
                     {"kind": "exponential", "rate": 2.0}],
      "weights": [0.3, 0.7],
      "options": {"points": 25, "delta": 0.25}
    }

Law schemas::

    {"kind": "exponential", "rate": 1.0}
    {"kind": "gaussian", "mean": 0.0, "std": 1.0}
    {"kind": "point_mass", "loc": 0.0}
    {"kind": "discrete", "atoms": [0.0, 1.0], "probs": [0.5, 0.5]}

Risk measure schemas::

    {"kind": "mean"}
    {"kind": "quantile", "alpha": 0.95}
    {"kind": "expected_shortfall", "alpha": 0.95}
    {"kind": "entropic", "theta": 1.0}
    {"kind": "shortfall", "x0": 1.0, "loss": <loss>}

Loss schemas::

    {"kind": "exponential", "theta": 1.0}
    {"kind": "piecewise_linear", "knots": [0.0], "slopes": [0.0, 1.0],
     "value_at_first_knot": 0.0}

``options`` is free-form; the command line reads the keys ``r_min``,
``r_max``, ``points``, ``delta``, ``m``, ``n_grid``, ``replicas``, ``seed``
and ``exact_binomial`` from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .models import Exponential, FiniteDiscrete, Gaussian, Law, PointMass, simplex
from .riskmeasures import (
    Entropic,
    ExpectedShortfall,
    ExponentialLoss,
    LossFunction,
    Mean,
    PiecewiseLinearLoss,
    Quantile,
    RiskMeasure,
    Shortfall,
)


class ConfigError(ValueError):
    """A configuration could not be parsed."""


def _get(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    if key not in d:
        raise ConfigError(f"{where} is missing '{key}'")
    return d[key]


def _num(d: dict, key: str, where: str) -> float:
    v = _get(d, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    return float(v)


def parse_law(d: dict) -> Law:
    kind = _get(d, "kind", "law")
    try:
        if kind == "exponential":
            return Exponential(_num(d, "rate", kind))
        if kind == "gaussian":
            return Gaussian(_num(d, "mean", kind), _num(d, "std", kind))
        if kind == "point_mass":
            return PointMass(loc=_num(d, "loc", kind))
        if kind == "discrete":
            return FiniteDiscrete(tuple(_get(d, "atoms", kind)), tuple(_get(d, "probs", kind)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} law: {exc}") from exc
    raise ConfigError(f"unknown law kind {kind!r}")


def parse_loss(d: dict) -> LossFunction:
    kind = _get(d, "kind", "loss")
    try:
        if kind == "exponential":
            return ExponentialLoss(_num(d, "theta", "loss"))
        if kind == "piecewise_linear":
            return PiecewiseLinearLoss(
                tuple(_get(d, "knots", "loss")),
                tuple(_get(d, "slopes", "loss")),
                float(d.get("value_at_first_knot", 0.0)),
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid loss: {exc}") from exc
    raise ConfigError(f"unknown loss kind {kind!r}")


def parse_risk_measure(d: dict) -> RiskMeasure:
    kind = _get(d, "kind", "risk_measure")
    try:
        if kind == "mean":
            return Mean()
        if kind == "quantile":
            return Quantile(_num(d, "alpha", kind))
        if kind in ("expected_shortfall", "es"):
            return ExpectedShortfall(_num(d, "alpha", kind))
        if kind == "entropic":
            return Entropic(_num(d, "theta", kind))
        if kind == "shortfall":
            return Shortfall(parse_loss(_get(d, "loss", kind)), _num(d, "x0", kind))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} risk measure: {exc}") from exc
    raise ConfigError(f"unknown risk measure kind {kind!r}")


@dataclass
class ProblemConfig:
    risk_measure: RiskMeasure
    components: tuple[Law, ...]
    weights: tuple[float, ...]
    options: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "risk_measure": self.risk_measure.to_dict(),
            "components": [law.to_dict() for law in self.components],
            "weights": list(self.weights),
            "options": dict(self.options),
        }


def parse_config(d: dict) -> ProblemConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    rho = parse_risk_measure(_get(d, "risk_measure", "config"))
    comps = _get(d, "components", "config")
    if not isinstance(comps, list) or not comps:
        raise ConfigError("config.components must be a non-empty list")
    laws = tuple(parse_law(c) for c in comps)
    weights = _get(d, "weights", "config")
    if not isinstance(weights, list) or len(weights) != len(laws):
        raise ConfigError("config.weights must be a list with one entry per component")
    if any(isinstance(w, bool) or not isinstance(w, (int, float)) for w in weights):
        raise ConfigError("config.weights must be numbers")
    try:
        simplex(weights)
    except ValueError as exc:
        raise ConfigError(f"config.weights: {exc}") from exc
    options = d.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("config.options must be a JSON object")
    return ProblemConfig(rho, laws, tuple(float(w) for w in weights), dict(options))


def load_config(path: str | Path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(data)
