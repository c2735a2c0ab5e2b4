"""
Risk measures on laws and mixtures, and their weight-linear constraint forms.

A risk measure ``rho`` fits the rate-function machinery when the constraint
``rho(sum_j p_j mu_j) = r`` can be rewritten as ``sum_j p_j psi(mu_j, r) = 0``
with every ``psi(mu_j, .)`` strictly decreasing and vanishing at a unique
root. The forms implemented here are

==========================  =========================================
risk measure                ``psi(mu, r)``
==========================  =========================================
Mean                        ``mean(mu) - r``
ExpectedShortfall(alpha)    ``ES_alpha(mu) - r`` (common quantile only)
Quantile(alpha)             ``alpha - F_mu(r)``
Entropic(theta)             ``E[exp(theta X)] - exp(theta r)``
Shortfall(loss, x0)         ``E[loss(X - r)] - x0``
==========================  =========================================

All built-in forms are decreasing in ``r`` already, so no sign flip is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import (
    ConditionUnsupported,
    DivergentMoment,
    NonConvergence,
    NonDifferentiable,
    UnsupportedCombination,
    UnsupportedLaw,
)
from .models import (
    Law,
    Mixture,
    _component_matrix,
    mixture_quantile_many,
)

COMMON_QUANTILE_TOL = 1e-9


# ---------------------------------------------------------------------------
# Loss functions
# ---------------------------------------------------------------------------

class LossFunction:
    """Convex, nondecreasing, non-constant loss ``l: R -> R``."""

    kind: str = ""

    def __call__(self, x: ArrayLike) -> NDArray:
        raise NotImplementedError

    def derivative(self, x: ArrayLike) -> NDArray:
        raise NotImplementedError

    @property
    def infimum(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialLoss(LossFunction):
    """``l(x) = exp(theta * x)``."""

    theta: float
    kind = "exponential"

    def __post_init__(self):
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta!r}")

    def __call__(self, x):
        return np.exp(self.theta * np.asarray(x, dtype=float))

    def derivative(self, x):
        return self.theta * np.exp(self.theta * np.asarray(x, dtype=float))

    @property
    def infimum(self) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "theta": self.theta}


@dataclass(frozen=True)
class PiecewiseLinearLoss(LossFunction):
    """Convex piecewise-linear loss.

    ``slopes[0]`` applies left of ``knots[0]``, ``slopes[i]`` between
    ``knots[i-1]`` and ``knots[i]``, and ``slopes[-1]`` right of the last knot.
    ``value_at_first_knot`` anchors the level.
    """

    knots: tuple[float, ...]
    slopes: tuple[float, ...]
    value_at_first_knot: float = 0.0
    kind = "piecewise_linear"

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        slopes = tuple(float(s) for s in self.slopes)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)
        if len(knots) < 1 or len(slopes) != len(knots) + 1:
            raise ValueError("need at least one knot and len(slopes) == len(knots) + 1")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("knots must be strictly increasing")
        if slopes[0] < 0.0 or any(b < a for a, b in zip(slopes, slopes[1:])):
            raise ValueError("slopes must be nonnegative and nondecreasing (convex, increasing)")
        if slopes[-1] <= 0.0:
            raise ValueError("loss must not be constant")

    def _values_at_knots(self) -> NDArray:
        k = np.array(self.knots)
        inc = np.diff(k) * np.array(self.slopes[1:-1])
        return self.value_at_first_knot + np.concatenate([[0.0], np.cumsum(inc)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.array(self.knots)
        s = np.array(self.slopes)
        vk = self._values_at_knots()
        seg = np.searchsorted(k, x, side="right")  # slope index
        anchor = np.clip(seg - 1, 0, k.size - 1)
        return vk[anchor] + s[seg] * (x - k[anchor])

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        k = np.array(self.knots)
        if np.any(np.isclose(x[..., None], k, rtol=0.0, atol=1e-12)):
            raise NonDifferentiable("loss evaluated at a knot")
        return np.array(self.slopes)[np.searchsorted(k, x, side="right")]

    @property
    def infimum(self) -> float:
        if self.slopes[0] > 0.0:
            return -math.inf
        return self.value_at_first_knot

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "knots": list(self.knots),
            "slopes": list(self.slopes),
            "value_at_first_knot": self.value_at_first_knot,
        }


# ---------------------------------------------------------------------------
# Risk measure specifications
# ---------------------------------------------------------------------------

class RiskMeasure:
    kind: str = ""


@dataclass(frozen=True)
class Mean(RiskMeasure):
    kind = "mean"

    def to_dict(self) -> dict:
        return {"kind": self.kind}


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")


@dataclass(frozen=True)
class Quantile(RiskMeasure):
    alpha: float
    kind = "quantile"

    def __post_init__(self):
        _check_level(self.alpha)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class ExpectedShortfall(RiskMeasure):
    alpha: float
    kind = "expected_shortfall"

    def __post_init__(self):
        _check_level(self.alpha)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class Entropic(RiskMeasure):
    theta: float
    kind = "entropic"

    def __post_init__(self):
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "theta": self.theta}


@dataclass(frozen=True)
class Shortfall(RiskMeasure):
    """Shortfall risk: the ``m`` solving ``E[loss(X - m)] = x0``."""

    loss: LossFunction
    x0: float
    kind = "shortfall"

    def __post_init__(self):
        if not self.x0 > self.loss.infimum:
            raise ValueError("x0 must be an interior point of the range of the loss")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "loss": self.loss.to_dict(), "x0": self.x0}


# ---------------------------------------------------------------------------
# Condition classification
# ---------------------------------------------------------------------------

SUPPORTED_LINEAR = "SupportedLinear"
SUPPORTED_QUANTILE = "SupportedQuantile"
SUPPORTED_ENTROPIC = "SupportedEntropic"
SUPPORTED_SHORTFALL = "SupportedShortfall"
UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class ConditionCheck:
    kind: str
    reason: str = ""

    @property
    def supported(self) -> bool:
        return self.kind != UNSUPPORTED


def _atomic(components: Sequence[Law]) -> bool:
    return all(not law.is_continuous for law in components)


def check_condition(rho: RiskMeasure, components: Sequence[Law]) -> ConditionCheck:
    """Classify which weight-linear constraint form applies to ``(rho, components)``.

    Never raises for a well-formed ``rho``; an unsupported pair is reported as
    ``ConditionCheck(UNSUPPORTED, reason)``.
    """
    if isinstance(rho, Mean):
        return ConditionCheck(SUPPORTED_LINEAR)
    if isinstance(rho, Quantile):
        if all(law.is_continuous for law in components):
            return ConditionCheck(SUPPORTED_QUANTILE)
        return ConditionCheck(
            UNSUPPORTED, "quantile requires continuous strictly increasing component CDFs"
        )
    if isinstance(rho, ExpectedShortfall):
        if not all(law.is_continuous for law in components):
            return ConditionCheck(UNSUPPORTED, "ES requires continuous components")
        qs = np.array([law.quantile(rho.alpha) for law in components])
        if qs.max() - qs.min() <= COMMON_QUANTILE_TOL:
            return ConditionCheck(SUPPORTED_LINEAR)
        return ConditionCheck(UNSUPPORTED, "ES requires common α-quantile")
    if isinstance(rho, Entropic):
        try:
            for law in components:
                law.log_exp_moment(rho.theta)
        except DivergentMoment as exc:
            return ConditionCheck(UNSUPPORTED, str(exc))
        return ConditionCheck(SUPPORTED_ENTROPIC)
    if isinstance(rho, Shortfall):
        if isinstance(rho.loss, ExponentialLoss):
            try:
                for law in components:
                    law.log_exp_moment(rho.loss.theta)
            except DivergentMoment as exc:
                return ConditionCheck(UNSUPPORTED, str(exc))
            return ConditionCheck(SUPPORTED_SHORTFALL)
        if _atomic(components):
            return ConditionCheck(SUPPORTED_SHORTFALL)
        return ConditionCheck(
            UNSUPPORTED, "piecewise-linear shortfall requires atomic components"
        )
    return ConditionCheck(UNSUPPORTED, f"unknown risk measure {rho!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _pooled_atoms(components: Sequence[Law], weights: NDArray) -> tuple[NDArray, NDArray]:
    locs, masses = [], []
    for law, w in zip(components, weights):
        x, q = law.atoms()
        locs.append(x)
        masses.append(w * q)
    return np.concatenate(locs), np.concatenate(masses)


def _solve_decreasing(g, start_lo: float, start_hi: float, what: str) -> float:
    """Root of a decreasing scalar function, expanding the bracket geometrically."""
    lo, hi = start_lo, start_hi
    step = max(1.0, hi - lo)
    for _ in range(200):
        if g(lo) > 0.0:
            break
        lo -= step
        step *= 2.0
    else:
        raise NonConvergence(f"could not bracket {what} from below")
    step = max(1.0, hi - lo)
    for _ in range(200):
        if g(hi) < 0.0:
            break
        hi += step
        step *= 2.0
    else:
        raise NonConvergence(f"could not bracket {what} from above")
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500))


def _shortfall_atomic(loss: LossFunction, x0: float, locs: NDArray, masses: NDArray) -> float:
    keep = masses > 0
    locs, masses = locs[keep], masses[keep]

    def g(m):
        return float(masses @ loss(locs - m)) - x0

    return _solve_decreasing(g, float(locs.min()) - 1.0, float(locs.max()) + 1.0, "shortfall level")


def evaluate_many(rho: RiskMeasure, components: Sequence[Law], weights: ArrayLike) -> NDArray:
    """Evaluate ``rho(sum_j W[n, j] mu_j)`` for every row ``n`` of ``weights``."""
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    if W.shape[1] != len(components):
        raise ValueError(f"{len(components)} components but weights have {W.shape[1]} columns")
    try:
        if isinstance(rho, Mean):
            return W @ np.array([law.mean() for law in components])
        if isinstance(rho, Quantile):
            return mixture_quantile_many(components, W, rho.alpha)
        if isinstance(rho, ExpectedShortfall):
            q = mixture_quantile_many(components, W, rho.alpha)
            pe = np.einsum("ns,ns->n", _component_matrix(components, "partial_expectation", q), W)
            return pe / (1.0 - rho.alpha)
        if isinstance(rho, Entropic):
            logm = np.array([law.log_exp_moment(rho.theta) for law in components])
            return logsumexp(np.broadcast_to(logm, W.shape), b=W, axis=1) / rho.theta
        if isinstance(rho, Shortfall):
            if isinstance(rho.loss, ExponentialLoss):
                th = rho.loss.theta
                logm = np.array([law.log_exp_moment(th) for law in components])
                lse = logsumexp(np.broadcast_to(logm, W.shape), b=W, axis=1)
                return (lse - math.log(rho.x0)) / th
            if not _atomic(components):
                raise UnsupportedCombination(
                    "piecewise-linear shortfall is only evaluated on atomic components"
                )
            return np.array([
                _shortfall_atomic(rho.loss, rho.x0, *_pooled_atoms(components, w)) for w in W
            ])
    except (UnsupportedLaw, DivergentMoment) as exc:
        raise UnsupportedCombination(str(exc)) from exc
    raise UnsupportedCombination(f"no evaluation path for {rho!r}")


def evaluate(rho: RiskMeasure, mix: Mixture) -> float:
    """Risk of a mixture law."""
    return float(evaluate_many(rho, mix.components, mix.weights[None, :])[0])


def law_risk(rho: RiskMeasure, law: Law) -> float:
    """Risk of a single law."""
    return float(evaluate_many(rho, (law,), np.ones((1, 1)))[0])


# ---------------------------------------------------------------------------
# Constraint functions
# ---------------------------------------------------------------------------

def _scalar(a):
    return a if np.ndim(a) else float(a)


def psi(rho: RiskMeasure, law: Law, r: ArrayLike):
    """Decreasing constraint function ``psi(law, r)`` for ``rho``.

    For :class:`ExpectedShortfall` this is the linear form ``ES(law) - r``,
    which is only meaningful when all mixture components share the
    ``alpha``-quantile (see :func:`check_condition`).
    """
    r = np.asarray(r, dtype=float)
    try:
        if isinstance(rho, (Mean, ExpectedShortfall)):
            return _scalar(law_risk(rho, law) - r)
        if isinstance(rho, Quantile):
            if not law.is_continuous:
                raise ConditionUnsupported(f"quantile form needs a continuous law, got {law.kind}")
            return _scalar(rho.alpha - np.asarray(law.cdf(r)))
        if isinstance(rho, Entropic):
            return _scalar(law.exp_moment(rho.theta) - np.exp(rho.theta * r))
        if isinstance(rho, Shortfall):
            if isinstance(rho.loss, ExponentialLoss):
                th = rho.loss.theta
                return _scalar(np.exp(law.log_exp_moment(th) - th * r) - rho.x0)
            locs, probs = law.atoms()
            vals = rho.loss(locs[None, :] - r.reshape(-1, 1)) @ probs - rho.x0
            return _scalar(vals.reshape(r.shape))
    except (UnsupportedLaw, DivergentMoment, UnsupportedCombination) as exc:
        raise ConditionUnsupported(str(exc)) from exc
    raise ConditionUnsupported(f"no constraint form for {rho!r}")


def psi_prime(rho: RiskMeasure, law: Law, r: ArrayLike):
    """Derivative of :func:`psi` in ``r``; strictly negative where defined."""
    r = np.asarray(r, dtype=float)
    if isinstance(rho, (Mean, ExpectedShortfall)):
        return _scalar(-np.ones_like(r))
    if isinstance(rho, Quantile):
        if not law.is_continuous:
            raise NonDifferentiable(f"{law.kind} law has atoms; quantile form is not differentiable")
        return _scalar(-np.asarray(law.pdf(r)))
    if isinstance(rho, Entropic):
        return _scalar(-rho.theta * np.exp(rho.theta * r))
    if isinstance(rho, Shortfall):
        if isinstance(rho.loss, ExponentialLoss):
            th = rho.loss.theta
            return _scalar(-th * np.exp(law.log_exp_moment(th) - th * r))
        try:
            locs, probs = law.atoms()
        except UnsupportedLaw as exc:
            raise NonDifferentiable(str(exc)) from exc
        vals = -(rho.loss.derivative(locs[None, :] - r.reshape(-1, 1)) @ probs)
        return _scalar(vals.reshape(r.shape))
    raise ConditionUnsupported(f"no constraint form for {rho!r}")


def component_root(rho: RiskMeasure, law: Law) -> float:
    """The unique ``r`` with ``psi(rho, law, r) == 0``."""
    if isinstance(rho, Quantile):
        if not law.is_continuous:
            raise ConditionUnsupported(f"quantile form needs a continuous law, got {law.kind}")
        return float(law.quantile(rho.alpha))
    if isinstance(rho, (Mean, ExpectedShortfall, Entropic)):
        try:
            return law_risk(rho, law)
        except UnsupportedCombination as exc:
            raise ConditionUnsupported(str(exc)) from exc
    if isinstance(rho, Shortfall):
        if isinstance(rho.loss, ExponentialLoss):
            try:
                return law_risk(rho, law)
            except UnsupportedCombination as exc:
                raise ConditionUnsupported(str(exc)) from exc
        try:
            locs, _ = law.atoms()
        except UnsupportedLaw as exc:
            raise ConditionUnsupported(str(exc)) from exc
        return _solve_decreasing(
            lambda r: float(psi(rho, law, r)), float(locs.min()) - 1.0, float(locs.max()) + 1.0,
            "component root",
        )
    raise ConditionUnsupported(f"no constraint form for {rho!r}")


@dataclass(frozen=True, eq=False)
class PsiProfile:
    """Constraint values ``psi(mu_j, r)`` at one level ``r`` plus the component roots."""

    r: float
    values: NDArray
    roots: NDArray


def psi_profile(rho: RiskMeasure, components: Sequence[Law], r: float) -> PsiProfile:
    values = np.array([psi(rho, law, r) for law in components], dtype=float)
    roots = np.array([component_root(rho, law) for law in components], dtype=float)
    return PsiProfile(float(r), values, roots)
