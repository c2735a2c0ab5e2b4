"""
Rate functions for risk measures of mixtures with empirically estimated weights.

For a problem ``(rho, mu_1..mu_s, pi)`` whose constraint admits a decreasing
weight-linear form ``psi`` (see :mod:`mixldp.riskmeasures`), the rate function
is

    H(r) = inf { KL(p || pi) : p in simplex, sum_j p_j psi(mu_j, r) = 0 }.

Between the smallest and largest component roots the infimum is attained by
the exponential tilt ``p_i ∝ pi_i exp(-lam psi_i)``, where the multiplier
``lam`` zeroes the tilted mean of ``psi``; then
``H(r) = -log sum_j pi_j exp(-lam psi_j)``. At the two end points the
minimiser concentrates on the components whose root is extremal, and outside
the closed interval ``H`` is infinite. When all roots coincide ``H`` is zero at
the common root and infinite elsewhere.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp

from .errors import (
    ConditionUnsupported,
    DegenerateProblem,
    EmptySupport,
    NonConvergence,
    OutOfInterior,
    OutOfSupport,
)
from .models import Law, Mixture, simplex
from .riskmeasures import (
    RiskMeasure,
    check_condition,
    component_root,
    evaluate,
    psi,
    psi_prime,
)

DEGENERACY_TOL = 1e-9
TIE_TOL = 1e-9
LAMBDA_TOL = 1e-10
LAMBDA_MAX = 1e6
LAMBDA_MAX_ITER = 300
R0_CHECK_TOL = 1e-7


class Branch(str, Enum):
    DEGENERATE = "degenerate"
    INTERIOR = "interior"
    LOWER_BOUNDARY = "lower_boundary"
    UPPER_BOUNDARY = "upper_boundary"
    OUTSIDE = "outside"


def reduce_support(pi: ArrayLike, components: Sequence[Law]) -> tuple[NDArray, tuple[Law, ...], NDArray]:
    """Drop the components that carry zero true weight.

    Returns the reduced weights, the reduced laws and the original indices of
    the kept components.
    """
    w = simplex(pi)
    if w.size != len(components):
        raise ValueError(f"{len(components)} components but {w.size} weights")
    keep = np.flatnonzero(w > 0.0)
    if keep.size == 0:
        raise EmptySupport("all weights are zero")
    reduced = w[keep].copy()
    reduced.setflags(write=False)
    return reduced, tuple(components[i] for i in keep), keep


@dataclass(frozen=True, eq=False)
class RateProblem:
    """A risk measure, component laws and true weights.

    Components with zero weight are dropped on construction; ``pi`` and
    ``components`` hold the reduced problem and ``support`` the original
    indices of the kept components.
    """

    rho: RiskMeasure
    components: tuple[Law, ...]
    pi: NDArray
    support: NDArray = field(init=False)
    full_size: int = field(init=False)

    def __post_init__(self):
        comps = tuple(self.components)
        check = check_condition(self.rho, comps)
        if not check.supported:
            raise ConditionUnsupported(check.reason)
        w, laws, keep = reduce_support(self.pi, comps)
        object.__setattr__(self, "full_size", len(comps))
        object.__setattr__(self, "components", laws)
        object.__setattr__(self, "pi", w)
        object.__setattr__(self, "support", keep)

    @property
    def size(self) -> int:
        return len(self.components)

    @cached_property
    def roots(self) -> NDArray:
        return np.array([component_root(self.rho, law) for law in self.components])

    @cached_property
    def r0(self) -> float:
        return r_zero(self)

    def psi_values(self, r: float) -> NDArray:
        return np.array([psi(self.rho, law, r) for law in self.components], dtype=float)

    def expand(self, p: NDArray) -> NDArray:
        """Embed weights over the reduced support into the original index set."""
        out = np.zeros(self.full_size)
        out[self.support] = p
        return out


@dataclass(frozen=True)
class SupportBounds:
    lower: float
    upper: float
    r0: float
    argmin: tuple[int, ...]
    argmax: tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        return self.upper - self.lower <= DEGENERACY_TOL


@dataclass(frozen=True, eq=False)
class RateResult:
    value: float
    branch: Branch
    lambda_star: float | None = None
    minimizer: NDArray | None = None


def r_zero(problem: RateProblem) -> float:
    """True risk level ``rho(sum_j pi_j mu_j)``, cross-checked against the constraint."""
    r0 = evaluate(problem.rho, Mixture(problem.components, problem.pi))
    vals = problem.psi_values(r0)
    residual = float(problem.pi @ vals)
    scale = max(1.0, float(np.abs(vals).max()))
    if abs(residual) > R0_CHECK_TOL * scale:
        raise ArithmeticError(
            f"constraint residual {residual:.3e} at r0={r0!r} exceeds {R0_CHECK_TOL}"
        )
    return r0


def _group(values: NDArray, target: float) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(np.abs(values - target) <= TIE_TOL))


def support_bounds(problem: RateProblem) -> SupportBounds:
    """Smallest and largest component roots and the indices attaining them.

    Indices refer to the reduced problem; map them through
    ``problem.support`` for the original numbering.
    """
    roots = problem.roots
    lo, hi = float(roots.min()), float(roots.max())
    return SupportBounds(lo, hi, problem.r0, _group(roots, lo), _group(roots, hi))


# ---------------------------------------------------------------------------
# Exponential tilting
# ---------------------------------------------------------------------------

def _tilt(log_pi: NDArray, psis: NDArray, lam: float) -> tuple[NDArray, float]:
    """Tilted weights and the log normaliser ``log sum_j pi_j exp(-lam psi_j)``."""
    logw = log_pi - lam * psis
    lse = float(logsumexp(logw))
    return np.exp(logw - lse), lse


def _tilted_moments(log_pi: NDArray, psis: NDArray, lam: float) -> tuple[float, float]:
    p, _ = _tilt(log_pi, psis, lam)
    mean = float(p @ psis)
    var = float(p @ (psis - mean) ** 2)
    return mean, var


def solve_multiplier(pi: ArrayLike, psis: ArrayLike, tol: float = LAMBDA_TOL) -> float:
    """Multiplier ``lam`` with ``sum_j pi_j psi_j e^{-lam psi_j} = 0``.

    The tilted mean of ``psi`` is strictly decreasing in ``lam`` (its
    derivative is minus the tilted variance), so the root is unique whenever
    ``psis`` takes both signs on the support of ``pi``. Newton steps are
    taken inside a sign-change bracket and replaced by bisection whenever they
    leave it.
    """
    pi = np.asarray(pi, dtype=float)
    psis = np.asarray(psis, dtype=float)
    on = pi > 0
    log_pi, psis = np.log(pi[on]), psis[on]
    if not (psis.max() > 0.0 > psis.min()):
        raise OutOfInterior("psi values do not change sign; no finite multiplier exists")
    scale = float(np.abs(psis).max())

    lo, hi = -1.0, 1.0
    while _tilted_moments(log_pi, psis, lo)[0] <= 0.0:
        lo *= 2.0
        if -lo > LAMBDA_MAX:
            raise NonConvergence("multiplier bracket exceeded its lower limit")
    while _tilted_moments(log_pi, psis, hi)[0] >= 0.0:
        hi *= 2.0
        if hi > LAMBDA_MAX:
            raise NonConvergence("multiplier bracket exceeded its upper limit")

    lam = 0.0
    for _ in range(LAMBDA_MAX_ITER):
        g, var = _tilted_moments(log_pi, psis, lam)
        if abs(g) <= tol * 1e-3 * scale:
            return lam
        if g > 0.0:
            lo = lam
        else:
            hi = lam
        step = lam + g / var if var > 0.0 else math.nan
        lam = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(lam)):
            break
    g, _ = _tilted_moments(log_pi, psis, lam)
    if abs(g) > tol * scale:
        raise NonConvergence(f"multiplier residual {g:.3e} above tolerance")
    return lam


def _classify(problem: RateProblem, r: float) -> tuple[Branch, SupportBounds]:
    b = support_bounds(problem)
    if b.degenerate:
        return Branch.DEGENERATE, b
    if r < b.lower or r > b.upper:
        return Branch.OUTSIDE, b
    if r == b.lower:
        return Branch.LOWER_BOUNDARY, b
    if r == b.upper:
        return Branch.UPPER_BOUNDARY, b
    return Branch.INTERIOR, b


def lambda_star(problem: RateProblem, r: float) -> float:
    """Lagrange multiplier of the tilted minimiser at an interior level ``r``."""
    branch, b = _classify(problem, r)
    if branch is not Branch.INTERIOR:
        raise OutOfInterior(f"r={r!r} is not inside ({b.lower!r}, {b.upper!r})")
    return solve_multiplier(problem.pi, problem.psi_values(r))


def _concentrate(problem: RateProblem, group: tuple[int, ...]) -> NDArray:
    p = np.zeros(problem.size)
    idx = list(group)
    p[idx] = problem.pi[idx] / problem.pi[idx].sum()
    return p


def _one_signed(problem: RateProblem, psis: NDArray) -> RateResult | None:
    """Exact answer when rounding leaves ``psis`` without a strict sign change.

    This happens within a few ulps of a boundary root. The constraint can then
    only hold on the zero set of ``psis``.
    """
    if psis.max() > 0.0 > psis.min():
        return None
    zero = tuple(int(i) for i in np.flatnonzero(psis == 0.0))
    branch = Branch.LOWER_BOUNDARY if psis.min() >= 0.0 else Branch.UPPER_BOUNDARY
    if not zero:
        return RateResult(math.inf, Branch.OUTSIDE)
    mass = float(problem.pi[list(zero)].sum())
    return RateResult(-math.log(mass) + 0.0, branch, None, problem.expand(_concentrate(problem, zero)))


def minimizer(problem: RateProblem, r: float) -> NDArray:
    """Weights attaining the rate-function infimum at ``r`` (original indexing)."""
    branch, b = _classify(problem, r)
    if branch is Branch.OUTSIDE or (branch is Branch.DEGENERATE and abs(r - b.lower) > DEGENERACY_TOL):
        raise OutOfSupport(f"r={r!r} is outside [{b.lower!r}, {b.upper!r}]")
    if branch is Branch.DEGENERATE:
        p = problem.pi.copy()
    elif branch is Branch.LOWER_BOUNDARY:
        p = _concentrate(problem, b.argmin)
    elif branch is Branch.UPPER_BOUNDARY:
        p = _concentrate(problem, b.argmax)
    elif r == problem.r0:
        p = problem.pi.copy()
    else:
        psis = problem.psi_values(r)
        edge = _one_signed(problem, psis)
        if edge is not None:
            if edge.minimizer is None:
                raise OutOfSupport(f"no weights attain r={r!r}")
            return edge.minimizer
        lam = solve_multiplier(problem.pi, psis)
        p, _ = _tilt(np.log(problem.pi), psis, lam)
    return problem.expand(p)


def rate(problem: RateProblem, r: float) -> RateResult:
    """Evaluate the rate function at ``r``."""
    r = float(r)
    branch, b = _classify(problem, r)
    if branch is Branch.DEGENERATE:
        if abs(r - b.lower) <= DEGENERACY_TOL:
            return RateResult(0.0, branch, None, problem.expand(problem.pi.copy()))
        return RateResult(math.inf, branch)
    if branch is Branch.OUTSIDE:
        return RateResult(math.inf, branch)
    if branch is Branch.LOWER_BOUNDARY:
        idx = list(b.argmin)
        return RateResult(-math.log(problem.pi[idx].sum()), branch, None,
                          problem.expand(_concentrate(problem, b.argmin)))
    if branch is Branch.UPPER_BOUNDARY:
        idx = list(b.argmax)
        return RateResult(-math.log(problem.pi[idx].sum()), branch, None,
                          problem.expand(_concentrate(problem, b.argmax)))
    if r == problem.r0:
        return RateResult(0.0, branch, 0.0, problem.expand(problem.pi.copy()))
    psis = problem.psi_values(r)
    edge = _one_signed(problem, psis)
    if edge is not None:
        return edge
    log_pi = np.log(problem.pi)
    lam = solve_multiplier(problem.pi, psis)
    p, lse = _tilt(log_pi, psis, lam)
    # -lse is a maximum over lam, so it is >= 0 up to rounding
    return RateResult(max(-lse, 0.0) + 0.0, branch, lam, problem.expand(p))


def rate_value(problem: RateProblem, r: float) -> float:
    return rate(problem, r).value


def rate_curve(problem: RateProblem, rs: ArrayLike, workers: int | None = None) -> list[RateResult]:
    """Evaluate :func:`rate` on a grid, optionally on a thread pool."""
    rs = [float(r) for r in np.asarray(rs, dtype=float).ravel()]
    if not workers or workers <= 1:
        return [rate(problem, r) for r in rs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: rate(problem, r), rs))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def rate_closed_s2(problem: RateProblem, r: float) -> float:
    """Explicit two-component rate function at an interior level."""
    if problem.size != 2:
        raise ValueError(f"two-component formula needs s=2, got s={problem.size}")
    branch, b = _classify(problem, r)
    if branch is not Branch.INTERIOR:
        raise OutOfInterior(f"r={r!r} is not inside ({b.lower!r}, {b.upper!r})")
    pi1, pi2 = problem.pi
    psi1, psi2 = problem.psi_values(r)
    log_ratio = math.log(-pi1 * psi1 / (pi2 * psi2))
    expo = np.array([psi1, psi2]) / (psi2 - psi1)
    return float(-logsumexp(np.log(problem.pi) + expo * log_ratio)) + 0.0


def rate_closed_s3_affine(psi_at: Callable[[float], float], a: float, pi: ArrayLike, r: float) -> float:
    """Explicit rate for three components with ``psi_i(r) = psi_at(r) + i*a``, ``i = 0, 1, 2``."""
    if not a > 0.0:
        raise ValueError("a must be positive")
    pi = simplex(pi)
    if pi.size != 3 or np.any(pi <= 0.0):
        raise ValueError("need three strictly positive weights")
    x = float(psi_at(r))
    if not -2.0 * a < x < 0.0:
        raise OutOfInterior(f"psi(r)={x!r} is not inside (-2a, 0)")
    pi1, pi2, pi3 = pi
    A, B, C = pi3 * (x + 2 * a), pi2 * (x + a), pi1 * x
    disc = B * B - 4.0 * A * C
    assert disc >= 0.0, "discriminant is nonnegative when psi < 0 < psi + 2a"
    root = math.sqrt(disc)
    # positive root of A t^2 + B t + C; the second form avoids cancellation
    t = (-B + root) / (2.0 * A) if B <= 0.0 else -2.0 * C / (B + root)
    expo = (x + a * np.arange(3)) / a
    return float(-logsumexp(np.log(pi) + expo * math.log(t))) + 0.0


# ---------------------------------------------------------------------------
# Local behaviour
# ---------------------------------------------------------------------------

def curvature(problem: RateProblem) -> float:
    """Second derivative of the rate function at ``r0``.

    Equal to ``(sum_h pi_h psi'_h(r0))^2 / sum_h pi_h psi_h(r0)^2``, the
    denominator being the ``pi``-variance of ``psi(., r0)`` since its
    ``pi``-mean vanishes.
    """
    if support_bounds(problem).degenerate:
        raise DegenerateProblem("all component roots coincide")
    r0 = problem.r0
    vals = problem.psi_values(r0)
    slopes = np.array([psi_prime(problem.rho, law, r0) for law in problem.components])
    var = float(problem.pi @ vals**2)
    if var == 0.0:
        raise DegenerateProblem("psi vanishes for every component at r0")
    return float(problem.pi @ slopes) ** 2 / var


def decay_constant(problem: RateProblem, delta: float) -> float:
    """``inf {H(r) : |r - r0| >= delta}``, taken as ``min(H(r0 - delta), H(r0 + delta))``.

    This relies on ``H`` increasing away from ``r0`` on either side.
    """
    if not delta > 0.0:
        raise ValueError("delta must be positive")
    r0 = problem.r0
    return min(rate(problem, r0 - delta).value, rate(problem, r0 + delta).value)
