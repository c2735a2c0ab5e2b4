"""
Empirical weights, empirical risk measures and the decay of deviation probabilities.

The weights of a mixture are estimated by the relative frequencies of ``n``
i.i.d. component labels drawn from ``pi``. This module estimates
``P(|rho(sum_j pihat_n(j) mu_j) - r0| >= delta)`` over a range of ``n``, either
by Monte Carlo or, for two components, by exact binomial summation, and
compares ``-log(P) / n`` with the decay constant of the rate function.

Monte Carlo replicas are drawn in fixed-size blocks, block ``b`` at sample
size ``n`` using the stream seeded by ``(seed, n, b)``. The blocks are
independent, so the estimate does not depend on how they are spread over
workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from dataclasses import dataclass
import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp
from scipy.stats import binom

from .errors import DegenerateData
from .models import simplex
from .ratefn import RateProblem, decay_constant
from .riskmeasures import evaluate_many

BLOCK_SIZE = 1 << 16
# slack for deciding |rhohat - r0| >= delta when both sides are equal up to rounding
TIE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    problem: RateProblem
    delta: float
    n_grid: tuple[int, ...]
    replicas: int = 10_000
    seed: int = 0

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid or any(n < 1 for n in grid):
            raise ValueError("n_grid must hold positive sample sizes")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")


@dataclass(frozen=True)
class TailPoint:
    n: int
    estimate: float
    standard_error: float
    log_estimate: float

    @property
    def minus_log_p_over_n(self) -> float:
        return -self.log_estimate / self.n


@dataclass(frozen=True)
class DecayEstimate:
    """Tail estimates per sample size and the fitted exponential decay.

    ``slope`` and ``intercept`` come from the least-squares fit
    ``-log P_n ~ intercept + slope * n``; ``point_value`` is ``-log P_n / n``
    at the largest ``n``.
    """

    per_n: tuple[TailPoint, ...]
    slope: float
    intercept: float
    point_value: float
    h_delta_reference: float

    def records(self) -> list[dict]:
        return [
            {
                "n": p.n,
                "estimate": p.estimate,
                "stderr": p.standard_error,
                "minus_log_p_over_n": p.minus_log_p_over_n,
                "h_delta_reference": self.h_delta_reference,
            }
            for p in self.per_n
        ]


def sample_weights(pi: ArrayLike, n: int, rng: np.random.Generator, size: int | None = None) -> NDArray:
    """Relative frequencies of ``n`` i.i.d. labels with law ``pi``.

    With ``size`` set, returns a ``(size, s)`` matrix of independent draws.
    """
    pi = simplex(pi)
    if n < 1:
        raise ValueError("n must be at least 1")
    return rng.multinomial(n, pi, size=size) / n


def _restrict(problem: RateProblem, pihat: NDArray) -> NDArray:
    pihat = np.atleast_2d(np.asarray(pihat, dtype=float))
    if pihat.shape[1] == problem.size:
        return pihat
    if pihat.shape[1] == problem.full_size:
        outside = np.setdiff1d(np.arange(problem.full_size), problem.support)
        if np.any(pihat[:, outside] != 0.0):
            raise ValueError("empirical weights charge a component with zero true weight")
        return pihat[:, problem.support]
    raise ValueError(f"weights of length {pihat.shape[1]} do not match the problem")


def empirical_risk(problem: RateProblem, pihat: ArrayLike):
    """Risk of the mixture with weights ``pihat``; a matrix gives one value per row."""
    W = _restrict(problem, pihat)
    if np.ndim(pihat) == 1:
        simplex(W[0])
    out = evaluate_many(problem.rho, problem.components, W)
    return out if np.ndim(pihat) > 1 else float(out[0])


def _hits(problem: RateProblem, risks: NDArray, delta: float) -> NDArray:
    return np.abs(risks - problem.r0) >= delta - TIE_SLACK * max(1.0, delta)


def _block_hits(plan: SimulationPlan, n: int, block: int) -> int:
    start = block * BLOCK_SIZE
    count = min(BLOCK_SIZE, plan.replicas - start)
    rng = np.random.default_rng([plan.seed, n, block])
    W = sample_weights(plan.problem.pi, n, rng, size=count)
    risks = evaluate_many(plan.problem.rho, plan.problem.components, W)
    return int(_hits(plan.problem, risks, plan.delta).sum())


def tail_probability(plan: SimulationPlan, n: int, workers: int | None = None) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of ``P(|rhohat_n - r0| >= delta)``."""
    blocks = range(math.ceil(plan.replicas / BLOCK_SIZE))
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(partial(_block_hits, plan, n), blocks))
    else:
        hits = sum(_block_hits(plan, n, b) for b in blocks)
    p = hits / plan.replicas
    return p, math.sqrt(p * (1.0 - p) / plan.replicas)


def exact_log_tail_probability(problem: RateProblem, delta: float, n: int) -> float:
    """``log P(|rhohat_n - r0| >= delta)`` by summing binomial masses (two components only)."""
    if problem.size != 2:
        raise ValueError(f"exact binomial tails need s=2, got s={problem.size}")
    k = np.arange(n + 1)
    W = np.column_stack([(n - k) / n, k / n])
    risks = evaluate_many(problem.rho, problem.components, W)
    hit = _hits(problem, risks, delta)
    if not hit.any():
        return -math.inf
    return float(logsumexp(binom.logpmf(k[hit], n, problem.pi[1])))


def exact_tail_probability(problem: RateProblem, delta: float, n: int) -> float:
    return math.exp(exact_log_tail_probability(problem, delta, n))


def decay_slope(plan: SimulationPlan, exact: bool = False, workers: int | None = None) -> DecayEstimate:
    """Tail probabilities over ``plan.n_grid`` and their exponential decay rate.

    ``exact=True`` replaces Monte Carlo by binomial summation (two components
    only); the standard errors are then zero.
    """
    points = []
    for n in plan.n_grid:
        if exact:
            logp = exact_log_tail_probability(plan.problem, plan.delta, n)
            p, se = math.exp(logp), 0.0
        else:
            p, se = tail_probability(plan, n, workers=workers)
            logp = math.log(p) if p > 0.0 else -math.inf
        if not p > 0.0:
            raise DegenerateData(f"tail probability is zero at n={n}; choose a smaller delta or n")
        points.append(TailPoint(n, p, se, logp))
    ns = np.array([p.n for p in points], dtype=float)
    neg_logp = np.array([-p.log_estimate for p in points])
    if ns.size >= 2:
        slope, intercept = np.polyfit(ns, neg_logp, 1)
    else:
        slope, intercept = neg_logp[0] / ns[0], 0.0
    return DecayEstimate(
        per_n=tuple(points),
        slope=float(slope),
        intercept=float(intercept),
        point_value=points[-1].minus_log_p_over_n,
        h_delta_reference=decay_constant(plan.problem, plan.delta) if plan.delta > 0 else 0.0,
    )
