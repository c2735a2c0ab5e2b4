"""
Brute-force minimisation of relative entropy over a simplex grid.

The grid is every composition ``p = k / m`` with ``k_j >= 0`` and
``sum_j k_j = m``. Grid points rarely satisfy a constraint exactly, so a point
is feasible when it lies inside a band around the constraint. Nothing here
uses Lagrange multipliers or exponential tilting; the module exists to check
:mod:`mixldp.ratefn` independently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import comb, rel_entr

from .errors import LengthMismatch
from .models import Law, simplex
from .riskmeasures import PsiProfile, RiskMeasure, evaluate_many

MAX_COMPONENTS = 6


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution ``m`` and an optional feasibility band half-width.

    ``constraint_tol=None`` selects the default band: ``1/m`` (relative to
    ``max_j |psi_j|``) for the linear constraint, and ``span/m`` for the
    general constraint, where ``span`` is the spread of the risk measure over
    the pure components. A linear band of ``max|psi|/m`` is the narrowest one
    guaranteed to contain a grid point whenever the constraint is satisfiable,
    since moving one unit of mass changes ``sum_j p_j psi_j`` by at most
    ``2 max|psi| / m``.
    """

    resolution: int
    constraint_tol: float | None = None

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be at least 1")
        if self.constraint_tol is not None and not self.constraint_tol > 0.0:
            raise ValueError("constraint_tol must be positive")

    def size(self, s: int) -> int:
        return int(comb(self.resolution + s - 1, s - 1, exact=True))


@dataclass(frozen=True, eq=False)
class OracleResult:
    min_entropy: float
    argmin: NDArray | None
    feasible_count: int


def compositions(m: int, s: int) -> NDArray[np.int64]:
    """All ``k`` in ``N^s`` with ``sum(k) == m``, in lexicographic order."""
    if s < 1:
        raise ValueError("s must be positive")
    if s == 1:
        return np.array([[m]], dtype=np.int64)
    n = int(comb(m + s - 1, s - 1, exact=True))
    bars = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(m + s - 1), s - 1)),
        dtype=np.int64,
        count=n * (s - 1),
    ).reshape(n, s - 1)
    edges = np.hstack([np.full((n, 1), -1), bars, np.full((n, 1), m + s - 1)])
    return np.diff(edges, axis=1) - 1


def grid_points(grid: GridSpec, s: int) -> NDArray:
    if s > MAX_COMPONENTS:
        raise ValueError(f"the grid oracle is capped at s={MAX_COMPONENTS}, got s={s}")
    return compositions(grid.resolution, s) / grid.resolution


def relative_entropy(p: ArrayLike, pi: ArrayLike):
    """``sum_j p_j log(p_j / pi_j)`` with ``0 log 0 = 0``; infinite if ``p`` charges a null of ``pi``.

    ``p`` may be a matrix with one distribution per row.
    """
    p = np.asarray(p, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if p.shape[-1] != pi.shape[-1]:
        raise LengthMismatch(f"lengths {p.shape[-1]} and {pi.shape[-1]} differ")
    out = rel_entr(p, pi).sum(axis=-1)
    return out if np.ndim(out) else float(out)


def _minimise(P: NDArray, pi: NDArray, feasible: NDArray) -> OracleResult:
    count = int(feasible.sum())
    if count == 0:
        return OracleResult(math.inf, None, 0)
    idx = np.flatnonzero(feasible)
    ent = relative_entropy(P[idx], pi)
    best = int(np.argmin(ent))  # first minimiser in lexicographic order
    return OracleResult(float(ent[best]), P[idx[best]].copy(), count)


def grid_min_general(
    rho: RiskMeasure,
    components: Sequence[Law],
    pi: ArrayLike,
    r,
    grid: GridSpec,
):
    """Minimum relative entropy over grid points whose mixture risk is within the band of ``r``.

    ``r`` may be a scalar or a sequence; a sequence returns one
    :class:`OracleResult` per level while evaluating the grid only once.
    """
    pi = simplex(pi)
    s = len(components)
    if pi.size != s:
        raise LengthMismatch(f"{s} components but {pi.size} weights")
    P = grid_points(grid, s)
    values = evaluate_many(rho, components, P)
    tol = grid.constraint_tol
    if tol is None:
        vertex = evaluate_many(rho, components, np.eye(s))
        span = float(vertex.max() - vertex.min())
        tol = (span if span > 0.0 else 1.0) / grid.resolution
    levels = np.atleast_1d(np.asarray(r, dtype=float))
    results = [_minimise(P, pi, np.abs(values - level) <= tol) for level in levels]
    return results if np.ndim(r) else results[0]


def grid_min_condition(profile: PsiProfile | ArrayLike, pi: ArrayLike, grid: GridSpec) -> OracleResult:
    """Minimum relative entropy over grid points with ``|sum_j p_j psi_j| <= tol * max_j |psi_j|``."""
    psis = np.asarray(profile.values if isinstance(profile, PsiProfile) else profile, dtype=float)
    pi = simplex(pi)
    if pi.size != psis.size:
        raise LengthMismatch(f"{psis.size} psi values but {pi.size} weights")
    P = grid_points(grid, psis.size)
    tol = grid.constraint_tol if grid.constraint_tol is not None else 1.0 / grid.resolution
    band = tol * float(np.abs(psis).max())
    return _minimise(P, pi, np.abs(P @ psis) <= band)
