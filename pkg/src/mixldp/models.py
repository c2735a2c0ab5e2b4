"""
Component laws and finite mixtures.

Four law kinds are available, each with closed forms for the functionals
that the risk measures need:

- ``Exponential(rate)``
- ``Gaussian(mean, std)``
- ``PointMass(loc)``
- ``FiniteDiscrete(atoms, probs)``

A mixture ``sum_j p_j mu_j`` is represented by :class:`Mixture`. Its CDF,
partial expectation and exponential moment are the weight-combinations of the
component functionals; its quantile is obtained by bisection between the
smallest and largest component quantiles.

All law methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp
from scipy.stats import norm

from .errors import (
    DivergentMoment,
    EmptySupport,
    NonConvergence,
    NonDifferentiable,
    UnsupportedLaw,
)

SIMPLEX_TOL = 1e-12
QUANTILE_TOL = 1e-10
QUANTILE_MAX_ITER = 200


# ---------------------------------------------------------------------------
# Simplex vectors
# ---------------------------------------------------------------------------

def simplex(weights: ArrayLike, tol: float = SIMPLEX_TOL) -> NDArray[np.float64]:
    """Validate ``weights`` as a point of the probability simplex.

    Returns a read-only float array. Entries must be nonnegative and sum to
    one within ``tol``; no renormalisation is performed.
    """
    w = np.array(weights, dtype=float, ndmin=1)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0.0):
        raise ValueError(f"weights must be nonnegative, got {w.tolist()}")
    total = float(w.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"weights must sum to 1 (got {total!r})")
    if total == 0.0:
        raise EmptySupport("weights have no positive entry")
    w.setflags(write=False)
    return w


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------

class Law(ABC):
    """A probability law on the real line."""

    kind: str = ""

    @property
    @abstractmethod
    def is_continuous(self) -> bool:
        """True when the CDF is continuous and strictly increasing on its support."""

    @abstractmethod
    def cdf(self, x: ArrayLike) -> NDArray | float: ...

    @abstractmethod
    def quantile(self, alpha: ArrayLike) -> NDArray | float: ...

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def partial_expectation(self, t: ArrayLike) -> NDArray | float:
        """Return ``int_{(t, inf)} x mu(dx)``."""

    @abstractmethod
    def log_exp_moment(self, theta: float) -> float:
        """Return ``log E[exp(theta X)]``; raise :class:`DivergentMoment` if infinite."""

    def exp_moment(self, theta: float) -> float:
        return math.exp(self.log_exp_moment(theta))

    def pdf(self, x: ArrayLike) -> NDArray | float:
        raise NonDifferentiable(f"{self.kind} law has no density")

    def atoms(self) -> tuple[NDArray, NDArray]:
        """Atom locations and masses of a purely atomic law."""
        raise UnsupportedLaw(f"{self.kind} law is not atomic")

    @abstractmethod
    def to_dict(self) -> dict: ...


@dataclass(frozen=True)
class Exponential(Law):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"exponential rate must be positive, got {self.rate!r}")

    @property
    def is_continuous(self) -> bool:
        return True

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = -np.expm1(-self.rate * np.maximum(x, 0.0))
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)
        return out if out.ndim else float(out)

    def quantile(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        out = -np.log1p(-alpha) / self.rate
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return 1.0 / self.rate

    def partial_expectation(self, t):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0.0)
        out = (tp + 1.0 / self.rate) * np.exp(-self.rate * tp)
        return out if out.ndim else float(out)

    def log_exp_moment(self, theta: float) -> float:
        if theta >= self.rate:
            raise DivergentMoment(
                f"E[exp({theta} X)] is infinite for Exponential(rate={self.rate})"
            )
        return math.log(self.rate) - math.log(self.rate - theta)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Gaussian(Law):
    mu: float
    sigma: float
    kind = "gaussian"

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"gaussian sigma must be positive, got {self.sigma!r}")
        if not math.isfinite(self.mu):
            raise ValueError("gaussian mean must be finite")

    @property
    def is_continuous(self) -> bool:
        return True

    def cdf(self, x):
        out = norm.cdf(np.asarray(x, dtype=float), loc=self.mu, scale=self.sigma)
        return out if np.ndim(out) else float(out)

    def pdf(self, x):
        out = norm.pdf(np.asarray(x, dtype=float), loc=self.mu, scale=self.sigma)
        return out if np.ndim(out) else float(out)

    def quantile(self, alpha):
        out = norm.ppf(np.asarray(alpha, dtype=float), loc=self.mu, scale=self.sigma)
        return out if np.ndim(out) else float(out)

    def mean(self) -> float:
        return float(self.mu)

    def partial_expectation(self, t):
        z = (np.asarray(t, dtype=float) - self.mu) / self.sigma
        out = self.mu * norm.sf(z) + self.sigma * norm.pdf(z)
        return out if np.ndim(out) else float(out)

    def log_exp_moment(self, theta: float) -> float:
        return theta * self.mu + 0.5 * (theta * self.sigma) ** 2

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mean": self.mu, "std": self.sigma}


@dataclass(frozen=True)
class FiniteDiscrete(Law):
    """Law with finitely many atoms ``atoms[i]`` carrying mass ``probs[i]``."""

    atom_locs: tuple[float, ...]
    probs: tuple[float, ...]
    kind = "discrete"

    def __post_init__(self):
        locs = tuple(float(a) for a in self.atom_locs)
        probs = tuple(float(q) for q in simplex(self.probs))
        if len(locs) != len(probs):
            raise ValueError("atoms and probs must have the same length")
        if not all(math.isfinite(a) for a in locs):
            raise ValueError("atom locations must be finite")
        order = sorted(range(len(locs)), key=locs.__getitem__)
        object.__setattr__(self, "atom_locs", tuple(locs[i] for i in order))
        object.__setattr__(self, "probs", tuple(probs[i] for i in order))

    @property
    def is_continuous(self) -> bool:
        return False

    def atoms(self) -> tuple[NDArray, NDArray]:
        return np.array(self.atom_locs), np.array(self.probs)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        locs, probs = self.atoms()
        out = (locs[None, :] <= x.reshape(-1, 1)) @ probs
        out = np.clip(out, 0.0, 1.0).reshape(x.shape)
        return out if out.ndim else float(out)

    def quantile(self, alpha):
        # generalised inverse inf{x : F(x) >= alpha}
        alpha = np.asarray(alpha, dtype=float)
        locs, probs = self.atoms()
        cum = np.cumsum(probs)
        idx = np.searchsorted(cum, alpha - 1e-15, side="left")
        out = locs[np.minimum(idx, locs.size - 1)]
        return out if out.ndim else float(out)

    def mean(self) -> float:
        locs, probs = self.atoms()
        return float(locs @ probs)

    def partial_expectation(self, t):
        t = np.asarray(t, dtype=float)
        locs, probs = self.atoms()
        out = ((locs[None, :] > t.reshape(-1, 1)) * locs) @ probs
        out = out.reshape(t.shape)
        return out if out.ndim else float(out)

    def log_exp_moment(self, theta: float) -> float:
        locs, probs = self.atoms()
        return float(logsumexp(theta * locs, b=probs))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "atoms": list(self.atom_locs), "probs": list(self.probs)}


@dataclass(frozen=True)
class PointMass(FiniteDiscrete):
    """Dirac mass at ``loc``."""

    atom_locs: tuple[float, ...] = field(init=False)
    probs: tuple[float, ...] = field(init=False)
    loc: float = 0.0
    kind = "point_mass"

    def __post_init__(self):
        if not math.isfinite(self.loc):
            raise ValueError("point mass location must be finite")
        object.__setattr__(self, "atom_locs", (float(self.loc),))
        object.__setattr__(self, "probs", (1.0,))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "loc": self.loc}


def point_mass(loc: float) -> PointMass:
    return PointMass(loc=loc)


def discrete(atoms: Sequence[float], probs: Sequence[float]) -> FiniteDiscrete:
    return FiniteDiscrete(tuple(atoms), tuple(probs))


# ---------------------------------------------------------------------------
# Mixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mixture:
    """Finite mixture ``sum_j weights[j] * components[j]``."""

    components: tuple[Law, ...]
    weights: NDArray[np.float64]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        w = simplex(self.weights)
        if w.size != len(comps):
            raise ValueError(
                f"{len(comps)} components but {w.size} weights"
            )
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.components)


def _component_matrix(components: Sequence[Law], fn: str, x) -> NDArray:
    """Stack ``getattr(law, fn)(x)`` column-wise, shape ``x.shape + (s,)``."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.asarray(getattr(law, fn)(x), dtype=float) for law in components], axis=-1)


def mixture_cdf(mix: Mixture, x: ArrayLike):
    """Mixture CDF at ``x``: the weight-combination of component CDFs."""
    out = _component_matrix(mix.components, "cdf", x) @ mix.weights
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(out) else float(out)


def mixture_pdf(mix: Mixture, x: ArrayLike):
    out = _component_matrix(mix.components, "pdf", x) @ mix.weights
    return out if np.ndim(out) else float(out)


def require_continuous(components: Sequence[Law]) -> None:
    for law in components:
        if not law.is_continuous:
            raise UnsupportedLaw(
                f"quantile inversion needs continuous strictly increasing CDFs; "
                f"got a {law.kind} component"
            )


def mixture_quantile_many(
    components: Sequence[Law],
    weights: ArrayLike,
    alpha: float,
    tol: float = QUANTILE_TOL,
    max_iter: int = QUANTILE_MAX_ITER,
) -> NDArray[np.float64]:
    """Vectorised mixture quantile for each row of a weight matrix.

    Parameters
    ----------
    components : sequence of Law
        Continuous component laws.
    weights : array_like, shape (N, s)
        One simplex vector per row.
    alpha : float
        Probability level in (0, 1).

    Returns
    -------
    ndarray, shape (N,)
        The unique ``r`` per row with ``sum_j w_j F_j(r) = alpha``, to
        absolute tolerance ``tol``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    require_continuous(components)
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    qs = np.array([law.quantile(alpha) for law in components], dtype=float)
    # only components carrying weight matter for the bracket
    masked_lo = np.where(W > 0, qs, np.inf).min(axis=1)
    masked_hi = np.where(W > 0, qs, -np.inf).max(axis=1)
    lo, hi = masked_lo.copy(), masked_hi.copy()
    for _ in range(max_iter):
        width = hi - lo
        if np.all(width <= tol):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        below = np.einsum("ns,ns->n", _component_matrix(components, "cdf", mid), W) < alpha
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    raise NonConvergence(f"mixture quantile bisection did not reach tol={tol}")


def mixture_quantile(mix: Mixture, alpha: float) -> float:
    """Unique ``r`` with ``mixture_cdf(mix, r) == alpha``, by bisection."""
    return float(mixture_quantile_many(mix.components, mix.weights[None, :], alpha)[0])


def mixture_mean(mix: Mixture) -> float:
    return float(np.array([law.mean() for law in mix.components]) @ mix.weights)


def mixture_partial_expectation(mix: Mixture, t: ArrayLike):
    """``sum_j p_j int_{(t, inf)} x mu_j(dx)``."""
    out = _component_matrix(mix.components, "partial_expectation", t) @ mix.weights
    return out if np.ndim(out) else float(out)


def mixture_log_exp_moment(mix: Mixture, theta: float) -> float:
    logs = np.array([law.log_exp_moment(theta) for law in mix.components])
    return float(logsumexp(logs, b=mix.weights))


def mixture_exp_moment(mix: Mixture, theta: float) -> float:
    """``sum_j p_j E[exp(theta X_j)]``; raises :class:`DivergentMoment` if infinite."""
    if not theta > 0.0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    return math.exp(mixture_log_exp_moment(mix, theta))
