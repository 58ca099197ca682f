"""Spherical-cap packing bounds for the maximal absolute inner product.

M_{p,n} = max_j |<L_j, U>| for p unit vectors L_j and U uniform on S^{n-1}.
All p-dependence goes through log p so bounds stay computable for p far
beyond integer range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .specfun import DomainError, betainc_tails, log_beta

__all__ = [
    "ProblemDims",
    "StdConstants",
    "Phase",
    "PhaseRegime",
    "saber",
    "sabre",
    "saber_tail_bound",
    "packing_divergence",
    "std_constants",
    "msq_exact_cdf",
    "msq_limit_cdf",
    "msq_limit_inverse",
    "msq_limit_quantile",
    "msq_exact_quantile",
    "phase_limit",
    "sparse_rate",
]


@dataclass(frozen=True)
class ProblemDims:
    """Sphere dimension n and vector count p (given directly or as log p)."""

    n: float
    p: int | None = None
    log_p: float | None = None

    def __post_init__(self):
        if (self.p is None) == (self.log_p is None):
            raise DomainError("give exactly one of p or log_p")
        if not self.n >= 2:
            raise DomainError(f"n must be >= 2, got {self.n!r}")
        if self.p is not None:
            if int(self.p) != self.p or self.p < 1:
                raise DomainError(f"p must be a positive integer, got {self.p!r}")
            object.__setattr__(self, "log_p", math.log(self.p))
        elif not (self.log_p >= 0.0 and math.isfinite(self.log_p)):
            raise DomainError(f"log_p must be finite and >= 0, got {self.log_p!r}")

    @classmethod
    def of(cls, n, p=None, log_p=None) -> "ProblemDims":
        return cls(n, p=p, log_p=None if p is not None else log_p)

    @property
    def shrink(self) -> float:
        """p^{-2/(n-1)}."""
        return math.exp(-2.0 * self.log_p / (self.n - 1))

    @property
    def one_minus_shrink(self) -> float:
        """1 - p^{-2/(n-1)} without cancellation for small log p / n."""
        return -math.expm1(-2.0 * self.log_p / (self.n - 1))


@dataclass(frozen=True)
class StdConstants:
    """Location a, scale b and correction c standardizing M^2."""

    a: float
    b: float
    c: float

    def standardize(self, msq):
        return (np.asarray(msq, dtype=float) - self.a) / self.b


class Phase(str, Enum):
    DENSE = "dense"
    CRITICAL = "critical"
    SPARSE = "sparse"


@dataclass(frozen=True)
class PhaseRegime:
    """Limit of log p / n: infinite, beta in (0, inf), or zero."""

    tag: Phase
    beta: float | None = None

    def __post_init__(self):
        if (self.tag is Phase.CRITICAL) != (self.beta is not None):
            raise DomainError("beta must be given exactly for the CRITICAL regime")
        if self.beta is not None and not self.beta > 0.0:
            raise DomainError(f"critical beta must be positive, got {self.beta!r}")


def saber(dims: ProblemDims) -> float:
    """sqrt(1 - p^{-2/(n-1)}): high-probability ceiling on M_{p,n}."""
    return math.sqrt(dims.one_minus_shrink)


def sabre(n: int, p: int | None = None, log_p: float | None = None) -> float:
    """Bound on the maximal spurious sample correlation from n observations."""
    if not n >= 3:
        raise DomainError(f"sabre needs n >= 3, got {n!r}")
    return saber(ProblemDims.of(n - 1, p=p, log_p=log_p))


def packing_divergence(dims: ProblemDims) -> float:
    """(n-1)(p^{2/(n-1)} - 1), which diverges as p grows uniformly in n."""
    return (dims.n - 1) * math.expm1(2.0 * dims.log_p / (dims.n - 1))


def saber_tail_bound(dims: ProblemDims, delta: float) -> float:
    """Finite-sample bound on P(M_{p,n} > sqrt((1+delta)(1 - p^{-2/(n-1)}))).

    Returns inf for p = 1, where the bound carries no information.
    """
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    t = packing_divergence(dims)
    if t == 0.0:
        return math.inf
    log_bound = (
        0.5 * math.log(2.0)
        + dims.log_p / (dims.n - 1)
        - 0.5 * delta * t
        - 0.5 * math.log(math.pi * (1.0 + delta) * t)
    )
    return math.exp(log_bound)


def std_constants(dims: ProblemDims) -> StdConstants:
    """Adaptive standardizing constants (a, b, c) for M^2_{p,n}."""
    if dims.log_p < math.log(2.0) - 1e-12:
        raise DomainError("standardizing constants need p >= 2")
    n = dims.n
    k = 2.0 / (n - 1)
    log_c = k * (math.log((n - 1) / 2.0) + log_beta(0.5, (n - 1) / 2.0)
                 + 0.5 * math.log(dims.one_minus_shrink))
    c = math.exp(log_c)
    # p^{-2/(n-1)} c, formed in log space so huge p does not underflow early
    scaled = math.exp(log_c - k * dims.log_p)
    return StdConstants(a=1.0 - scaled, b=k * scaled, c=c)


def msq_exact_cdf(w, dims: ProblemDims):
    """P(M^2 <= w) = I_w(1/2, (n-1)/2)^p when the L_j are i.i.d. uniform."""
    n = dims.n
    _, upper = betainc_tails(0.5, 0.5 * (n - 1), w)
    p = math.exp(dims.log_p)
    with np.errstate(divide="ignore"):
        out = np.exp(p * np.log1p(-np.asarray(upper, dtype=float)))
    return out if np.ndim(out) else float(out)


def msq_limit_cdf(x, n):
    """Limit law of (M^2 - a)/b at fixed n: exp(-(1 - 2x/(n-1))^{(n-1)/2}), capped at 1."""
    if not n >= 2:
        raise DomainError(f"n must be >= 2, got {n!r}")
    x = np.asarray(x, dtype=float)
    half = 0.5 * (n - 1)
    base = np.clip(1.0 - x / half, 0.0, None)
    with np.errstate(over="ignore"):
        out = np.exp(-np.power(base, half))
    return out if out.ndim else float(out)


def msq_limit_inverse(q: float, n) -> float:
    """Closed-form inverse of msq_limit_cdf for 0 < q < 1."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q!r}")
    half = 0.5 * (n - 1)
    return half * (1.0 - (-math.log(q)) ** (1.0 / half))


def msq_limit_quantile(q: float, dims: ProblemDims) -> float:
    """Approximate q-quantile of M^2_{p,n} on its natural scale."""
    const = std_constants(dims)
    return const.a + const.b * msq_limit_inverse(q, dims.n)


def msq_exact_quantile(q: float, dims: ProblemDims) -> float:
    """q-quantile of M^2_{p,n} under the exact law I_w(1/2, (n-1)/2)^p.

    Solves p log(1 - upper tail) = log q by bisection down to adjacent floats.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q!r}")
    if not dims.n >= 2 or int(dims.n) != dims.n:
        raise DomainError(f"exact law needs an integer n >= 2, got {dims.n!r}")
    p = math.exp(dims.log_p)
    target = math.log(q)
    b = 0.5 * (dims.n - 1)
    lo, hi = 0.0, 1.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        _, up = betainc_tails(0.5, b, mid)
        if p * math.log1p(-up) < target:
            lo = mid
        else:
            hi = mid


def phase_limit(regime: PhaseRegime) -> float:
    """In-probability limit of M_{p,n} in each regime of log p / n."""
    if regime.tag is Phase.DENSE:
        return 1.0
    if regime.tag is Phase.SPARSE:
        return 0.0
    return math.sqrt(-math.expm1(-2.0 * regime.beta))


def sparse_rate(dims: ProblemDims) -> float:
    """sqrt(2 log p / n), the normalization of M_{p,n} when log p / n -> 0."""
    return math.sqrt(2.0 * dims.log_p / dims.n)
