"""Rank-extreme association for degenerate Gaussian / elliptical vectors.

For X = L^T Z with rank-d loadings, ||X||_inf^2 = K_{p,d} = ||Z||^2 M^2_{p,d}.
This module holds the ReX bound, the moment approximations of K_{p,d} used by
the detector, and the regime-dependent limit laws of K_{p,d}.

The dimension d may be a real number >= 2 in the moment formulas; the
detector relies on that continuous extension when solving for d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .packing import ProblemDims, std_constants
from .specfun import DomainError, chi2_cdf, gauss_cdf, gumbel_cdf, gumbel_pdf, log_gamma

__all__ = [
    "NormLaw",
    "RexMoments",
    "KRegime",
    "KLimitRegime",
    "rex_bound",
    "highrank_quantity",
    "highrank_bound_check",
    "rex_phase_ratio",
    "rex_moments",
    "expected_k",
    "k_ratio",
    "classify_k_regime",
    "k_standardize",
    "mixture_cdf",
    "k_limit_cdf",
]


@dataclass(frozen=True)
class NormLaw:
    """Centering u and scaling v of ||Z||^2 for a spherical law in R^d."""

    u: float
    v: float
    kind: str = "custom"

    def __post_init__(self):
        if not (self.u > 0 and self.v > 0):
            raise DomainError(f"norm law needs u, v > 0, got ({self.u!r}, {self.v!r})")

    @classmethod
    def gaussian(cls, d) -> "NormLaw":
        # chi-square_d: mean d, sd sqrt(2d)
        return cls(u=float(d), v=math.sqrt(2.0 * d), kind="gaussian")


@dataclass(frozen=True)
class RexMoments:
    m: float
    v_small: float
    E: float
    V: float


class KRegime(str, Enum):
    FIXED_D = "fixed_d"
    NORM_DOMINATED = "norm_dominated"
    MIXTURE = "mixture"
    MAX_DOMINATED = "max_dominated"


@dataclass(frozen=True)
class KLimitRegime:
    tag: KRegime
    c: float | None = None

    def __post_init__(self):
        if (self.tag is KRegime.MIXTURE) != (self.c is not None):
            raise DomainError("c must be given exactly for the MIXTURE regime")
        if self.c is not None and not self.c > 0:
            raise DomainError(f"mixture ratio c must be positive, got {self.c!r}")


def _dims(d, p=None, log_p=None) -> ProblemDims:
    if not d >= 2:
        raise DomainError(f"rank d must be >= 2, got {d!r}")
    dims = ProblemDims.of(d, p=p, log_p=log_p)
    if dims.log_p < math.log(2.0) - 1e-12:
        raise DomainError("ReX quantities need p >= 2")
    return dims


def rex_bound(d, p=None, log_p=None, law: NormLaw | None = None) -> float:
    """sqrt(u_d (1 - p^{-2/(d-1)})); Gaussian u_d = d unless a law is given."""
    dims = _dims(d, p, log_p)
    u = float(d) if law is None else law.u
    return math.sqrt(u * dims.one_minus_shrink)


def highrank_quantity(d, p=None, log_p=None) -> float:
    """(log log p)^2 d / (log p)^2; large values put the no-delta bound in force."""
    dims = ProblemDims.of(d, p=p, log_p=log_p)
    if not dims.log_p > 1.0:
        raise DomainError("log log p needs p > e")
    return math.log(dims.log_p) ** 2 * d / dims.log_p**2


def highrank_bound_check(d, p=None, log_p=None, threshold: float = 10.0) -> bool:
    return highrank_quantity(d, p=p, log_p=log_p) > threshold


def rex_phase_ratio(beta: float) -> float:
    """f(beta) = (1 - e^{-2 beta}) / beta, the squared limit of max|X_j| / sqrt(log p)."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return -math.expm1(-2.0 * beta) / beta


def rex_moments(d, p=None, log_p=None) -> RexMoments:
    """Extreme-value moment approximations of M^2_{p,d} and K_{p,d}."""
    dims = _dims(d, p, log_p)
    const = std_constants(dims)
    a, b = const.a, const.b
    g1 = math.exp(log_gamma(1.0 + 2.0 / (d - 1)))
    g2 = math.exp(log_gamma(1.0 + 4.0 / (d - 1)))
    m = a + 0.5 * (d - 1) * (1.0 - g1) * b
    v_small = 0.25 * (d - 1) ** 2 * b * b * (g2 - g1 * g1)
    E = d * m
    V = 2.0 * d * (v_small + m * m) + d * d * v_small
    return RexMoments(m=m, v_small=v_small, E=E, V=V)


def expected_k(d, p=None, log_p=None) -> float:
    return rex_moments(d, p=p, log_p=log_p).E


def k_ratio(d, p=None, log_p=None) -> float:
    """(log p)^2 / d, the quantity separating the Gaussian limit regimes."""
    dims = ProblemDims.of(d, p=p, log_p=log_p)
    return dims.log_p**2 / d


def classify_k_regime(d, p=None, log_p=None, fixed_d: bool = False,
                      upper: float = 100.0, lower: float = 0.01) -> KLimitRegime:
    """Pick the limit law of K_{p,d}.

    The cutoffs are working heuristics; the theory only distinguishes the
    limits (log p)^2/d -> inf, -> c, -> 0.
    """
    if fixed_d:
        return KLimitRegime(KRegime.FIXED_D)
    r = k_ratio(d, p=p, log_p=log_p)
    if r > upper:
        return KLimitRegime(KRegime.NORM_DOMINATED)
    if r < lower:
        return KLimitRegime(KRegime.MAX_DOMINATED)
    return KLimitRegime(KRegime.MIXTURE, c=r)


def k_standardize(k, d, regime: KLimitRegime, p=None, log_p=None):
    """Map raw K values into the coordinate in which `regime` states its limit."""
    k = np.asarray(k, dtype=float)
    if regime.tag is KRegime.FIXED_D:
        return k
    const = std_constants(_dims(d, p, log_p))
    if regime.tag is KRegime.MAX_DOMINATED:
        return (k - d * const.a) / (d * const.b)
    return (k - d * const.a) / (math.sqrt(2.0 * d) * const.a)


# Composite 5-point Gauss-Legendre, 80 panels per window.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_PANELS = 80


def _composite_rule(lo, hi, density):
    edges = np.linspace(lo, hi, _PANELS + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    return nodes, weights * density(nodes)


# Gumbel window [-10, 25] and Gaussian window [-9, 9]; mass outside is < 1e-10.
_H_NODES, _H_WEIGHTS = _composite_rule(-10.0, 25.0, gumbel_pdf)
_G_NODES, _G_WEIGHTS = _composite_rule(-9.0, 9.0, lambda g: np.exp(-0.5 * g * g) / math.sqrt(2.0 * math.pi))


def mixture_cdf(x, c: float):
    """CDF of G + H / sqrt(2c) with G ~ N(0,1) and H ~ Gumbel(0,1) independent.

    Integrates over whichever variable leaves the smoother integrand: against
    the Gumbel density when c >= 1/2, otherwise against the Gaussian density
    (for small c the Gaussian CDF term would be a near-step in h).
    """
    if not c > 0:
        raise DomainError(f"mixture ratio c must be positive, got {c!r}")
    x = np.asarray(x, dtype=float)
    s = math.sqrt(2.0 * c)
    if c >= 0.5:
        vals = gauss_cdf(x[..., None] - _H_NODES / s) @ _H_WEIGHTS
    else:
        vals = gumbel_cdf(s * (x[..., None] - _G_NODES)) @ _G_WEIGHTS
    return vals if vals.ndim else float(vals)


def k_limit_cdf(x, regime: KLimitRegime, d=None):
    """Limit CDF of K_{p,d} in its regime-specific coordinate (see k_standardize).

    FIXED_D works on the raw K scale and needs the integer rank d.
    """
    if regime.tag is KRegime.FIXED_D:
        if d is None or int(d) != d or d < 1:
            raise ValueError("FIXED_D limit needs an integer rank d >= 1")
        return chi2_cdf(x, int(d))
    if regime.tag is KRegime.NORM_DOMINATED:
        return gauss_cdf(x)
    if regime.tag is KRegime.MAX_DOMINATED:
        return gumbel_cdf(x)
    return mixture_cdf(x, regime.c)
