"""Spherical-cap packing bounds, rank-extreme asymptotics and ReX low-rank detection."""

__version__ = "0.1.0"

from .detect import DetectionResult, estimate_rank, rank_ci_upper, row_maxima, standardize
from .packing import ProblemDims, StdConstants, msq_limit_cdf, msq_limit_quantile, saber, sabre, std_constants
from .rex import NormLaw, RexMoments, classify_k_regime, k_limit_cdf, rex_bound, rex_moments

__all__ = [
    "DetectionResult",
    "NormLaw",
    "ProblemDims",
    "RexMoments",
    "StdConstants",
    "classify_k_regime",
    "estimate_rank",
    "k_limit_cdf",
    "msq_limit_cdf",
    "msq_limit_quantile",
    "rank_ci_upper",
    "rex_bound",
    "rex_moments",
    "row_maxima",
    "saber",
    "sabre",
    "standardize",
    "std_constants",
]
