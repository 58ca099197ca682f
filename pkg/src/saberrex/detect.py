"""ReX low-rank detection from row maxima of an n x p data matrix.

Each row maximum max_j W_ij^2 is treated as a draw of K_{p,d}; the rank is
recovered by matching the sample mean against E_{p,d}, and a left-sided
confidence bound comes from inverting the delta-method tail statement.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .rex import rex_moments
from .specfun import DomainError, gauss_quantile

__all__ = [
    "DegenerateDataError",
    "DataMatrix",
    "RowMaxima",
    "DetectionResult",
    "as_data_matrix",
    "row_maxima",
    "estimate_rank",
    "ci_threshold",
    "rank_ci_upper",
    "rank_ci_upper_real",
    "standardize",
    "detect",
    "D_CAP",
]

D_CAP = 10**6
_D_TOL = 1e-6


class DegenerateDataError(ValueError):
    """Data cannot be centered or scaled (a single row, or zero spread)."""


@dataclass(frozen=True)
class DataMatrix:
    """n observations (rows) of p variables (columns), C-contiguous float64."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"data matrix must be 2-D with at least one row, got shape {v.shape}")
        if v.shape[1] < 2:
            raise ValueError("data matrix needs at least two columns")
        if not np.all(np.isfinite(v)):
            raise ValueError("data matrix contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def as_data_matrix(W) -> DataMatrix:
    return W if isinstance(W, DataMatrix) else DataMatrix(W)


@dataclass(frozen=True)
class RowMaxima:
    k: np.ndarray
    p: int

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def mean(self) -> float:
        return float(np.mean(self.k))


@dataclass(frozen=True)
class DetectionResult:
    d_hat_real: float
    d_hat: int
    ci_upper: int | None
    ci_upper_real: float | None
    alpha: float
    estimate_solved: bool
    ci_solved: bool
    k_bar: float
    scale: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def row_maxima(W) -> RowMaxima:
    """Largest squared entry of each row."""
    W = as_data_matrix(W)
    k = np.max(np.abs(W.values), axis=1) ** 2
    return RowMaxima(k=k, p=W.p)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def estimate_rank(km: RowMaxima, d_cap: int = D_CAP) -> tuple[float, int, bool]:
    """Solve mean(K) = E_{p,d} for d.

    Returns (continuous root, rounded root, solved). When no root exists the
    nearest bracket edge (2 or d_cap) is returned with solved=False.
    """
    k_bar = km.mean
    if not k_bar > 0:
        raise DomainError(f"mean row maximum must be positive, got {k_bar!r}")

    def E(d):
        return rex_moments(d, p=km.p).E

    if k_bar < E(2.0):
        return 2.0, 2, False
    lo, hi = 2.0, 4.0
    while E(hi) < k_bar:
        if hi >= d_cap:
            return float(d_cap), int(d_cap), False
        lo, hi = hi, min(2.0 * hi, float(d_cap))
    while hi - lo > _D_TOL:
        mid = 0.5 * (lo + hi)
        if E(mid) < k_bar:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return root, _round_half_up(root), True


def ci_threshold(d, p: int, n: int, alpha: float) -> float:
    """Level that mean(K) exceeds with probability about 1 - alpha when the rank is d."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    mom = rex_moments(d, p=p)
    z = gauss_quantile(alpha)
    # (z sqrt(V/(4nE)) + sqrt(E))^2 expanded, so that z = 0 gives E exactly
    return mom.E + z * math.sqrt(mom.V / n) + z * z * mom.V / (4.0 * n * mom.E)


def rank_ci_upper(km: RowMaxima, alpha: float, d_cap: int = D_CAP) -> tuple[int | None, bool]:
    """Largest integer d with mean(K) >= ci_threshold(d); (None, False) if even d = 2 fails.

    The threshold is assumed increasing in d and checked at every probe.
    """
    upper, _, ok = _ci_solve(km, alpha, d_cap)
    return upper, ok


def rank_ci_upper_real(km: RowMaxima, alpha: float, d_cap: int = D_CAP) -> float | None:
    """Continuous solution of mean(K) = ci_threshold(d); None when unsolvable."""
    return _ci_solve(km, alpha, d_cap)[1]


def _ci_solve(km, alpha, d_cap):
    k_bar = km.mean

    def thr(d):
        return ci_threshold(d, km.p, km.n, alpha)

    t_lo = thr(2)
    if k_bar < t_lo:
        return None, None, False
    t_cap = thr(d_cap)
    if k_bar >= t_cap:
        return int(d_cap), float(d_cap), True
    lo, hi = 2, d_cap          # thr(lo) <= k_bar < thr(hi)
    t_hi = t_cap
    while hi - lo > 1:
        mid = (lo + hi) // 2
        t_mid = thr(mid)
        if not t_lo < t_mid < t_hi:
            raise RuntimeError(
                f"confidence threshold not increasing in d near d={mid} (p={km.p}, n={km.n})"
            )
        if k_bar >= t_mid:
            lo, t_lo = mid, t_mid
        else:
            hi, t_hi = mid, t_mid
    # refine inside [lo, lo + 1) on the continuous extension
    a, b = float(lo), float(hi)
    while b - a > _D_TOL:
        mid = 0.5 * (a + b)
        if k_bar >= thr(mid):
            a = mid
        else:
            b = mid
    return lo, a, True


def standardize(W) -> tuple[np.ndarray, float]:
    """Center columns, then divide by the sample sd of all centered entries pooled."""
    W = as_data_matrix(W)
    if W.n < 2:
        raise DegenerateDataError("standardization needs at least two rows")
    W0 = W.values - W.values.mean(axis=0)
    s = float(np.std(W0, ddof=1))
    if not s > 0:
        raise DegenerateDataError("data have zero spread after centering")
    return W0 / s, s


def detect(W, pre_standardized: bool = False, alpha: float = 0.05,
           d_cap: int = D_CAP) -> DetectionResult:
    """Rank estimate and (1 - alpha) upper confidence bound for the factor rank."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    scale = None
    if pre_standardized:
        Ws = as_data_matrix(W)
    else:
        values, scale = standardize(W)
        Ws = DataMatrix(values)
    km = row_maxima(Ws)
    d_real, d_hat, est_ok = estimate_rank(km, d_cap=d_cap)
    upper, upper_real, ci_ok = _ci_solve(km, alpha, d_cap)
    return DetectionResult(
        d_hat_real=d_real,
        d_hat=d_hat,
        ci_upper=upper,
        ci_upper_real=upper_real,
        alpha=alpha,
        estimate_solved=est_ok,
        ci_solved=ci_ok,
        k_bar=km.mean,
        scale=scale,
    )
