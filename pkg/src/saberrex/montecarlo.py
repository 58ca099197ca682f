"""Samplers, the factor-model generator and the simulation harness.

Replicate i of a run with master seed s draws from its own stream
SeedSequence(s, spawn_key=(i,)), so results do not depend on how replicates
are scheduled across threads.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import betainccinv

from .detect import D_CAP, detect
from .specfun import chi2_cdf

__all__ = [
    "FactorModelParams",
    "ExperimentConfig",
    "ReplicateRecord",
    "SimulationReport",
    "replicate_rng",
    "sample_sphere",
    "sample_max_inner",
    "sample_msq",
    "generate_dataset",
    "run_replicate",
    "simulate",
    "summarize",
    "run_experiment",
    "ks_distance",
    "prop1_diagnostic",
]

# Largest number of variates materialized at once by the streaming sampler.
_CHUNK = 1 << 21


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_sphere(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform unit vector(s) in R^d by normalizing standard Gaussians."""
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _msq_vectors(p, d, reps, rng):
    """Brute force: draw L (p x d) and Z per replicate, return (M^2, ||Z||^2)."""
    msq = np.empty(reps)
    zsq = np.empty(reps)
    for r in range(reps):
        L = sample_sphere(d, rng, size=p)
        z = rng.standard_normal(d)
        zsq[r] = z @ z
        u = z / math.sqrt(zsq[r])
        msq[r] = np.max(np.abs(L @ u)) ** 2
    return msq, zsq


def _msq_stream(p, d, reps, rng):
    """Running maximum of p i.i.d. Beta(1/2, (d-1)/2) draws, in bounded chunks."""
    out = np.zeros(reps)
    b = 0.5 * (d - 1)
    if p >= _CHUNK:
        for r in range(reps):
            best = 0.0
            left = p
            while left:
                m = min(left, _CHUNK)
                best = max(best, rng.beta(0.5, b, size=m).max())
                left -= m
            out[r] = best
        return out
    per = max(1, _CHUNK // p)
    for start in range(0, reps, per):
        stop = min(reps, start + per)
        out[start:stop] = rng.beta(0.5, b, size=(stop - start, p)).max(axis=1)
    return out


def _msq_inverse(p, d, reps, rng):
    """Exact draw of the maximum through its CDF I_w(1/2,(d-1)/2)^p."""
    u = rng.random(reps)
    tail = -np.expm1(np.log(u) / p)
    return betainccinv(0.5, 0.5 * (d - 1), tail)


def sample_msq(p: int, d: int, rng: np.random.Generator, size: int = 1,
               method: str = "auto") -> np.ndarray:
    """Draws of M^2_{p,d} = max_j <L_j, U>^2 with L_j i.i.d. uniform.

    method: "vectors" (explicit unit vectors), "stream" (i.i.d. Beta maxima,
    memory-bounded), "inverse" (order-statistic inversion), or "auto".
    """
    if d == 1:
        return np.ones(size)
    if method == "auto":
        method = "vectors" if p * d <= 200_000 else "stream"
    if method == "vectors":
        return _msq_vectors(p, d, size, rng)[0]
    if method == "stream":
        return _msq_stream(p, d, size, rng)
    if method == "inverse":
        return _msq_inverse(p, d, size, rng)
    raise ValueError(f"unknown sampling method {method!r}")


def sample_max_inner(p: int, d: int, rng: np.random.Generator, size: int | None = None,
                     method: str = "auto"):
    """(M, K) with M = max_j |<L_j, U>| and K = max_j <L_j, Z>^2 = ||Z||^2 M^2."""
    n = 1 if size is None else size
    if method == "auto":
        method = "vectors" if p * d <= 200_000 else "stream"
    if method == "vectors" and d > 1:
        msq, zsq = _msq_vectors(p, d, n, rng)
    else:
        msq = sample_msq(p, d, rng, size=n, method=method)
        zsq = rng.chisquare(d, size=n)
    M = np.sqrt(msq)
    K = zsq * msq
    if size is None:
        return float(M[0]), float(K[0])
    return M, K


@dataclass(frozen=True)
class FactorModelParams:
    """W = 1 mu^T + tau Z L + sigma G with Z (n x d), L (d x p) unit columns, G noise."""

    n: int
    p: int
    d: int
    mu: tuple | None = None
    tau: float = 1.0
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 2 or self.d < 1:
            raise ValueError(f"need n >= 1, p >= 2, d >= 1; got {(self.n, self.p, self.d)}")
        if not self.tau > 0 or not self.sigma >= 0:
            raise ValueError("need tau > 0 and sigma >= 0")
        if self.mu is not None and len(self.mu) != self.p:
            raise ValueError("mu must have length p")

    @classmethod
    def noiseless(cls, n, p, d, seed=0):
        return cls(n=n, p=p, d=d, seed=seed)

    @classmethod
    def equal_variance(cls, n, p, d, seed=0, tau=2.0):
        """Noise sd (n/p)^{1/4} and means on an even grid from -5 to 5."""
        mu = tuple(np.linspace(-5.0, 5.0, p))
        return cls(n=n, p=p, d=d, mu=mu, tau=tau, sigma=(n / p) ** 0.25, seed=seed)

    @property
    def mean_vector(self) -> np.ndarray:
        return np.zeros(self.p) if self.mu is None else np.asarray(self.mu, dtype=float)


def generate_dataset(params: FactorModelParams, rng: np.random.Generator,
                     loadings: np.ndarray | None = None) -> np.ndarray:
    """One n x p data matrix; loadings (d x p) are redrawn unless supplied."""
    L = sample_sphere(params.d, rng, size=params.p).T if loadings is None else loadings
    Z = rng.standard_normal((params.n, params.d))
    W = params.tau * (Z @ L)
    if params.sigma > 0:
        W += params.sigma * rng.standard_normal((params.n, params.p))
    if params.mu is not None:
        W += params.mean_vector
    return W


@dataclass(frozen=True)
class ExperimentConfig:
    params: FactorModelParams
    replicates: int = 1000
    alpha: float = 0.05
    noiseless: bool = True
    d_cap: int = D_CAP

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("need at least one replicate")


@dataclass(frozen=True)
class ReplicateRecord:
    replicate: int
    d_hat_real: float
    d_hat: int
    ci_upper: int | None
    est_solved: bool
    ci_solved: bool
    ci_upper_real: float | None = None


@dataclass(frozen=True)
class SimulationReport:
    n: int
    p: int
    d: int
    replicates: int
    alpha: float
    noiseless: bool
    seed: int
    mse: float
    coverage: float
    mean_upper: float | None
    median_upper: float | None
    unsolved_ci_count: int
    unsolved_est_count: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def run_replicate(cfg: ExperimentConfig, index: int) -> ReplicateRecord:
    rng = replicate_rng(cfg.params.seed, index)
    W = generate_dataset(cfg.params, rng)
    res = detect(W, pre_standardized=cfg.noiseless, alpha=cfg.alpha, d_cap=cfg.d_cap)
    return ReplicateRecord(index, res.d_hat_real, res.d_hat, res.ci_upper,
                           res.estimate_solved, res.ci_solved, res.ci_upper_real)


def simulate(cfg: ExperimentConfig, threads: int = 1) -> list[ReplicateRecord]:
    """All replicate records in replicate order, whatever the thread count."""
    if threads <= 1:
        return [run_replicate(cfg, i) for i in range(cfg.replicates)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_replicate(cfg, i), range(cfg.replicates)))


def summarize(cfg: ExperimentConfig, records: list[ReplicateRecord]) -> SimulationReport:
    """Table-style summary.

    Unsolved estimates enter the MSE at their bracket edge. Unsolved intervals
    count as not covering and are left out of the bound averages, which use
    the continuous solution of the interval inequality.
    """
    d = cfg.params.d
    d_hat = np.array([r.d_hat for r in records], dtype=float)
    uppers = np.array([r.ci_upper_real for r in records if r.ci_solved], dtype=float)
    covered = sum(1 for r in records if r.ci_solved and r.ci_upper >= d)
    N = len(records)
    return SimulationReport(
        n=cfg.params.n,
        p=cfg.params.p,
        d=d,
        replicates=N,
        alpha=cfg.alpha,
        noiseless=cfg.noiseless,
        seed=cfg.params.seed,
        mse=float(np.mean((d - d_hat) ** 2)),
        coverage=covered / N,
        mean_upper=float(uppers.mean()) if uppers.size else None,
        median_upper=float(np.median(uppers)) if uppers.size else None,
        unsolved_ci_count=sum(1 for r in records if not r.ci_solved),
        unsolved_est_count=sum(1 for r in records if not r.est_solved),
    )


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> SimulationReport:
    return summarize(cfg, simulate(cfg, threads=threads))


def ks_distance(sample, cdf) -> float:
    """Kolmogorov-Smirnov sup-distance between a sample and a reference CDF."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def prop1_diagnostic(p: int, d: int, replicates: int, rng: np.random.Generator,
                     method: str = "auto") -> float:
    """KS distance between max_j X_j^2 (i.i.d. uniform loadings) and chi-square_d.

    Small values indicate the dense regime in which the chi-square_d limit applies.
    """
    if math.log(p) < d:
        warnings.warn(f"log p = {math.log(p):.2f} < d = {d}; chi-square limit not expected",
                      stacklevel=2)
    _, K = sample_max_inner(p, d, rng, size=replicates, method=method)
    return ks_distance(K, lambda x: chi2_cdf(x, d))
