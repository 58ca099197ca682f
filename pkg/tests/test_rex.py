import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm
from hypothesis import given
from hypothesis import strategies as st

from saberrex.montecarlo import replicate_rng, sample_max_inner, sample_sphere
from saberrex.packing import ProblemDims, saber, std_constants
from saberrex.rex import (
    KLimitRegime,
    KRegime,
    NormLaw,
    classify_k_regime,
    expected_k,
    highrank_bound_check,
    highrank_quantity,
    k_limit_cdf,
    k_standardize,
    mixture_cdf,
    rex_bound,
    rex_moments,
    rex_phase_ratio,
)
from saberrex.specfun import DomainError, chi2_cdf, gauss_cdf, gumbel_cdf

# --- ReX bound -------------------------------------------------------------


def test_rex_bound_composition():
    assert rex_bound(11, p=8000) == pytest.approx(math.sqrt(11) * saber(ProblemDims(11, p=8000)), rel=1e-15)


def test_rex_bound_rejects_small_inputs():
    with pytest.raises(DomainError):
        rex_bound(11, p=1)
    with pytest.raises(DomainError):
        rex_bound(1, p=100)


def test_rex_bound_critical_path():
    d = 10**6
    v = rex_bound(d, log_p=float(d))
    assert v == pytest.approx(math.sqrt(d * (1 - math.exp(-2))), rel=1e-5)


@given(st.integers(min_value=2, max_value=10**5), st.integers(min_value=2, max_value=10**9))
def test_rex_bound_squared(d, p):
    v = rex_bound(d, p=p)
    with mp.workdps(40):
        ref = float(d * (1 - mp.mpf(p) ** (-mp.mpf(2) / (d - 1))))
    assert v * v == pytest.approx(ref, rel=1e-14)


def test_rex_bound_custom_law():
    law = NormLaw(u=7.0, v=2.0)
    assert rex_bound(5, p=100, law=law) == pytest.approx(math.sqrt(7 * (1 - 100 ** -0.5)), rel=1e-14)
    g = NormLaw.gaussian(9)
    assert (g.u, g.v) == (9.0, math.sqrt(18.0))
    with pytest.raises(DomainError):
        NormLaw(u=0.0, v=1.0)


def test_highrank_check():
    assert highrank_bound_check(10**6, p=10**6)
    assert not highrank_bound_check(2, p=10**6)
    assert not highrank_bound_check(10**6, p=10**6, threshold=math.inf)
    assert highrank_quantity(100, p=10**6) == pytest.approx(
        math.log(math.log(1e6)) ** 2 * 100 / math.log(1e6) ** 2
    )


def test_phase_ratio():
    betas = np.geomspace(1e-6, 50, 400)
    f = np.array([rex_phase_ratio(b) for b in betas])
    assert np.all(np.diff(f) < 0)
    assert np.all((f > 0) & (f < 2))
    assert rex_phase_ratio(1e-9) == pytest.approx(2.0, rel=1e-8)
    assert rex_phase_ratio(1e6) < 1e-5
    with pytest.raises(DomainError):
        rex_phase_ratio(0.0)


# --- moments ---------------------------------------------------------------


def _moments_oracle(d, p):
    mp.mp.dps = 40
    d, p = mp.mpf(d), mp.mpf(p)
    s = p ** (-2 / (d - 1))
    c = ((d - 1) / 2 * mp.beta(0.5, (d - 1) / 2) * mp.sqrt(1 - s)) ** (2 / (d - 1))
    a, b = 1 - s * c, 2 / (d - 1) * s * c
    g1, g2 = mp.gamma(1 + 2 / (d - 1)), mp.gamma(1 + 4 / (d - 1))
    m = a + (d - 1) / 2 * (1 - g1) * b
    v = (d - 1) ** 2 * b**2 / 4 * (g2 - g1**2)
    return float(m), float(v), float(d * m), float(2 * d * (v + m * m) + d * d * v)


@pytest.mark.parametrize("d,p", [(11, 8000), (16, 8000), (2, 100), (200, 10**5), (3, 10**3)])
def test_moments_oracle(d, p):
    mom = rex_moments(d, p=p)
    for got, ref in zip((mom.m, mom.v_small, mom.E, mom.V), _moments_oracle(d, p)):
        assert got == pytest.approx(ref, rel=1e-11)


@given(st.floats(min_value=2.0, max_value=1e4), st.integers(min_value=2, max_value=10**7))
def test_moments_invariants(d, p):
    mom = rex_moments(d, p=p)
    assert 0 < mom.m < 1
    assert mom.v_small >= 0
    assert mom.E == d * mom.m
    assert mom.V == pytest.approx(2 * d * (mom.v_small + mom.m**2) + d * d * mom.v_small, rel=1e-15)
    assert mom.V > 0


@pytest.mark.parametrize("p", [100, 1000, 8000, 10**5, 10**7])
def test_expected_k_increasing_in_d(p):
    d = np.unique(np.concatenate([np.linspace(2, 50, 500), np.geomspace(50, 1e4, 500)]))
    E = np.array([expected_k(x, p=p) for x in d])
    assert np.all(np.diff(E) > 0)


def test_moments_fixed_d_large_p():
    for d in (3, 11, 40):
        mom = rex_moments(d, log_p=1e4)
        assert mom.m == pytest.approx(1.0, abs=1e-6)
        assert mom.E == pytest.approx(d, rel=1e-6)


def test_moments_match_monte_carlo_quick():
    # smaller version of the acceptance check, exact sampler
    _, K = sample_max_inner(8000, 11, replicate_rng(5, 0), size=40_000, method="inverse")
    mom = rex_moments(11, p=8000)
    se = K.std() / math.sqrt(len(K))
    assert abs(K.mean() - mom.E) < 4 * se + 0.01 * mom.E
    assert abs(K.var() / mom.V - 1) < 0.08


# --- regimes and limit laws ------------------------------------------------


def test_classify_examples():
    assert classify_k_regime(5, p=100, fixed_d=True).tag is KRegime.FIXED_D
    r = classify_k_regime(2 * math.log(1e6) ** 2, p=10**6)
    assert r.tag is KRegime.MIXTURE and r.c == pytest.approx(0.5, rel=1e-12)
    r = classify_k_regime(10**6, p=100)
    assert r.tag is KRegime.MAX_DOMINATED
    assert classify_k_regime(2, p=10**9).tag is KRegime.NORM_DOMINATED
    # cutoffs are configuration
    assert classify_k_regime(10**6, p=100, lower=1e-6).tag is KRegime.MIXTURE


def test_regime_validation():
    with pytest.raises(DomainError):
        KLimitRegime(KRegime.MIXTURE)
    with pytest.raises(DomainError):
        KLimitRegime(KRegime.FIXED_D, c=1.0)
    with pytest.raises(DomainError):
        KLimitRegime(KRegime.MIXTURE, c=-1.0)
    with pytest.raises(ValueError):
        k_limit_cdf(3.0, KLimitRegime(KRegime.FIXED_D))
    with pytest.raises(ValueError):
        k_limit_cdf(3.0, KLimitRegime(KRegime.FIXED_D), d=2.5)


def test_limit_cdf_delegation():
    x = np.array([0.5, 3.0, 11.0])
    assert np.allclose(k_limit_cdf(x, KLimitRegime(KRegime.FIXED_D), d=11), chi2_cdf(x, 11))
    assert k_limit_cdf(0.0, KLimitRegime(KRegime.MAX_DOMINATED)) == pytest.approx(math.exp(-1))
    assert k_limit_cdf(1.2, KLimitRegime(KRegime.NORM_DOMINATED)) == pytest.approx(gauss_cdf(1.2))


def test_mixture_large_c_is_gaussian():
    x = np.linspace(-4, 4, 81)
    assert np.max(np.abs(mixture_cdf(x, 1e8) - gauss_cdf(x))) < 1e-3


def test_mixture_vs_quadrature_oracle():
    # adaptive quadrature over the whole line, independent of the fixed rule
    for c in (0.05, 0.5, 3.0):
        s = math.sqrt(2 * c)
        for x in (-2.0, 0.0, 0.7, 3.0):
            f = lambda h: norm.cdf(x - h / s) * math.exp(-h - math.exp(-h))
            ref = sum(quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12)[0]
                      for lo, hi in [(-np.inf, -3), (-3, 0), (0, 5), (5, np.inf)])
            assert abs(mixture_cdf(x, c) - ref) < 1e-6


def test_mixture_small_c_approaches_scaled_gumbel():
    # G is negligible next to H / sqrt(2c) when c -> 0
    c = 1e-6
    s = math.sqrt(2 * c)
    for h in (-1.0, 0.0, 2.0):
        assert mixture_cdf(h / s, c) == pytest.approx(gumbel_cdf(h), abs=2e-3)


@given(st.floats(min_value=1e-8, max_value=1e6))
def test_mixture_is_a_cdf(c):
    w = 1 / math.sqrt(2 * c)  # scale of the Gumbel part
    x = np.linspace(-10 - 4 * w, 10 + 25 * w, 401)
    F = mixture_cdf(x, c)
    assert np.all(np.diff(F) >= -1e-12)
    assert F[0] < 1e-6 and F[-1] > 1 - 1e-6
    assert np.all((F >= -1e-12) & (F <= 1 + 1e-12))


def test_k_standardize():
    d, p = 50, 10**5
    k = std_constants(ProblemDims(d, p=p))
    x = np.array([30.0, 50.0])
    reg = KLimitRegime(KRegime.MAX_DOMINATED)
    assert np.allclose(k_standardize(x, d, reg, p=p), (x - d * k.a) / (d * k.b))
    reg = KLimitRegime(KRegime.NORM_DOMINATED)
    assert np.allclose(k_standardize(x, d, reg, p=p), (x - d * k.a) / (math.sqrt(2 * d) * k.a))
    assert np.array_equal(k_standardize(x, d, KLimitRegime(KRegime.FIXED_D), p=p), x)


def test_fixed_d_limit_in_dense_regime():
    # log p >> d: K approaches chi-square_d
    _, K = sample_max_inner(10**6, 3, replicate_rng(2, 0), size=4000, method="inverse")
    x = np.sort(K)
    F = k_limit_cdf(x, KLimitRegime(KRegime.FIXED_D), d=3)
    i = np.arange(1, len(x) + 1)
    ks = max(np.max(i / len(x) - F), np.max(F - (i - 1) / len(x)))
    assert ks < 0.04


# --- decompositions and sharpness ------------------------------------------


def test_norm_decomposition_on_samples():
    rng = np.random.default_rng(8)
    for d, p in [(3, 50), (11, 800), (40, 2000)]:
        L = sample_sphere(d, rng, size=p)
        Z = rng.standard_normal(d)
        lhs = np.max(np.abs(L @ Z))
        nz = np.linalg.norm(Z)
        m = np.max(np.abs(L @ (Z / nz)))
        assert lhs == pytest.approx(nz * m, rel=1e-12)
        assert lhs**2 == pytest.approx(nz**2 * m**2, rel=1e-12)


def test_sample_max_inner_decomposition():
    rng = np.random.default_rng(4)
    M, K = sample_max_inner(500, 7, rng, size=200, method="vectors")
    assert np.all((M >= 0) & (M <= 1))
    assert np.all(K >= 0)


def test_rex_sharpness_concentration():
    """max_j |<L_j, Z>| over the ReX bound, d = 50, p = 1e5, 1e4 replicates.

    The ratio is close to 1 on average but still carries the spread of
    ||Z|| / sqrt(d) (sd about 0.1 at d = 50), so the central 95% lies in a
    band of roughly +-0.2.
    """
    d, p = 50, 10**5
    _, K = sample_max_inner(p, d, replicate_rng(0, 0), size=10_000, method="inverse")
    r = np.sqrt(K) / rex_bound(d, p=p)
    assert 0.9 <= r.mean() <= 1.1
    assert np.mean((r > 0.7) & (r < 1.3)) >= 0.95


def test_rex_sharpness_tightens_with_d():
    p = 10**5
    fracs = []
    for d in (50, 500, 2000):
        _, K = sample_max_inner(p, d, replicate_rng(1, d), size=5000, method="inverse")
        r = np.sqrt(K) / rex_bound(d, p=p)
        fracs.append(np.mean((r > 0.9) & (r < 1.1)))
    assert fracs[0] < fracs[1] < fracs[2]
