import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sociality import distributions as dist

# values frozen from mpmath at 30 digits
PHI_1_959964 = 0.975000000903557598
DIGAMMA_10 = 2.25175258906672110765
TN_MEAN = {  # (location, positive side) -> mean of the unit-variance truncated normal
    (0.0, True): 0.797884560802865356,
    (0.0, False): -0.797884560802865356,
    (5.0, False): -0.186503967125842116,
    (-1.0, False): -1.28759997093917836,
    (-3.0, True): 0.283098654930436507,
    (-10.0, True): 0.0980932339625119641,
    (10.0, True): 10.0,
    # at |m| = 40 plain quadrature misses the mass squeezed against zero;
    # these two come from phi(m)/Phi(m) at 40 digits
    (-40.0, True): 0.0249688472072637232,
    (40.0, False): -0.0249688472072637232,
}


def _mp_tn(m, positive):
    pts = [0, 0.01, 0.1, 1, 4, 10, mp.inf]
    if not positive:
        pts = [-p for p in reversed(pts)]
    mass = mp.quad(lambda z: mp.npdf(z, m, 1), pts)
    mean = mp.quad(lambda z: z * mp.npdf(z, m, 1), pts) / mass
    var = mp.quad(lambda z: (z - mean) ** 2 * mp.npdf(z, m, 1), pts) / mass
    ent = -mp.quad(lambda z: mp.npdf(z, m, 1) / mass * mp.log(mp.npdf(z, m, 1) / mass), pts)
    return float(mean), float(var), float(ent)


def test_normal_functions():
    assert dist.Phi(0.0) == 0.5
    assert dist.phi(0.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    assert dist.Phi(1.959964) == pytest.approx(PHI_1_959964, abs=1e-12)
    assert dist.Phi_inv(0.975) == pytest.approx(1.959963984540054, abs=1e-12)
    assert dist.Phi(40.0) == 1.0 and dist.Phi(-40.0) == 0.0


@pytest.mark.parametrize("x", [-8, -3.3, -1, 0.25, 2, 7.9])
def test_Phi_against_mpmath(x):
    assert dist.Phi(x) == pytest.approx(float(mp.ncdf(x)), abs=1e-12)


@pytest.mark.parametrize("x", [-38.0, -20.0, -5.0])
def test_log_Phi_deep_tail(x):
    assert dist.log_Phi(x) == pytest.approx(float(mp.log(mp.ncdf(x))), rel=1e-10)


def test_gamma_functions():
    assert dist.lgamma(1.0) == 0.0
    assert dist.digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)
    assert dist.digamma(10.0) == pytest.approx(DIGAMMA_10, abs=1e-12)
    for x in (1e-3, 0.5, 3.7, 1e6):
        assert dist.lgamma(x) == pytest.approx(float(mp.loggamma(x)), abs=1e-10)
        assert dist.digamma(x) == pytest.approx(float(mp.digamma(x)), abs=1e-10)
    with pytest.raises(ValueError):
        dist.lgamma(0.0)
    with pytest.raises(ValueError):
        dist.digamma(-1.0)


@pytest.mark.parametrize("key", sorted(TN_MEAN))
def test_truncnorm_mean_frozen(key):
    m, positive = key
    assert dist.truncnorm_mean(m, positive) == pytest.approx(TN_MEAN[key], abs=1e-12)


@pytest.mark.parametrize("m,positive", [(0.3, True), (-2.5, True), (1.7, False), (-6.0, True)])
def test_truncnorm_moments_against_quadrature(m, positive):
    mean, var, ent = _mp_tn(m, positive)
    em, ev, eh = dist.truncnorm_moments(m, positive)
    assert em == pytest.approx(mean, abs=1e-10)
    assert ev == pytest.approx(var, abs=1e-9)
    assert eh == pytest.approx(ent, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(m=st.floats(-30, 30), positive=st.booleans())
def test_truncnorm_mean_on_the_right_side(m, positive):
    e = dist.truncnorm_mean(m, positive)
    assert np.isfinite(e)
    assert e > 0 if positive else e < 0
    # truncation pulls the mean towards the kept side
    assert e >= m if positive else e <= m


def test_truncnorm_sampler_means():
    rng = dist.make_rng(11)
    x = dist.sample_truncnorm(0.0, 1.0, 0.0, np.inf, rng, size=10**6)
    assert abs(x.mean() - math.sqrt(2 / math.pi)) < 0.003
    x = dist.sample_truncnorm(0.0, 1.0, -np.inf, 0.0, rng, size=10**6)
    assert abs(x.mean() + math.sqrt(2 / math.pi)) < 0.003
    x = dist.sample_truncnorm(-10.0, 1.0, 0.0, np.inf, rng, size=10**6)
    assert (x > 0).all()
    assert abs(x.mean() - TN_MEAN[(-10.0, True)]) < 0.002


@pytest.mark.parametrize("mean,sd,lo,hi", [
    (0.0, 1.0, -0.5, 1.5),
    (2.0, 0.5, -np.inf, 1.0),     # lower tail of a shifted normal
    (-7.0, 1.0, 0.0, np.inf),     # exponential rejection branch
    (0.0, 2.0, 9.0, 12.0),        # two-sided tail window
    (1.0, 1.0, 0.9, 1.1),         # narrow interval
])
def test_truncnorm_sampler_ks(mean, sd, lo, hi):
    rng = dist.make_rng(5)
    x = dist.sample_truncnorm(mean, sd, lo, hi, rng, size=20000)
    a, b = (lo - mean) / sd, (hi - mean) / sd
    p = stats.kstest(x, stats.truncnorm(a, b, loc=mean, scale=sd).cdf).pvalue
    assert p > 0.01
    assert (x >= lo).all() and (x <= hi).all()


def test_truncnorm_bad_arguments():
    rng = dist.make_rng(0)
    with pytest.raises(ValueError):
        dist.sample_truncnorm(0.0, 1.0, 1.0, 1.0, rng)
    with pytest.raises(ValueError):
        dist.sample_truncnorm(0.0, 0.0, 0.0, 1.0, rng)


def test_probit_latent_signs():
    rng = dist.make_rng(2)
    eta = np.linspace(-12, 12, 501)
    y = np.tile([1, 0, -1], 167)
    z = dist.sample_probit_latent(eta, y, rng)
    assert (z[y == 1] > 0).all()
    assert (z[y == 0] <= 0).all()
    assert np.isfinite(z).all()


def test_invgamma_means():
    rng = dist.make_rng(3)
    assert dist.sample_invgamma(3.0, 2.0, rng, size=400_000).mean() == pytest.approx(1.0, abs=0.01)
    assert dist.sample_invgamma(2.0, 1 / 3, rng, size=400_000).mean() == pytest.approx(1 / 3, abs=0.01)
    x = dist.sample_invgamma(1e6, 1e6, rng, size=1000)
    assert np.abs(x - 1).max() < 0.01
    p = stats.kstest(dist.sample_invgamma(2.5, 0.7, rng, size=20000),
                     stats.invgamma(2.5, scale=0.7).cdf).pvalue
    assert p > 0.01
    with pytest.raises(ValueError):
        dist.sample_invgamma(0.0, 1.0, rng)
    with pytest.raises(ValueError):
        dist.sample_invgamma(1.0, -1.0, rng)


def test_dirichlet_and_log_dirichlet():
    rng = dist.make_rng(4)
    alpha = np.array([0.5, 1.0, 3.0])
    x = np.array([dist.sample_dirichlet(alpha, rng) for _ in range(20000)])
    np.testing.assert_allclose(x.mean(axis=0), alpha / alpha.sum(), atol=0.01)
    lx = np.array([dist.sample_log_dirichlet(alpha, rng) for _ in range(20000)])
    np.testing.assert_allclose(np.exp(lx).sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.exp(lx).mean(axis=0), alpha / alpha.sum(), atol=0.01)
    tiny = dist.sample_log_dirichlet(np.full(5, 1e-4), rng)
    assert np.isfinite(tiny).all()


def test_categorical_log():
    rng = dist.make_rng(6)
    logp = np.log([0.2, 0.5, 0.3]) + 700.0  # would overflow without shifting
    counts = np.bincount([dist.sample_categorical_log(logp, rng) for _ in range(30000)],
                         minlength=3)
    assert stats.chisquare(counts, 30000 * np.array([0.2, 0.5, 0.3])).pvalue > 0.01


def test_rng_streams_reproducible():
    a = dist.make_rng(123).standard_normal(5)
    b = dist.make_rng(123).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    s1 = [r.random() for r in dist.spawn_rngs(9, 3)]
    s2 = [r.random() for r in dist.spawn_rngs(9, 3)]
    assert s1 == s2 and len(set(s1)) == 3
    g = dist.make_rng(0)
    assert dist.make_rng(g) is g
