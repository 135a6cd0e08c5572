import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sociality import cavi
from sociality.gibbs import Hyperparams
from sociality.network import MISSING, Network

from conftest import random_network
from oracles import single_dyad_elbo

HYPER = Hyperparams()


def _vp(n, **kw):
    d = n * (n - 1) // 2
    base = dict(mu_z=np.zeros(d), loc_z=np.zeros(d), mu_mu=0.0, sigma2_mu=1.0,
                mu_delta=np.zeros(n), sigma2_delta=np.ones(n), alpha_sigma=2.0,
                beta_sigma=1 / 3, alpha_tau=2.0, beta_tau=1 / 3)
    base.update(kw)
    return cavi.VariationalParams(**base)


def test_init():
    net = Network.from_edges(5, [(0, 1), (2, 3)])
    vp = cavi.cavi_init(net, HYPER, seed=3)
    assert vp.alpha_sigma == HYPER.a_sigma and vp.beta_tau == HYPER.b_tau
    assert abs(vp.mu_delta.sum()) < 1e-15
    assert np.abs(vp.mu_z).max() <= 0.01
    again = cavi.cavi_init(net, HYPER, seed=3)
    np.testing.assert_array_equal(vp.mu_z, again.mu_z)
    np.testing.assert_array_equal(vp.mu_delta, again.mu_delta)


def test_update_z_examples():
    net = Network(2, np.array([1], np.int8))
    vp = _vp(2)
    cavi.cavi_update_z(vp, net)
    assert vp.mu_z[0] == pytest.approx(0.7978845608, abs=1e-10)
    vp = _vp(2, mu_mu=10.0)
    assert cavi.cavi_update_z(vp, net, clip=3.0) == 1
    assert vp.mu_z[0] == 3.0
    assert vp.loc_z[0] == 10.0
    vp = _vp(2, mu_mu=-1.0)
    cavi.cavi_update_z(vp, Network(2, np.array([0], np.int8)))
    assert vp.mu_z[0] == pytest.approx(-1.2875999709, abs=1e-9)
    vp = _vp(2, mu_mu=0.7)
    cavi.cavi_update_z(vp, Network(2, np.array([MISSING], np.int8)))
    assert vp.mu_z[0] == 0.7


def test_update_mu_examples():
    net = Network.from_edges(3, [])
    vp = _vp(3, alpha_sigma=1.0, beta_sigma=1.0)
    cavi.cavi_update_mu(vp, net)
    assert vp.sigma2_mu == pytest.approx(0.25)
    assert vp.mu_mu == 0.0
    vp = _vp(2, alpha_sigma=1e12, beta_sigma=1.0, mu_z=np.array([2.0]))
    cavi.cavi_update_mu(vp, Network(2, np.array([1], np.int8)))
    assert abs(vp.mu_mu) < 1e-11


def test_update_delta_examples():
    n = 34
    net = Network(n, np.zeros(n * (n - 1) // 2, np.int8))
    vp = _vp(n, alpha_tau=3.0, beta_tau=1.0)
    cavi.cavi_update_delta(vp, net)
    np.testing.assert_allclose(vp.sigma2_delta, 1 / 36)
    np.testing.assert_array_equal(vp.mu_delta, np.zeros(n))
    rng = np.random.default_rng(0)
    vp = _vp(n, mu_z=rng.normal(size=net.n_dyads))
    cavi.cavi_update_delta(vp, net)
    assert abs(vp.mu_delta.sum()) < 1e-12
    vp = _vp(n, mu_z=rng.normal(size=net.n_dyads))
    cavi.cavi_update_delta(vp, net, scheme="sequential")
    assert abs(vp.mu_delta.sum()) < 1e-12
    with pytest.raises(ValueError):
        cavi.cavi_update_delta(vp, net, recenter=False, scheme="bogus")


def test_block_update_is_the_constrained_maximiser():
    # on the zero-sum set the ELBO is a concave quadratic in mu_delta; the
    # block update must beat every feasible perturbation
    rng = np.random.default_rng(4)
    net = random_network(rng, 8, 0.4)
    vp, _ = cavi.run_cavi(net, HYPER, max_iters=3, seed=1)
    cavi.cavi_update_delta(vp, net)
    best = cavi.elbo(vp, net, HYPER)
    for _ in range(50):
        w = rng.normal(size=8) * 1e-3
        trial = vp.copy()
        trial.mu_delta = vp.mu_delta + (w - w.mean())
        assert cavi.elbo(trial, net, HYPER) <= best + 1e-12


def test_update_variances_examples():
    vp = _vp(34, mu_mu=0.0, sigma2_mu=1.0)
    vp.mu_delta = np.zeros(34)
    vp.sigma2_delta = np.zeros(34)
    cavi.cavi_update_variances(vp, HYPER)
    assert vp.alpha_tau == 19.0
    assert vp.alpha_sigma == 2.5
    assert vp.beta_sigma == pytest.approx(1 / 3 + 1 / 2)
    assert vp.beta_tau == pytest.approx(HYPER.b_tau)


def test_elbo_terms_against_scipy_entropies():
    rng = np.random.default_rng(8)
    net = random_network(rng, 6, 0.5).with_missing([1, 4])
    vp, _ = cavi.run_cavi(net, HYPER, max_iters=4, seed=2)
    t = cavi.elbo_terms(vp, net, HYPER)
    assert t["mu_entropy"] == pytest.approx(stats.norm(0, math.sqrt(vp.sigma2_mu)).entropy(), abs=1e-12)
    assert t["delta_entropy"] == pytest.approx(
        sum(stats.norm(0, math.sqrt(v)).entropy() for v in vp.sigma2_delta), abs=1e-12)
    assert t["sigma2_entropy"] == pytest.approx(
        stats.invgamma(vp.alpha_sigma, scale=vp.beta_sigma).entropy(), abs=1e-9)
    assert t["tau2_entropy"] == pytest.approx(
        stats.invgamma(vp.alpha_tau, scale=vp.beta_tau).entropy(), abs=1e-9)
    obs = net.observed
    # scipy returns nan for an infinite bound; 60 sd away is the same density
    hz = sum(stats.truncnorm(*((-m, 60.0) if y == 1 else (-60.0, -m)), loc=m).entropy()
             for m, y in zip(vp.loc_z[obs], net.y[obs]))
    assert t["z_entropy"] == pytest.approx(hz, abs=1e-9)
    # unit variance: -E log q = (log 2 pi + 1) / 2
    unit = _vp(2)
    assert cavi.elbo_terms(unit, Network(2, np.array([1], np.int8)), HYPER)["mu_entropy"] == \
        pytest.approx(0.5 * (math.log(2 * math.pi) + 1))


def test_missing_dyad_term():
    # with q(z) = N(loc, 1) the expected log-likelihood plus entropy is
    # -((loc - E eta)^2 + Var eta) / 2
    vp = _vp(2, mu_mu=0.3, sigma2_mu=0.2, mu_delta=np.array([0.1, -0.1]),
             sigma2_delta=np.array([0.5, 0.5]), loc_z=np.array([1.1]))
    t = cavi.elbo_terms(vp, Network(2, np.array([MISSING], np.int8)), HYPER)
    assert t["z_loglik"] == 0 and t["z_entropy"] == 0
    assert t["missing"] == pytest.approx(-0.5 * ((1.1 - 0.3) ** 2 + 1.2))


@pytest.mark.parametrize("y", [1, 0])
@pytest.mark.parametrize("state", [
    dict(loc=0.3, mu=-0.2, s_mu=0.4, d=0.15, s_d=0.3, a_s=2.5, b_s=0.6, a_t=3.0, b_t=0.5),
    dict(loc=-1.7, mu=1.1, s_mu=0.05, d=-0.6, s_d=0.9, a_s=2.5, b_s=1.4, a_t=3.0, b_t=0.2),
])
def test_elbo_matches_quadrature_single_dyad(y, state):
    vp = _vp(2, mu_z=np.array([0.0]), loc_z=np.array([state["loc"]]), mu_mu=state["mu"],
             sigma2_mu=state["s_mu"], mu_delta=np.array([state["d"], -state["d"]]),
             sigma2_delta=np.full(2, state["s_d"]), alpha_sigma=state["a_s"],
             beta_sigma=state["b_s"], alpha_tau=state["a_t"], beta_tau=state["b_t"])
    net = Network(2, np.array([y], np.int8))
    assert cavi.elbo(vp, net, HYPER) == pytest.approx(single_dyad_elbo(vp, y, HYPER), abs=1e-6)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.floats(0.1, 0.9), miss=st.integers(0, 5))
def test_elbo_non_decreasing_unclipped(seed, p, miss):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 10, p)
    if miss:
        net = net.with_missing(rng.choice(net.n_dyads, miss, replace=False))
    _, trace = cavi.run_cavi(net, HYPER, tol=1e-12, max_iters=300, seed=seed, clip=math.inf)
    steps = np.diff(trace.elbo)
    assert steps.min() >= -1e-8, steps.min()


def test_run_cavi_stopping_and_determinism(small_net):
    _, trace = cavi.run_cavi(small_net, HYPER, tol=math.inf, seed=0)
    assert trace.iterations == 1 and trace.converged
    vp1, t1 = cavi.run_cavi(small_net, HYPER, seed=5)
    vp2, t2 = cavi.run_cavi(small_net, HYPER, seed=5)
    assert t1.elbo == t2.elbo
    np.testing.assert_array_equal(vp1.mu_delta, vp2.mu_delta)
    assert t1.converged and t1.iterations < 200
    _, t3 = cavi.run_cavi(small_net, HYPER, tol=1e-14, max_iters=3, seed=5)
    assert t3.iterations == 3 and not t3.converged
    with pytest.raises(ValueError):
        cavi.run_cavi(small_net, HYPER, tol=0)


def test_posterior_summary():
    vp = _vp(2, mu_mu=0.0, sigma2_mu=1.0)
    s = cavi.vi_posterior_summary(vp, 0.95)
    assert s["mu"]["lower"] == pytest.approx(-1.959963985, abs=1e-8)
    assert s["mu"]["upper"] == pytest.approx(1.959963985, abs=1e-8)
    assert s["sigma2"]["mean"] == pytest.approx(1 / 3)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            cavi.vi_posterior_summary(vp, bad)


def test_params_round_trip(small_net):
    vp, _ = cavi.run_cavi(small_net, HYPER, seed=0)
    back = cavi.VariationalParams.from_dict(vp.as_dict())
    np.testing.assert_array_equal(back.mu_delta, vp.mu_delta)
    assert back.beta_tau == vp.beta_tau


def test_vi_draws_and_predictive(small_net):
    vp, trace = cavi.run_cavi(small_net, HYPER, seed=0)
    d = cavi.vi_draws(vp, small_net, size=4000, seed=1, trace=trace)
    np.testing.assert_allclose(d["delta"].sum(axis=1), 0, atol=1e-12)
    assert d["mu"].mean() == pytest.approx(vp.mu_mu, abs=4 * math.sqrt(vp.sigma2_mu / 4000))
    assert d.meta["converged"] and d.meta["iterations"] == trace.iterations
    # Phi(m / sqrt(1 + v)) is E Phi(eta) for Gaussian eta; compare with Monte Carlo
    p = cavi.vi_predictive_probabilities(vp, small_net)
    rng = np.random.default_rng(2)
    mu = vp.mu_mu + math.sqrt(vp.sigma2_mu) * rng.standard_normal(20000)
    dl = vp.mu_delta + np.sqrt(vp.sigma2_delta) * rng.standard_normal((20000, small_net.n))
    eta = mu[:, None] + dl[:, small_net.rows] + dl[:, small_net.cols]
    np.testing.assert_allclose(p, stats.norm.cdf(eta).mean(axis=0), atol=0.01)
