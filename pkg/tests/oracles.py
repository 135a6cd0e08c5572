"""Independent reference computations shared by unit and acceptance tests."""

import math

import numpy as np
from scipy import integrate, special, stats

from sociality import gibbs
from sociality.distributions import make_rng, sample_invgamma
from sociality.network import MISSING, Network


# ---------------------------------------------------------------------------
# Gibbs sampler: prior recovery and Geweke-style joint test

def prior_recovery(n=10, hyper=None, iterations=30_000, seed=0):
    """Run the sampler with every dyad missing; the posterior is the prior.

    Returns z-scores (mean error / MCSE) for mu, sigma2, tau2, the mean of
    delta_0 and E[delta_0^2].
    """
    hyper = hyper or gibbs.Hyperparams(3.0, 2.0, 3.0, 2.0)
    net = Network(n, np.full(n * (n - 1) // 2, MISSING, dtype=np.int8))
    d = gibbs.run_gibbs(net, hyper, iterations, 0, 1, seed, keep_dyad_loglik=False)
    es2 = hyper.b_sigma / (hyper.a_sigma - 1)
    et2 = hyper.b_tau / (hyper.a_tau - 1)
    checks = {
        "mu": (d["mu"], 0.0),
        "sigma2": (d["sigma2"], es2),
        "tau2": (d["tau2"], et2),
        "delta0": (d["delta"][:, 0], 0.0),
        # centred effects: Var(delta_i) = tau2 (1 - 1/n)
        "delta0_sq": (d["delta"][:, 0] ** 2, et2 * (1 - 1 / n)),
    }
    out = {}
    for name, (x, target) in checks.items():
        ess = gibbs.effective_sample_size(x)
        out[name] = (x.mean() - target) / (x.std(ddof=1) / math.sqrt(ess))
    return out


def geweke_replicates(n=10, replicates=2000, sweeps=10, seed=0, hyper=None):
    """Draw (theta, y) from the joint, run ``sweeps`` Gibbs sweeps on y from
    theta, and return the final theta.  A correct sampler leaves the prior
    invariant, so the output is a prior sample.

    Columns: mu, sigma2, tau2, delta_0..delta_{n-1}.
    """
    hyper = hyper or gibbs.Hyperparams(3.0, 2.0, 3.0, 2.0)
    rng = make_rng(seed)
    rows, cols = np.triu_indices(n, 1)
    out = np.empty((replicates, 3 + n))
    for r in range(replicates):
        s2 = float(sample_invgamma(hyper.a_sigma, hyper.b_sigma, rng))
        t2 = float(sample_invgamma(hyper.a_tau, hyper.b_tau, rng))
        mu = rng.normal(0.0, math.sqrt(s2))
        d = rng.normal(0.0, math.sqrt(t2), n)
        d -= d.mean()
        z = mu + d[rows] + d[cols] + rng.standard_normal(rows.size)
        net = Network(n, (z > 0).astype(np.int8))
        state = gibbs.SocialityState(mu, d, s2, t2, z)
        for _ in range(sweeps):
            gibbs.gibbs_sweep(state, net, hyper, rng)
        out[r] = np.r_[state.mu, state.sigma2, state.tau2, state.delta]
    return out


def geweke_pvalues(sample, n, hyper=None):
    """KS p-values of each column against its exact prior marginal."""
    hyper = hyper or gibbs.Hyperparams(3.0, 2.0, 3.0, 2.0)
    # mu | sigma2 ~ N(0, sigma2) with sigma2 ~ IG(a, b): Student t, 2a dof
    t_mu = stats.t(2 * hyper.a_sigma, scale=math.sqrt(hyper.b_sigma / hyper.a_sigma))
    t_delta = stats.t(2 * hyper.a_tau, scale=math.sqrt(hyper.b_tau / hyper.a_tau * (1 - 1 / n)))
    ps = [stats.kstest(sample[:, 0], t_mu.cdf).pvalue,
          stats.kstest(sample[:, 1], stats.invgamma(hyper.a_sigma, scale=hyper.b_sigma).cdf).pvalue,
          stats.kstest(sample[:, 2], stats.invgamma(hyper.a_tau, scale=hyper.b_tau).cdf).pvalue]
    ps += [stats.kstest(sample[:, 3 + i], t_delta.cdf).pvalue for i in range(n)]
    return np.array(ps)


# ---------------------------------------------------------------------------
# CAVI: ELBO of a single dyad by numerical integration

def _normal_pdf(x, m, v):
    return math.exp(-0.5 * (x - m) ** 2 / v) / math.sqrt(2 * math.pi * v)


def _ig_logpdf(x, a, b):
    return a * math.log(b) - special.gammaln(a) - (a + 1) * math.log(x) - b / x


def _ig_pdf(x, a, b):
    return math.exp(_ig_logpdf(x, a, b))


def _quad(f, lo, hi, points=None):
    val, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=500, points=points)
    return val


def _e_normal(f, m, v):
    s = math.sqrt(v)
    return _quad(lambda x: f(x) * _normal_pdf(x, m, v), m - 14 * s, m + 14 * s)


def _e_ig(f, a, b):
    mode = b / (a + 1)
    return (_quad(lambda x: f(x) * _ig_pdf(x, a, b), 0, mode, points=[mode / 10])
            + _quad(lambda x: f(x) * _ig_pdf(x, a, b), mode, np.inf))


def single_dyad_elbo(vp, y, hyper):
    """ELBO of the two-actor model by quadrature.

    Every expectation is a 1-D integral against the relevant variational
    density; q(z) is integrated directly as a truncated normal.
    """
    loc = float(vp.loc_z[0])
    positive = y == 1
    mass = special.ndtr(loc) if positive else special.ndtr(-loc)
    lo, hi = (0.0, np.inf) if positive else (-np.inf, 0.0)

    def qz(z):
        return _normal_pdf(z, loc, 1.0) / mass

    e_z = _quad(lambda z: z * qz(z), lo, hi)
    e_z2 = _quad(lambda z: z * z * qz(z), lo, hi)
    h_z = -_quad(lambda z: qz(z) * math.log(qz(z)) if qz(z) > 0 else 0.0, lo, hi)

    m_mu, v_mu = vp.mu_mu, vp.sigma2_mu
    m_d, v_d = vp.mu_delta, vp.sigma2_delta
    e_eta = _e_normal(lambda x: x, m_mu, v_mu) + sum(_e_normal(lambda x: x, m_d[i], v_d[i])
                                                    for i in range(2))
    e_eta2 = (_e_normal(lambda x: x * x, m_mu, v_mu)
              + sum(_e_normal(lambda x: x * x, m_d[i], v_d[i]) for i in range(2))
              + 2 * (m_mu * m_d[0] + m_mu * m_d[1] + m_d[0] * m_d[1]))
    lik = -0.5 * math.log(2 * math.pi) - 0.5 * (e_z2 - 2 * e_z * e_eta + e_eta2)

    def e_log_normal_prior(m, v, a, b):
        # E log N(x | 0, s2), x ~ N(m, v), s2 ~ IG(a, b)
        e_inv = _e_ig(lambda s: 1 / s, a, b)
        e_log = _e_ig(math.log, a, b)
        e_x2 = _e_normal(lambda x: x * x, m, v)
        return -0.5 * math.log(2 * math.pi) - 0.5 * e_log - 0.5 * e_inv * e_x2

    def e_log_ig_prior(a0, b0, a, b):
        return _e_ig(lambda s: _ig_logpdf(s, a0, b0), a, b)

    def normal_entropy(m, v):
        return -_e_normal(lambda x: math.log(_normal_pdf(x, m, v)), m, v)

    def ig_entropy(a, b):
        return -_e_ig(lambda s: _ig_logpdf(s, a, b), a, b)

    total = lik + h_z
    total += e_log_normal_prior(m_mu, v_mu, vp.alpha_sigma, vp.beta_sigma)
    total += sum(e_log_normal_prior(m_d[i], v_d[i], vp.alpha_tau, vp.beta_tau) for i in range(2))
    total += e_log_ig_prior(hyper.a_sigma, hyper.b_sigma, vp.alpha_sigma, vp.beta_sigma)
    total += e_log_ig_prior(hyper.a_tau, hyper.b_tau, vp.alpha_tau, vp.beta_tau)
    total += normal_entropy(m_mu, v_mu) + sum(normal_entropy(m_d[i], v_d[i]) for i in range(2))
    total += ig_entropy(vp.alpha_sigma, vp.beta_sigma) + ig_entropy(vp.alpha_tau, vp.beta_tau)
    return total


# ---------------------------------------------------------------------------
# clustering

def adjusted_rand(a, b):
    """Adjusted Rand index from the contingency table."""
    a = np.unique(np.asarray(a), return_inverse=True)[1]
    b = np.unique(np.asarray(b), return_inverse=True)[1]
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1)
    comb = lambda x: x * (x - 1) / 2  # noqa: E731
    index = comb(table).sum()
    sa, sb = comb(table.sum(1)).sum(), comb(table.sum(0)).sum()
    expected = sa * sb / comb(a.size)
    top = 0.5 * (sa + sb)
    return 1.0 if top == expected else (index - expected) / (top - expected)
