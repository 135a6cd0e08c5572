"""Mean-field coordinate-ascent variational inference for the sociality model.

Factors: truncated-normal ``q(z_ij)``, normal ``q(mu)`` and ``q(delta_i)``,
inverse-gamma ``q(sigma2)`` and ``q(tau2)``.  Each iteration updates them in
the order z, mu, delta (restricted to zero sum), sigma2, tau2 and evaluates
the ELBO.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import distributions as dist
from .distributions import LOG_2PI, make_rng
from .draws import PosteriorDraws
from .gibbs import Hyperparams, _row_sums, dyad_loglik
from .network import MISSING

log = logging.getLogger(__name__)

VAR_FLOOR = 1e-12
DEFAULT_CLIP = 3.0


@dataclass
class VariationalParams:
    """Parameters of every variational factor.

    ``loc_z`` is the location of each truncated normal ``q(z_ij)``;
    ``mu_z`` is the (possibly clipped) mean fed to the other updates.
    """

    mu_z: np.ndarray
    loc_z: np.ndarray
    mu_mu: float
    sigma2_mu: float
    mu_delta: np.ndarray
    sigma2_delta: np.ndarray
    alpha_sigma: float
    beta_sigma: float
    alpha_tau: float
    beta_tau: float

    def copy(self):
        return replace(self, mu_z=self.mu_z.copy(), loc_z=self.loc_z.copy(),
                       mu_delta=self.mu_delta.copy(),
                       sigma2_delta=self.sigma2_delta.copy())

    def as_dict(self):
        return {
            "mu_mu": self.mu_mu, "sigma2_mu": self.sigma2_mu,
            "mu_delta": self.mu_delta.tolist(),
            "sigma2_delta": self.sigma2_delta.tolist(),
            "alpha_sigma": self.alpha_sigma, "beta_sigma": self.beta_sigma,
            "alpha_tau": self.alpha_tau, "beta_tau": self.beta_tau,
            "mu_z": self.mu_z.tolist(), "loc_z": self.loc_z.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mu_z"], float), np.asarray(d["loc_z"], float),
                   float(d["mu_mu"]), float(d["sigma2_mu"]),
                   np.asarray(d["mu_delta"], float), np.asarray(d["sigma2_delta"], float),
                   float(d["alpha_sigma"]), float(d["beta_sigma"]),
                   float(d["alpha_tau"]), float(d["beta_tau"]))


@dataclass
class CaviTrace:
    elbo: list = field(default_factory=list)
    converged: bool = False
    clip_events: list = field(default_factory=list)
    floor_events: int = 0

    @property
    def iterations(self):
        return len(self.elbo)

    @property
    def final_elbo(self):
        return self.elbo[-1] if self.elbo else math.nan


def cavi_init(net, hyper, seed=None):
    """Zero means with ``U(-0.01, 0.01)`` jitter, unit variances, shapes and
    rates at their hyperparameter values."""
    rng = make_rng(seed)
    n, d = net.n, net.n_dyads
    mu_mu = float(rng.uniform(-0.01, 0.01))
    mu_delta = rng.uniform(-0.01, 0.01, n)
    mu_delta -= mu_delta.mean()
    mu_z = rng.uniform(-0.01, 0.01, d)
    return VariationalParams(mu_z, mu_z.copy(), mu_mu, 1.0, mu_delta, np.ones(n),
                             hyper.a_sigma, hyper.b_sigma, hyper.a_tau, hyper.b_tau)


def _floor(x, trace=None):
    x = np.asarray(x, dtype=float)
    low = x < VAR_FLOOR
    if low.any():
        if trace is not None:
            trace.floor_events += int(low.sum())
        log.debug("variance floor activated on %d entries", int(low.sum()))
        x = np.where(low, VAR_FLOOR, x)
    return x[()] if x.ndim == 0 else x


def cavi_update_z(vp, net, clip=DEFAULT_CLIP):
    """Truncated-normal means at the current linear predictor, clipped to
    ``[-clip, clip]``.  Returns the number of clipped dyads."""
    m = vp.mu_mu + vp.mu_delta[net.rows] + vp.mu_delta[net.cols]
    obs = net.y != MISSING
    mean = np.array(m)
    mean[obs] = dist.truncnorm_mean(m[obs], net.y[obs] == 1)
    clipped = 0
    if math.isfinite(clip):
        over = obs & (np.abs(mean) > clip)
        clipped = int(over.sum())
        mean = np.where(over, np.clip(mean, -clip, clip), mean)
    vp.loc_z = m
    vp.mu_z = mean
    return clipped


def cavi_update_mu(vp, net):
    n = net.n
    vp.sigma2_mu = float(_floor(1.0 / (vp.alpha_sigma / vp.beta_sigma + net.n_dyads)))
    vp.mu_mu = vp.sigma2_mu * (vp.mu_z.sum() - (n - 1) * vp.mu_delta.sum())
    return vp


def cavi_update_delta(vp, net, recenter=True, scheme="block"):
    """Update the sociality factors.

    ``scheme="block"`` maximises the ELBO over all means jointly within the
    zero-sum set: with ``b_i = sum_j (E z_ij - E mu)`` the optimum is the
    centred ``b`` divided by ``E[1/tau2] + n - 2``.  ``scheme="sequential"``
    updates one mean at a time with the freshest neighbours and then shifts
    the result to zero sum (or not, with ``recenter=False``); the shift is
    not an ascent step, so the ELBO can dip between iterations.
    """
    n = net.n
    precision = vp.alpha_tau / vp.beta_tau
    var = float(_floor(1.0 / (precision + (n - 1))))
    zrow = _row_sums(vp.mu_z, net.rows, net.cols, n)
    if scheme == "block" and recenter:
        b = zrow - (n - 1) * vp.mu_mu
        vp.mu_delta = (b - b.mean()) / (precision + n - 2)
        vp.sigma2_delta = np.full(n, var)
        return vp
    if scheme not in ("block", "sequential"):
        raise ValueError(f"unknown delta update scheme {scheme!r}")
    base = (zrow - (n - 1) * vp.mu_mu).tolist()
    delta = vp.mu_delta.tolist()
    total = math.fsum(delta)
    for i in range(n):
        new = var * (base[i] - (total - delta[i]))
        total += new - delta[i]
        delta[i] = new
    d = np.array(delta)
    if recenter:
        d -= d.mean()
    vp.mu_delta = d
    vp.sigma2_delta = np.full(n, var)
    return vp


def cavi_update_variances(vp, hyper):
    n = vp.mu_delta.size
    vp.alpha_sigma = hyper.a_sigma + 0.5
    vp.beta_sigma = float(_floor(hyper.b_sigma + 0.5 * (vp.mu_mu ** 2 + vp.sigma2_mu)))
    vp.alpha_tau = hyper.a_tau + 0.5 * n
    vp.beta_tau = float(_floor(
        hyper.b_tau + 0.5 * float(np.sum(vp.mu_delta ** 2 + vp.sigma2_delta))))
    return vp


# ---------------------------------------------------------------------------
# ELBO

def _normal_prior_term(mean, var, a, b):
    """E_q log N(x | 0, s2) with q(x) = N(mean, var), q(s2) = IG(a, b)."""
    e_log_s2 = math.log(b) - dist.digamma(a)
    return -0.5 * (LOG_2PI + e_log_s2 + (a / b) * (mean * mean + var))


def _invgamma_prior_term(a0, b0, a, b):
    """E_q log IG(x | a0, b0) with q(x) = IG(a, b)."""
    e_log = math.log(b) - dist.digamma(a)
    return a0 * math.log(b0) - dist.lgamma(a0) - (a0 + 1.0) * e_log - b0 * a / b


def _invgamma_entropy(a, b):
    return a + math.log(b) + dist.lgamma(a) - (1.0 + a) * dist.digamma(a)


def _normal_entropy(var):
    return 0.5 * (LOG_2PI + 1.0 + np.log(var))


def elbo_terms(vp, net, hyper):
    """The ELBO broken into expected log-joint and entropy blocks.

    Observed dyads contribute ``E log N(z | eta, 1)`` plus the entropy of a
    unit-variance normal truncated at zero with location ``loc_z``.  For a
    missing dyad ``q(z)`` is an untruncated normal and the Gaussian constants
    cancel, leaving ``-((loc_z - E eta)^2 + Var eta) / 2``.
    """
    rows, cols = net.rows, net.cols
    e_eta = vp.mu_mu + vp.mu_delta[rows] + vp.mu_delta[cols]
    v_eta = vp.sigma2_mu + vp.sigma2_delta[rows] + vp.sigma2_delta[cols]
    obs = net.y != MISSING

    ez, vz, hz = dist.truncnorm_moments(vp.loc_z[obs], net.y[obs] == 1)
    lik = -0.5 * (LOG_2PI + vz + (ez - e_eta[obs]) ** 2 + v_eta[obs])
    miss = ~obs
    missing_term = -0.5 * ((vp.loc_z[miss] - e_eta[miss]) ** 2 + v_eta[miss])

    terms = {
        "z_loglik": float(lik.sum()),
        "z_entropy": float(hz.sum()),
        "missing": float(missing_term.sum()),
        "mu_prior": _normal_prior_term(vp.mu_mu, vp.sigma2_mu, vp.alpha_sigma, vp.beta_sigma),
        "delta_prior": float(sum(
            _normal_prior_term(m, v, vp.alpha_tau, vp.beta_tau)
            for m, v in zip(vp.mu_delta.tolist(), vp.sigma2_delta.tolist()))),
        "sigma2_prior": _invgamma_prior_term(hyper.a_sigma, hyper.b_sigma,
                                             vp.alpha_sigma, vp.beta_sigma),
        "tau2_prior": _invgamma_prior_term(hyper.a_tau, hyper.b_tau,
                                           vp.alpha_tau, vp.beta_tau),
        "mu_entropy": float(_normal_entropy(vp.sigma2_mu)),
        "delta_entropy": float(_normal_entropy(vp.sigma2_delta).sum()),
        "sigma2_entropy": _invgamma_entropy(vp.alpha_sigma, vp.beta_sigma),
        "tau2_entropy": _invgamma_entropy(vp.alpha_tau, vp.beta_tau),
    }
    return terms


def elbo(vp, net, hyper):
    """Evidence lower bound ``E_q log p(Y, Theta) - E_q log q(Theta)``."""
    return math.fsum(elbo_terms(vp, net, hyper).values())


# ---------------------------------------------------------------------------
# driver

def run_cavi(net, hyper=None, tol=1e-6, max_iters=10_000, seed=0, clip=DEFAULT_CLIP,
             recenter=True, scheme="block"):
    """Iterate the factor updates until the ELBO gain drops below ``tol``.

    Returns
    -------
    (VariationalParams, CaviTrace)
        ``trace.converged`` is False when ``max_iters`` was reached first.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    hyper = hyper or Hyperparams()
    vp = cavi_init(net, hyper, seed)
    trace = CaviTrace()
    previous = elbo(vp, net, hyper)
    for it in range(1, max_iters + 1):
        clipped = cavi_update_z(vp, net, clip)
        cavi_update_mu(vp, net)
        cavi_update_delta(vp, net, recenter=recenter, scheme=scheme)
        cavi_update_variances(vp, hyper)
        current = elbo(vp, net, hyper)
        trace.elbo.append(current)
        if clipped:
            trace.clip_events.append((it, clipped))
        if current < previous - 1e-8:
            log.info("ELBO decreased at iteration %d by %.3g (%d dyads clipped)",
                     it, previous - current, clipped)
        if current - previous < tol:
            trace.converged = True
            break
        previous = current
    return vp, trace


def vi_posterior_summary(vp, level=0.95):
    """Mean, sd and equal-tailed interval of each fitted factor."""
    if not 0 < level < 1:
        raise ValueError("level must lie strictly between 0 and 1")
    lo, hi = (1 - level) / 2, (1 + level) / 2

    def normal(m, v):
        sd = math.sqrt(v)
        return {"mean": m, "sd": sd,
                "lower": m + sd * float(dist.Phi_inv(lo)),
                "upper": m + sd * float(dist.Phi_inv(hi))}

    def invgamma(a, b):
        rv = stats.invgamma(a, scale=b)
        mean = b / (a - 1) if a > 1 else math.inf
        sd = b / ((a - 1) * math.sqrt(a - 2)) if a > 2 else math.inf
        return {"mean": mean, "sd": sd, "lower": float(rv.ppf(lo)), "upper": float(rv.ppf(hi))}

    return {
        "mu": normal(vp.mu_mu, vp.sigma2_mu),
        "delta": [normal(m, v) for m, v in zip(vp.mu_delta.tolist(), vp.sigma2_delta.tolist())],
        "sigma2": invgamma(vp.alpha_sigma, vp.beta_sigma),
        "tau2": invgamma(vp.alpha_tau, vp.beta_tau),
    }


def vi_predictive_probabilities(vp, net, positions=None):
    """``E_q Phi(eta) = Phi(m / sqrt(1 + v))`` with ``eta ~ N(m, v)`` under q."""
    rows, cols = net.rows, net.cols
    if positions is not None:
        rows, cols = rows[positions], cols[positions]
    m = vp.mu_mu + vp.mu_delta[rows] + vp.mu_delta[cols]
    v = vp.sigma2_mu + vp.sigma2_delta[rows] + vp.sigma2_delta[cols]
    return dist.Phi(m / np.sqrt(1.0 + v))


def vi_draws(vp, net, size=1000, seed=0, trace=None):
    """Independent draws from the fitted factors, packaged like MCMC output.

    Each ``delta`` draw is shifted to zero sum, so downstream code sees the
    same constraint as the Gibbs draws.
    """
    rng = make_rng(seed)
    n = net.n
    mu = vp.mu_mu + math.sqrt(vp.sigma2_mu) * rng.standard_normal(size)
    delta = vp.mu_delta + np.sqrt(vp.sigma2_delta) * rng.standard_normal((size, n))
    delta -= delta.mean(axis=1, keepdims=True)
    sigma2 = dist.sample_invgamma(vp.alpha_sigma, vp.beta_sigma, rng, size=size)
    tau2 = dist.sample_invgamma(vp.alpha_tau, vp.beta_tau, rng, size=size)
    obs = np.flatnonzero(net.observed)
    eta = mu[:, None] + delta[:, net.rows[obs]] + delta[:, net.cols[obs]]
    per_dyad = dyad_loglik(eta, net.y[obs])
    meta = {"method": "vi", "seed": seed, "draws": size}
    if trace is not None:
        meta.update(iterations=trace.iterations, converged=trace.converged,
                    final_elbo=trace.final_elbo)
    return PosteriorDraws("sociality", n,
                          {"mu": mu, "delta": delta, "sigma2": sigma2, "tau2": tau2},
                          per_dyad.sum(axis=1), per_dyad, obs, meta)
