"""Gibbs sampler for the probit sociality model.

Each sweep draws, in order: the latent utilities ``z`` (truncated normals),
the global effect ``mu``, the sociality effects ``delta`` (systematic scan,
freshest neighbours), a sum-to-zero shift of ``delta``, then the two
variance components from their inverse-gamma conditionals.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import special

from .distributions import _tail_exponential, make_rng, sample_invgamma
from .draws import PosteriorDraws
from .network import MISSING


@dataclass(frozen=True)
class Hyperparams:
    """Inverse-gamma shapes and rates for ``sigma2`` (global) and ``tau2``
    (sociality)."""

    a_sigma: float = 2.0
    b_sigma: float = 1.0 / 3.0
    a_tau: float = 2.0
    b_tau: float = 1.0 / 3.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    def as_dict(self):
        return asdict(self)


def _prior_mean_or_one(a, b):
    return b / (a - 1.0) if a > 1 else 1.0


@dataclass
class SocialityState:
    mu: float
    delta: np.ndarray
    sigma2: float
    tau2: float
    z: np.ndarray

    def copy(self):
        return SocialityState(self.mu, self.delta.copy(), self.sigma2, self.tau2, self.z.copy())


class _Augmenter:
    """Truncated-normal draws for the latent utilities of fixed data ``y``.

    The index sets are computed once; the sampler calls this every sweep.
    """

    def __init__(self, y):
        y = np.asarray(y)
        self.one = np.flatnonzero(y == 1)
        self.zero = np.flatnonzero(y == 0)
        self.miss = np.flatnonzero(y == MISSING)
        self.size = y.size

    def __call__(self, eta, rng):
        z = np.empty(self.size)
        u = rng.random(self.size)
        if self.one.size:
            z[self.one] = _positive_part(eta[self.one], u[self.one], rng)
        if self.zero.size:
            z[self.zero] = -_positive_part(-eta[self.zero], u[self.zero], rng)
        if self.miss.size:
            z[self.miss] = eta[self.miss] + special.ndtri(u[self.miss])
        return z


def _positive_part(m, u, rng):
    """``N(m, 1)`` restricted to ``(0, inf)`` by inverse CDF, tail rejection
    when ``m < -4``."""
    # upper-tail form: z = m - Phi^-1(u * Phi(m)) stays accurate for m << 0
    out = m - special.ndtri(u * special.ndtr(m))
    tail = m < -4.0
    if tail.any():
        a = -m[tail]
        out[tail] = m[tail] + _tail_exponential(a, np.full(a.shape, np.inf), rng)
    return np.maximum(out, 0.0)


def init_state(net, hyper, rng):
    """Start at ``mu = 0``, ``delta = 0`` and the prior means of the variances
    (1 when a prior mean does not exist), with ``z`` drawn given these."""
    rng = make_rng(rng)
    delta = np.zeros(net.n)
    sigma2 = _prior_mean_or_one(hyper.a_sigma, hyper.b_sigma)
    tau2 = _prior_mean_or_one(hyper.a_tau, hyper.b_tau)
    z = _Augmenter(net.y)(np.zeros(net.n_dyads), rng)
    return SocialityState(0.0, delta, sigma2, tau2, z)


def _row_sums(values, rows, cols, n):
    return np.bincount(rows, weights=values, minlength=n) + \
        np.bincount(cols, weights=values, minlength=n)


def update_z(state, net, rng, augment=None):
    augment = augment or _Augmenter(net.y)
    eta = state.mu + state.delta[net.rows] + state.delta[net.cols]
    state.z = augment(eta, rng)
    return state


def update_mu(state, net, hyper, rng):
    n = net.n
    var = 1.0 / (1.0 / state.sigma2 + net.n_dyads)
    # sum over dyads of delta_i + delta_j counts every delta n-1 times
    resid = state.z.sum() - (n - 1) * state.delta.sum()
    state.mu = var * resid + math.sqrt(var) * rng.standard_normal()
    return state


def update_delta(state, net, hyper, rng, recenter=True, zrow=None):
    """Sequential draws of each ``delta_i`` given the freshest neighbours,
    then (by default) the sum-to-zero shift ``delta -= mean(delta)``."""
    n = net.n
    if zrow is None:
        zrow = _row_sums(state.z, net.rows, net.cols, n)
    var = 1.0 / (1.0 / state.tau2 + (n - 1))
    sd = math.sqrt(var)
    noise = rng.standard_normal(n)
    base = (zrow - (n - 1) * state.mu).tolist()
    delta = state.delta.tolist()
    total = math.fsum(delta)
    for i in range(n):
        new = var * (base[i] - (total - delta[i])) + sd * noise[i]
        total += new - delta[i]
        delta[i] = new
    d = np.array(delta)
    if recenter:
        d -= d.mean()
    state.delta = d
    return state


def update_variances(state, hyper, rng, constrained=False):
    """Inverse-gamma draws for ``sigma2`` and ``tau2``.

    With ``constrained=True`` the ``tau2`` shape counts ``n - 1`` sociality
    degrees of freedom, the rank of the sum-to-zero prior covariance.  The
    recentred sampler needs this to leave the prior of ``tau2`` invariant;
    the unconstrained shape ``a_tau + n/2`` biases ``tau2`` downwards.
    """
    n = state.delta.size
    dof = n - 1 if constrained else n
    state.sigma2 = float(sample_invgamma(hyper.a_sigma + 0.5,
                                         hyper.b_sigma + 0.5 * state.mu ** 2, rng))
    state.tau2 = float(sample_invgamma(hyper.a_tau + 0.5 * dof,
                                       hyper.b_tau + 0.5 * float(state.delta @ state.delta), rng))
    return state


def gibbs_sweep(state, net, hyper, rng, recenter=True, augment=None):
    """One full sweep, updating ``state`` in place."""
    update_z(state, net, rng, augment)
    update_mu(state, net, hyper, rng)
    update_delta(state, net, hyper, rng, recenter=recenter)
    update_variances(state, hyper, rng, constrained=recenter)
    return state


def dyad_loglik(eta, y):
    """``log Phi(eta)`` for ties and ``log Phi(-eta)`` for non-ties."""
    return special.log_ndtr(np.where(y == 1, eta, -eta))


def chain_length(iterations, burn_in, thin):
    if thin < 1 or burn_in < 0 or iterations <= burn_in:
        raise ValueError("need iterations > burn_in >= 0 and thin >= 1")
    kept, rem = divmod(iterations - burn_in, thin)
    if rem:
        raise ValueError("iterations - burn_in must be a multiple of thin")
    return kept


def iter_gibbs(net, hyper, rng, state=None, recenter=True):
    """Yield the state after every sweep (the same object, mutated)."""
    rng = make_rng(rng)
    state = state if state is not None else init_state(net, hyper, rng)
    augment = _Augmenter(net.y)
    while True:
        gibbs_sweep(state, net, hyper, rng, recenter=recenter, augment=augment)
        yield state


def run_gibbs(net, hyper=None, iterations=1100, burn_in=100, thin=10, seed=0,
              keep_dyad_loglik=True, recenter=True):
    """Run one chain and keep every ``thin``-th sweep after ``burn_in``.

    Returns
    -------
    PosteriorDraws
        Samples ``mu``, ``delta``, ``sigma2``, ``tau2`` plus the observed-dyad
        log-likelihood of each stored draw.
    """
    hyper = hyper or Hyperparams()
    kept = chain_length(iterations, burn_in, thin)
    rng = make_rng(seed)
    n = net.n
    obs = np.flatnonzero(net.observed)
    y_obs = net.y[obs]

    mu = np.empty(kept)
    delta = np.empty((kept, n))
    sigma2 = np.empty(kept)
    tau2 = np.empty(kept)
    loglik = np.empty(kept)
    per_dyad = np.empty((kept, obs.size)) if keep_dyad_loglik else None

    chain = iter_gibbs(net, hyper, rng, recenter=recenter)
    b = 0
    for s in range(1, iterations + 1):
        state = next(chain)
        if s <= burn_in or (s - burn_in) % thin:
            continue
        mu[b], delta[b], sigma2[b], tau2[b] = state.mu, state.delta, state.sigma2, state.tau2
        eta = state.mu + state.delta[net.rows[obs]] + state.delta[net.cols[obs]]
        ll = dyad_loglik(eta, y_obs)
        loglik[b] = ll.sum()
        if per_dyad is not None:
            per_dyad[b] = ll
        b += 1

    meta = {"method": "mcmc", "hyper": hyper.as_dict(), "seed": seed,
            "iterations": iterations, "burn_in": burn_in, "thin": thin,
            "recenter": recenter}
    return PosteriorDraws("sociality", n,
                          {"mu": mu, "delta": delta, "sigma2": sigma2, "tau2": tau2},
                          loglik, per_dyad, obs, meta)


# ---------------------------------------------------------------------------
# diagnostics

def autocorrelation(x):
    """Sample autocorrelation at all lags (FFT, biased normalisation)."""
    x = np.asarray(x, dtype=float)
    m = x.size
    xc = x - x.mean()
    size = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:m] / m
    if acov[0] <= 0:
        return np.zeros(m)
    return acov / acov[0]


def effective_sample_size(x):
    """Geyer's initial positive sequence estimator."""
    x = np.asarray(x, dtype=float)
    m = x.size
    rho = autocorrelation(x)
    if not np.any(rho):
        return float(m)
    tau = -1.0
    for k in range(0, m - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(m / tau)


def mcmc_diagnostics(draws):
    """Effective sample size and Monte Carlo standard error per scalar
    parameter, plus the mean ESS across sociality effects."""
    if draws.size < 100:
        raise ValueError("need at least 100 stored draws for diagnostics")
    report = {}
    for name in ("mu", "sigma2", "tau2"):
        x = draws.samples[name]
        ess = effective_sample_size(x)
        report[name] = {"ess": ess, "mcse": float(x.std(ddof=1) / math.sqrt(ess)),
                        "mean": float(x.mean()), "sd": float(x.std(ddof=1))}
    delta = draws.samples["delta"]
    ess_delta = np.array([effective_sample_size(delta[:, i]) for i in range(delta.shape[1])])
    mcse_delta = delta.std(axis=0, ddof=1) / np.sqrt(ess_delta)
    report["delta"] = {"mean_ess": float(ess_delta.mean()),
                       "ess": ess_delta.tolist(),
                       "max_mcse": float(mcse_delta.max())}
    report["loglik"] = {"ess": effective_sample_size(draws.loglik)}
    return report
