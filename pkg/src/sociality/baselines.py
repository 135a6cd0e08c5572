"""MCMC for the latent-space comparison models: distance, class and eigen.

All three use the same probit augmentation as the sociality sampler.  Where a
block has no conjugate update given ``z`` (distance positions, class labels)
it is updated against the probit likelihood of ``y`` with ``z`` integrated
out, and ``z`` is redrawn immediately afterwards.  That pair is a valid
blocked move on ``(block, z)``.

Default priors:

* distance / eigen: ``zeta ~ N(0, omega2)``, ``u_i ~ N(0, sigma2 I)``,
  ``lambda_k ~ N(0, kappa2)``, every variance ``IG(3, 2)``.
* class: ``eta_kl ~ N(zeta, tau2)``, ``zeta ~ N(0, 3)``, ``tau2 ~ IG(3, 2)``,
  ``omega ~ Dir(alpha/K)``, ``alpha ~ G(1, 1)``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special
from scipy.sparse.csgraph import shortest_path

from .distributions import (make_rng, sample_categorical_log, sample_invgamma,
                            sample_log_dirichlet)
from .draws import PosteriorDraws
from .gibbs import _Augmenter, chain_length, dyad_loglik
from .network import MISSING

MODELS = ("distance", "class", "eigen")
DEFAULT_K = {"distance": 4, "class": 10, "eigen": 4}

TARGET_ACCEPT = 0.3
ADAPT_EVERY = 50


@dataclass(frozen=True)
class LatentPriors:
    """Inverse-gamma priors of the distance and eigen models."""

    a_omega: float = 3.0
    b_omega: float = 2.0
    a_sigma: float = 3.0
    b_sigma: float = 2.0
    a_kappa: float = 3.0
    b_kappa: float = 2.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ClassPriors:
    mu_zeta: float = 0.0
    s2_zeta: float = 3.0
    a_tau: float = 3.0
    b_tau: float = 2.0
    a_alpha: float = 1.0
    b_alpha: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name != "mu_zeta" and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    def as_dict(self):
        return asdict(self)


def _full(values, net):
    """Symmetric n x n matrix from a dyad vector (zero diagonal)."""
    m = np.zeros((net.n, net.n))
    m[net.rows, net.cols] = values
    return m + m.T


def _sign_matrix(net):
    """+1 for ties, -1 for non-ties, 0 for missing and the diagonal."""
    s = np.where(net.y == 1, 1.0, np.where(net.y == MISSING, 0.0, -1.0))
    return _full(s, net)


def _check_k(K, minimum):
    if int(K) != K or K < minimum:
        raise ValueError(f"K must be an integer >= {minimum}, got {K}")
    return int(K)


# ---------------------------------------------------------------------------
# distance model

def _initial_positions(net, K):
    """Classical MDS of the geodesic distances (disconnected pairs set one
    hop past the diameter), scaled to unit mean pairwise distance."""
    n = net.n
    adj = net.adjacency(missing=0)
    d = shortest_path(adj, unweighted=True, directed=False)
    finite = np.isfinite(d)
    d[~finite] = (d[finite].max() if finite.any() else 0.0) + 1.0
    j = np.eye(n) - 1.0 / n
    b = -0.5 * j @ (d ** 2) @ j
    w, v = np.linalg.eigh(b)
    order = np.argsort(w)[::-1][:K]
    u = v[:, order] * np.sqrt(np.maximum(w[order], 0.0))
    if u.shape[1] < K:
        u = np.pad(u, ((0, 0), (0, K - u.shape[1])))
    rows, cols = net.rows, net.cols
    scale = np.linalg.norm(u[rows] - u[cols], axis=1).mean()
    return u / scale if scale > 0 else u


def fit_distance(net, K=4, priors=None, iterations=1100, burn_in=100, thin=10, seed=0,
                 keep_dyad_loglik=True, step=0.5):
    """Probit latent distance model, ``eta_ij = zeta - ||u_i - u_j||``.

    Positions get one spherical random-walk Metropolis proposal per actor and
    sweep.  The common step size is tuned towards 30% acceptance every
    50 burn-in sweeps and frozen afterwards.
    """
    K = _check_k(K, 1)
    priors = priors or LatentPriors()
    kept = chain_length(iterations, burn_in, thin)
    rng = make_rng(seed)
    n, rows, cols = net.n, net.rows, net.cols
    sign = _sign_matrix(net)
    augment = _Augmenter(net.y)

    u = _initial_positions(net, K)
    zeta = 0.0
    omega2 = priors.b_omega / (priors.a_omega - 1) if priors.a_omega > 1 else 1.0
    sigma2 = priors.b_sigma / (priors.a_sigma - 1) if priors.a_sigma > 1 else 1.0
    log_step = math.log(step)
    accepted = 0
    proposed = 0
    window = [0, 0]

    def eta():
        return zeta - np.linalg.norm(u[rows] - u[cols], axis=1)

    def row_loglik(dist_i, s_i):
        return float(special.log_ndtr(s_i * (zeta - dist_i)) @ (s_i != 0))

    kept_u = np.empty((kept, n, K))
    kept_zeta = np.empty(kept)
    kept_omega2 = np.empty(kept)
    kept_sigma2 = np.empty(kept)
    obs = np.flatnonzero(net.observed)
    y_obs = net.y[obs]
    loglik = np.empty(kept)
    per_dyad = np.empty((kept, obs.size)) if keep_dyad_loglik else None
    b = 0
    for s in range(1, iterations + 1):
        sd = math.exp(log_step)
        noise = rng.standard_normal((n, K)) * sd
        logu = np.log(rng.random(n))
        acc = 0
        for i in range(n):
            s_i = sign[i]
            cur = np.linalg.norm(u - u[i], axis=1)
            prop_i = u[i] + noise[i]
            new = np.linalg.norm(u - prop_i, axis=1)
            # the diagonal entry has sign 0, so it drops out
            ratio = (row_loglik(new, s_i) - row_loglik(cur, s_i)
                     - 0.5 * (prop_i @ prop_i - u[i] @ u[i]) / sigma2)
            if logu[i] < ratio:
                u[i] = prop_i
                acc += 1
        z = augment(eta(), rng)
        dist_all = np.linalg.norm(u[rows] - u[cols], axis=1)
        v = 1.0 / (1.0 / omega2 + net.n_dyads)
        zeta = v * float((z + dist_all).sum()) + math.sqrt(v) * rng.standard_normal()
        omega2 = float(sample_invgamma(priors.a_omega + 0.5, priors.b_omega + 0.5 * zeta ** 2, rng))
        sigma2 = float(sample_invgamma(priors.a_sigma + 0.5 * n * K,
                                       priors.b_sigma + 0.5 * float((u ** 2).sum()), rng))

        if s <= burn_in:
            window[0] += acc
            window[1] += n
            if s % ADAPT_EVERY == 0:
                rate = window[0] / window[1]
                log_step += (rate - TARGET_ACCEPT) / math.sqrt(s / ADAPT_EVERY)
                window = [0, 0]
            continue
        accepted += acc
        proposed += n
        if (s - burn_in) % thin:
            continue
        kept_u[b], kept_zeta[b], kept_omega2[b], kept_sigma2[b] = u, zeta, omega2, sigma2
        ll = dyad_loglik(eta()[obs], y_obs)
        loglik[b] = ll.sum()
        if per_dyad is not None:
            per_dyad[b] = ll
        b += 1

    meta = {"method": "mcmc", "K": K, "priors": priors.as_dict(), "seed": seed,
            "iterations": iterations, "burn_in": burn_in, "thin": thin,
            "step": math.exp(log_step),
            "accept_rate": accepted / proposed if proposed else math.nan}
    samples = {"zeta": kept_zeta, "U": kept_u, "omega2": kept_omega2, "sigma2": kept_sigma2}
    return PosteriorDraws("distance", n, samples, loglik, per_dyad, obs, meta)


# ---------------------------------------------------------------------------
# eigen model

def _initial_eigen(net, K):
    """Leading eigenpairs (by magnitude) of the centred adjacency matrix."""
    adj = net.adjacency(missing=0).astype(float)
    n = net.n
    p = adj.sum() / (n * (n - 1)) if n > 1 else 0.0
    c = 2.0 * (adj - p)
    np.fill_diagonal(c, 0.0)
    w, v = np.linalg.eigh(c)
    order = np.argsort(-np.abs(w))[:K]
    u = v[:, order] * np.sqrt(np.abs(w[order]))
    lam = np.sign(w[order])
    lam[lam == 0] = 1.0
    if u.shape[1] < K:
        u = np.pad(u, ((0, 0), (0, K - u.shape[1])))
        lam = np.pad(lam, (0, K - lam.size), constant_values=1.0)
    return u, lam


def fit_eigen(net, K=4, priors=None, iterations=1100, burn_in=100, thin=10, seed=0,
              keep_dyad_loglik=True):
    """Probit eigen model, ``eta_ij = zeta + sum_k lambda_k u_ik u_jk``.

    Every block is conjugate given ``z``: ``zeta``, the vector ``lambda``
    (a Bayesian regression on the products ``u_ik u_jk``), each row ``u_i``
    in turn, and the three variances.
    """
    K = _check_k(K, 1)
    priors = priors or LatentPriors()
    kept = chain_length(iterations, burn_in, thin)
    rng = make_rng(seed)
    n, rows, cols = net.n, net.rows, net.cols
    augment = _Augmenter(net.y)
    eye = np.eye(K)

    u, lam = _initial_eigen(net, K)
    zeta = 0.0
    omega2 = priors.b_omega / (priors.a_omega - 1) if priors.a_omega > 1 else 1.0
    sigma2 = priors.b_sigma / (priors.a_sigma - 1) if priors.a_sigma > 1 else 1.0
    kappa2 = priors.b_kappa / (priors.a_kappa - 1) if priors.a_kappa > 1 else 1.0

    def quad():
        return ((u[rows] * lam) * u[cols]).sum(axis=1)

    kept_u = np.empty((kept, n, K))
    kept_lam = np.empty((kept, K))
    kept_scalars = {k: np.empty(kept) for k in ("zeta", "omega2", "sigma2", "kappa2")}
    obs = np.flatnonzero(net.observed)
    y_obs = net.y[obs]
    loglik = np.empty(kept)
    per_dyad = np.empty((kept, obs.size)) if keep_dyad_loglik else None
    b = 0
    for s in range(1, iterations + 1):
        z = augment(zeta + quad(), rng)

        v = 1.0 / (1.0 / omega2 + net.n_dyads)
        zeta = v * float((z - quad()).sum()) + math.sqrt(v) * rng.standard_normal()

        x = u[rows] * u[cols]
        prec = x.T @ x + eye / kappa2
        lam = _draw_mvn(prec, x.T @ (z - zeta), rng)

        zm = _full(z - zeta, net)
        for i in range(n):
            w = np.delete(u, i, axis=0) * lam
            r = np.delete(zm[i], i)
            u[i] = _draw_mvn(w.T @ w + eye / sigma2, w.T @ r, rng)

        omega2 = float(sample_invgamma(priors.a_omega + 0.5, priors.b_omega + 0.5 * zeta ** 2, rng))
        sigma2 = float(sample_invgamma(priors.a_sigma + 0.5 * n * K,
                                       priors.b_sigma + 0.5 * float((u ** 2).sum()), rng))
        kappa2 = float(sample_invgamma(priors.a_kappa + 0.5 * K,
                                       priors.b_kappa + 0.5 * float(lam @ lam), rng))

        if s <= burn_in or (s - burn_in) % thin:
            continue
        kept_u[b], kept_lam[b] = u, lam
        for k, val in (("zeta", zeta), ("omega2", omega2), ("sigma2", sigma2), ("kappa2", kappa2)):
            kept_scalars[k][b] = val
        ll = dyad_loglik((zeta + quad())[obs], y_obs)
        loglik[b] = ll.sum()
        if per_dyad is not None:
            per_dyad[b] = ll
        b += 1

    meta = {"method": "mcmc", "K": K, "priors": priors.as_dict(), "seed": seed,
            "iterations": iterations, "burn_in": burn_in, "thin": thin}
    samples = {"U": kept_u, "lambda": kept_lam, **kept_scalars}
    return PosteriorDraws("eigen", n, samples, loglik, per_dyad, obs, meta)


def _draw_mvn(precision, shift, rng):
    """Draw from ``N(Q^-1 h, Q^-1)`` via the Cholesky factor of ``Q``."""
    chol = np.linalg.cholesky(precision)
    mean = np.linalg.solve(chol.T, np.linalg.solve(chol, shift))
    return mean + np.linalg.solve(chol.T, rng.standard_normal(shift.shape[0]))


# ---------------------------------------------------------------------------
# class model

def fit_class(net, K=10, priors=None, iterations=1100, burn_in=100, thin=10, seed=0,
              keep_dyad_loglik=True, alpha_step=1.0):
    """Probit stochastic block model, ``eta_ij = eta[u_i, u_j]``.

    Labels are drawn one actor at a time from their categorical conditional
    given ``y`` (``z`` integrated out); ``z`` is then redrawn.  Block values,
    ``zeta`` and ``tau2`` are conjugate, the weights are Dirichlet (kept on the
    log scale) and ``alpha`` takes a random-walk Metropolis step on
    ``log alpha``.  Labels are stored 0-based.
    """
    K = _check_k(K, 2)
    priors = priors or ClassPriors()
    kept = chain_length(iterations, burn_in, thin)
    rng = make_rng(seed)
    n, rows, cols = net.n, net.rows, net.cols
    augment = _Augmenter(net.y)
    pos = _full((net.y == 1).astype(float), net)
    neg = _full((net.y == 0).astype(float), net)
    iu = np.triu_indices(K)

    labels = rng.integers(K, size=n)
    alpha = priors.a_alpha / priors.b_alpha
    log_w = np.full(K, -math.log(K))
    zeta = priors.mu_zeta
    tau2 = priors.b_tau / (priors.a_tau - 1) if priors.a_tau > 1 else 1.0
    block = np.full((K, K), zeta)

    kept_labels = np.empty((kept, n), dtype=np.int64)
    kept_block = np.empty((kept, K, K))
    kept_log_w = np.empty((kept, K))
    kept_scalars = {k: np.empty(kept) for k in ("zeta", "tau2", "alpha")}
    obs = np.flatnonzero(net.observed)
    y_obs = net.y[obs]
    loglik = np.empty(kept)
    per_dyad = np.empty((kept, obs.size)) if keep_dyad_loglik else None
    accepted = 0
    b = 0
    for s in range(1, iterations + 1):
        # labels | y, block, weights
        lp_pos = special.log_ndtr(block)
        lp_neg = special.log_ndtr(-block)
        onehot = np.zeros((n, K))
        onehot[np.arange(n), labels] = 1.0
        for i in range(n):
            onehot[i, labels[i]] = 0.0
            cp = pos[i] @ onehot
            cn = neg[i] @ onehot
            k = sample_categorical_log(log_w + lp_pos @ cp + lp_neg @ cn, rng)
            labels[i] = k
            onehot[i, k] = 1.0

        z = augment(block[labels[rows], labels[cols]], rng)

        # block values | z, labels, zeta, tau2
        a, c = np.minimum(labels[rows], labels[cols]), np.maximum(labels[rows], labels[cols])
        flat = a * K + c
        count = np.bincount(flat, minlength=K * K).reshape(K, K)[iu]
        total = np.bincount(flat, weights=z, minlength=K * K).reshape(K, K)[iu]
        prec = 1.0 / tau2 + count
        vals = (zeta / tau2 + total) / prec + rng.standard_normal(count.size) / np.sqrt(prec)
        block = np.zeros((K, K))
        block[iu] = vals
        block = block + np.triu(block, 1).T

        m = vals.size
        p = 1.0 / priors.s2_zeta + m / tau2
        zeta = ((priors.mu_zeta / priors.s2_zeta + vals.sum() / tau2) / p
                + rng.standard_normal() / math.sqrt(p))
        tau2 = float(sample_invgamma(priors.a_tau + 0.5 * m,
                                     priors.b_tau + 0.5 * float(((vals - zeta) ** 2).sum()), rng))

        counts = np.bincount(labels, minlength=K)
        log_w = sample_log_dirichlet(alpha / K + counts, rng)

        prop = alpha * math.exp(alpha_step * rng.standard_normal())
        ratio = (_log_alpha_target(prop, log_w, priors)
                 - _log_alpha_target(alpha, log_w, priors))
        if math.log(rng.random()) < ratio:
            alpha = prop
            if s > burn_in:
                accepted += 1

        if s <= burn_in or (s - burn_in) % thin:
            continue
        kept_labels[b], kept_block[b], kept_log_w[b] = labels, block, log_w
        for k, val in (("zeta", zeta), ("tau2", tau2), ("alpha", alpha)):
            kept_scalars[k][b] = val
        ll = dyad_loglik(block[labels[rows[obs]], labels[cols[obs]]], y_obs)
        loglik[b] = ll.sum()
        if per_dyad is not None:
            per_dyad[b] = ll
        b += 1

    meta = {"method": "mcmc", "K": K, "priors": priors.as_dict(), "seed": seed,
            "iterations": iterations, "burn_in": burn_in, "thin": thin,
            "alpha_accept_rate": accepted / (iterations - burn_in)}
    samples = {"labels": kept_labels, "block": kept_block, "log_omega": kept_log_w,
               **kept_scalars}
    return PosteriorDraws("class", n, samples, loglik, per_dyad, obs, meta)


def _log_alpha_target(alpha, log_w, priors):
    """log p(omega | alpha) + log G(alpha) + log alpha (Jacobian of the
    log-scale walk)."""
    K = log_w.size
    return (special.gammaln(alpha) - K * special.gammaln(alpha / K)
            + (alpha / K - 1.0) * float(log_w.sum())
            + priors.a_alpha * math.log(alpha) - priors.b_alpha * alpha)


def fit_baseline(model, net, K=None, **kwargs):
    """Dispatch on the model name."""
    fits = {"distance": fit_distance, "class": fit_class, "eigen": fit_eigen}
    if model not in fits:
        raise ValueError(f"unknown baseline model {model!r}")
    return fits[model](net, K=DEFAULT_K[model] if K is None else K, **kwargs)
