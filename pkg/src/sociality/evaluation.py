"""Model assessment: prior checks, WAIC, posterior predictive checks,
cross-validated link prediction and clustering of sociality effects."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .distributions import make_rng, sample_invgamma, spawn_rngs
from .gibbs import Hyperparams
from .network import STAT_NAMES, adjacency_stats, graph_stats

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# prior elicitation

def prior_predictor_variance(hyper):
    """Marginal prior variance of ``mu + delta_i + delta_j``:
    ``b_sigma/(a_sigma-1) + 2 b_tau/(a_tau-1)``, infinite when a shape is
    at most 1."""
    if hyper.a_sigma <= 1 or hyper.a_tau <= 1:
        return math.inf
    return hyper.b_sigma / (hyper.a_sigma - 1) + 2.0 * hyper.b_tau / (hyper.a_tau - 1)


def simulate_prior_theta(hyper, draws, seed=0):
    """Tie probabilities ``Phi(mu + delta_i + delta_j)`` drawn from the prior,
    with fresh variances and effects for every draw."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    rng = make_rng(seed)
    sigma2 = sample_invgamma(hyper.a_sigma, hyper.b_sigma, rng, size=draws)
    tau2 = sample_invgamma(hyper.a_tau, hyper.b_tau, rng, size=draws)
    eta = (np.sqrt(sigma2) * rng.standard_normal(draws)
           + np.sqrt(tau2) * rng.standard_normal(draws)
           + np.sqrt(tau2) * rng.standard_normal(draws))
    return special.ndtr(eta)


# ---------------------------------------------------------------------------
# WAIC

@dataclass
class WaicReport:
    waic: float
    lppd: float
    p_waic: float
    pointwise_lppd: np.ndarray
    pointwise_p: np.ndarray

    def as_dict(self):
        return {"waic": self.waic, "lppd": self.lppd, "p_waic": self.p_waic,
                "n_dyads": int(self.pointwise_lppd.size)}


def waic(dyad_loglik, positions=None, n=None):
    """WAIC from a ``(B, D)`` matrix of per-draw, per-dyad log-likelihoods.

    ``lppd = sum_d log mean_b p_bd`` and
    ``p_waic = 2 sum_d (log mean_b p_bd - mean_b log p_bd)``.

    Raises
    ------
    ValueError
        If fewer than two draws are given, or if some dyad has likelihood
        zero under every draw (the message names that dyad; pass
        ``positions`` and ``n`` to get actor indices).
    """
    ll = np.asarray(dyad_loglik, dtype=float)
    if ll.ndim != 2 or ll.shape[0] < 2:
        raise ValueError("need a (draws, dyads) matrix with at least two draws")
    dead = np.all(np.isneginf(ll), axis=0)
    if dead.any():
        d = int(np.flatnonzero(dead)[0])
        where = f"column {d}"
        if positions is not None and n is not None:
            i, j = _pair_of(int(positions[d]), n)
            where += f" (actors {i}, {j})"
        raise ValueError(f"dyad {where} has zero likelihood under every draw")
    if np.isnan(ll).any() or np.isposinf(ll).any():
        raise ValueError("log-likelihood matrix contains nan or +inf")
    B = ll.shape[0]
    log_mean = special.logsumexp(ll, axis=0) - math.log(B)
    with np.errstate(invalid="ignore"):
        mean_log = ll.mean(axis=0)
    p = 2.0 * (log_mean - mean_log)
    lppd = float(log_mean.sum())
    p_waic = float(p.sum())
    return WaicReport(-2.0 * lppd + 2.0 * p_waic, lppd, p_waic, log_mean, p)


def _pair_of(position, n):
    rows, cols = np.triu_indices(n, 1)
    return int(rows[position]), int(cols[position])


def waic_from_draws(draws):
    if draws.dyad_loglik is None:
        raise ValueError("draws were stored without per-dyad log-likelihoods")
    return waic(draws.dyad_loglik, draws.observed, draws.n)


# ---------------------------------------------------------------------------
# posterior predictive checks

@dataclass
class PpcReport:
    """Replicate summaries for each statistic in :data:`STAT_NAMES`."""

    stats: dict
    replicates: np.ndarray

    def as_dict(self):
        return {"statistics": self.stats, "replicates": int(self.replicates.shape[0])}


def _tail_probability(values, observed):
    # mid-p: ties count half, so a point mass at the observed value gives 0.5
    return float(np.mean(values > observed) + 0.5 * np.mean(values == observed))


def ppc_from_probabilities(theta, net, seed=0):
    """Check the observed statistics against networks simulated from the
    rows of ``theta`` (one tie probability per dyad and replicate)."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    rng = make_rng(seed)
    n, rows, cols = net.n, net.rows, net.cols
    observed = graph_stats(net).as_dict()
    reps = np.empty((theta.shape[0], len(STAT_NAMES)))
    adj = np.zeros((n, n))
    for r, p in enumerate(theta):
        y = (rng.random(p.size) < p).astype(float)
        adj[rows, cols] = y
        adj[cols, rows] = y
        reps[r] = adjacency_stats(adj).as_array()
    summary = {}
    for k, name in enumerate(STAT_NAMES):
        col = reps[:, k]
        ok = col[np.isfinite(col)]
        entry = {"observed": observed[name], "undefined": int(col.size - ok.size)}
        if ok.size:
            q = np.quantile(ok, [0.005, 0.025, 0.975, 0.995])
            entry.update(mean=float(ok.mean()),
                         interval_95=[float(q[1]), float(q[2])],
                         interval_99=[float(q[0]), float(q[3])],
                         tail_probability=_tail_probability(ok, observed[name])
                         if math.isfinite(observed[name]) else math.nan)
        else:
            entry.update(mean=math.nan, interval_95=[math.nan, math.nan],
                         interval_99=[math.nan, math.nan], tail_probability=math.nan)
        summary[name] = entry
    return PpcReport(summary, reps)


def posterior_predictive_check(draws, net, replicates=1000, seed=0):
    """Simulate one network per (sub-sampled) posterior draw and summarise
    the six graph statistics.  Undefined statistics are dropped from their
    summary and counted under ``undefined``."""
    if draws.size < 1:
        raise ValueError("no posterior draws")
    pick_rng, sim_rng = spawn_rngs(seed, 2)
    if replicates >= draws.size:
        idx = np.arange(draws.size)
    else:
        idx = np.sort(pick_rng.choice(draws.size, size=replicates, replace=False))
    theta = np.array([draws.probabilities(int(b)) for b in idx])
    return ppc_from_probabilities(theta, net, sim_rng)


# ---------------------------------------------------------------------------
# ROC / AUC and cross-validation

def roc_curve(scores, labels):
    """False and true positive rates over every distinct score threshold,
    from (0, 0) to (1, 1)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    pos, neg = labels.sum(), (~labels).sum()
    if pos == 0 or neg == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-scores, kind="mergesort")
    s, lab = scores[order], labels[order]
    tp = np.cumsum(lab)
    fp = np.cumsum(~lab)
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    fpr = np.r_[0.0, fp[last] / neg]
    tpr = np.r_[0.0, tp[last] / pos]
    return fpr, tpr


def auc_rank(scores, labels):
    """Area under the ROC curve from the Mann-Whitney rank statistic (ties
    get midranks)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    pos, neg = int(labels.sum()), int((~labels).sum())
    if pos == 0 or neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = stats.rankdata(scores)
    return float((ranks[labels].sum() - pos * (pos + 1) / 2.0) / (pos * neg))


def auc_trapezoid(fpr, tpr):
    return float(np.trapezoid(tpr, fpr))


@dataclass
class CvReport:
    folds: list = field(default_factory=list)

    @property
    def aucs(self):
        return np.array([f["auc"] for f in self.folds if f["auc"] is not None])

    @property
    def mean_auc(self):
        a = self.aucs
        return float(a.mean()) if a.size else math.nan

    @property
    def sd_auc(self):
        a = self.aucs
        return float(a.std(ddof=1)) if a.size > 1 else math.nan

    def as_dict(self):
        return {"folds": [{k: v for k, v in f.items() if k not in ("fpr", "tpr")}
                          for f in self.folds],
                "mean_auc": self.mean_auc, "sd_auc": self.sd_auc,
                "undefined_folds": [f["fold"] for f in self.folds if f["auc"] is None]}


def dyad_folds(net, folds, seed=0):
    """Random partition of the observed dyad positions into ``folds`` parts."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    obs = np.flatnonzero(net.observed)
    if obs.size < folds:
        raise ValueError("fewer observed dyads than folds")
    perm = make_rng(seed).permutation(obs)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cross_validate(net, fit_fn, folds=5, seed=0):
    """K-fold link prediction over dyads.

    ``fit_fn(train_net, rng)`` must return an object with a
    ``predictive_probabilities(net, positions)`` method (e.g.
    :class:`sociality.fitting.FitResult`).  Each fold's held-out dyads are
    marked missing, the model is refit, and the held-out dyads are scored by
    their posterior predictive tie probability.
    """
    split_rng, *fold_rngs = spawn_rngs(seed, folds + 1)
    parts = dyad_folds(net, folds, split_rng)
    report = CvReport()
    for k, (test, rng) in enumerate(zip(parts, fold_rngs)):
        mask = np.zeros(net.n_dyads, dtype=bool)
        mask[test] = True
        train = net.with_missing(mask)
        result = fit_fn(train, rng)
        scores = np.asarray(result.predictive_probabilities(train, test))
        labels = net.y[test] == 1
        entry = {"fold": k, "n_test": int(test.size), "positives": int(labels.sum())}
        if labels.all() or not labels.any():
            log.warning("fold %d has a single held-out class; AUC undefined", k)
            entry.update(auc=None, fpr=[], tpr=[])
        else:
            fpr, tpr = roc_curve(scores, labels)
            entry.update(auc=auc_rank(scores, labels), fpr=fpr.tolist(), tpr=tpr.tolist())
        report.folds.append(entry)
    return report


# ---------------------------------------------------------------------------
# clustering of sociality effects

def _kmeans_costs(x):
    """Segment costs ``C[i, j]`` = within SS of sorted values ``x[i:j]``
    (batched over the leading axis)."""
    n = x.shape[-1]
    c1 = np.concatenate([np.zeros(x.shape[:-1] + (1,)), np.cumsum(x, axis=-1)], axis=-1)
    c2 = np.concatenate([np.zeros(x.shape[:-1] + (1,)), np.cumsum(x * x, axis=-1)], axis=-1)
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    cnt = (j - i).astype(float)
    s1 = c1[..., None, :] - c1[..., :, None]
    s2 = c2[..., None, :] - c2[..., :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = s2 - s1 * s1 / cnt
    cost = np.where(cnt > 0, np.maximum(cost, 0.0), np.inf)
    return cost


def _kmeans_dp(x, max_k):
    """Optimal WSS for k = 1..max_k plus back-pointers for every row of x."""
    B, n = x.shape
    order = np.argsort(x, axis=1, kind="mergesort")
    cost = _kmeans_costs(np.take_along_axis(x, order, axis=1))
    dp = cost[:, 0, :].copy()
    back = np.zeros((B, max_k, n + 1), dtype=np.int64)
    wss = np.empty((B, max_k))
    wss[:, 0] = dp[:, n]
    for k in range(1, max_k):
        total = dp[:, :, None] + cost
        back[:, k] = np.argmin(total, axis=1)
        dp = np.take_along_axis(total, back[:, k][:, None, :], axis=1)[:, 0, :]
        wss[:, k] = dp[:, n]
    return order, back, wss


def _backtrack(order, back, k):
    """Labels (numbered by increasing centre) of the optimal k-partition."""
    n = order.size
    lab = np.empty(n, dtype=np.int64)
    end = n
    for c in range(k - 1, -1, -1):
        start = int(back[c, end]) if c > 0 else 0
        lab[order[start:end]] = c
        end = start
    return lab


def kmeans_1d(x, max_k):
    """Exact 1-D k-means for every ``k = 1..max_k`` by dynamic programming.

    Parameters
    ----------
    x : ndarray, shape (B, n)
        Each row clustered separately.
    max_k : int

    Returns
    -------
    wss : ndarray, shape (B, max_k)
        Optimal within-cluster sum of squares.
    labels : ndarray, shape (B, max_k, n)
        Cluster labels numbered by increasing centre.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    order, back, wss = _kmeans_dp(x, max_k)
    labels = np.array([[_backtrack(order[b], back[b], k) for k in range(1, max_k + 1)]
                       for b in range(x.shape[0])])
    return wss, labels


def elbow(wss):
    """Elbow of a within-cluster SS curve: argmax over k of the second
    difference of ``log WSS``, with ``WSS(0) := WSS(1)`` and ties to the
    smaller k.  The curve must extend one step past the largest candidate.

    Values are floored at ``1e-12 * WSS(1)`` so exact fits do not produce
    ``-inf``; a constant input therefore returns k = 1.
    """
    w = np.asarray(wss, dtype=float)
    floor = max(1e-12 * w[0], np.finfo(float).tiny)
    lw = np.log(np.maximum(w, floor))
    lw = np.concatenate([[lw[0]], lw])
    d2 = lw[:-2] - 2.0 * lw[1:-1] + lw[2:]
    d2 = np.round(d2, 9)  # ties up to rounding go to the smaller k
    return int(np.argmax(d2)) + 1


def _check_max_k(max_k, n):
    if max_k < 1 or max_k >= n:
        raise ValueError(f"max_k must satisfy 1 <= max_k < n = {n}, got {max_k}")


def cluster_effects(x, max_k=10):
    """Elbow-selected exact k-means partition of each row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    B, n = x.shape
    _check_max_k(max_k, n)
    # centring shrinks the round-off in the cumulative-sum costs; a row with
    # no spread at all is one cluster (its WSS curve is pure round-off)
    x = x - x.mean(axis=1, keepdims=True)
    flat = np.ptp(x, axis=1) == 0
    # keep the (rows, n+1, n+1) cost tensors to a few tens of MB
    chunk = max(1, 2_000_000 // (n + 1) ** 2)
    labels = np.empty((B, n), dtype=np.int64)
    ks = np.empty(B, dtype=np.int64)
    for start in range(0, B, chunk):
        order, back, wss = _kmeans_dp(x[start:start + chunk], max_k + 1)
        for r in range(order.shape[0]):
            k = 1 if flat[start + r] else elbow(wss[r])
            ks[start + r] = k
            labels[start + r] = _backtrack(order[r], back[r], k)
    return labels, ks


def coassignment(labels):
    """Fraction of partitions placing each pair together."""
    labels = np.atleast_2d(np.asarray(labels))
    B, n = labels.shape
    co = np.zeros((n, n))
    for part in labels:
        co += part[:, None] == part[None, :]
    return co / B


def binder_loss(partition, co):
    same = partition[:, None] == partition[None, :]
    iu = np.triu_indices(co.shape[0], 1)
    return float(np.abs(same[iu] - co[iu]).sum())


@dataclass
class CoclusterReport:
    matrix: np.ndarray
    partition: np.ndarray
    ks: np.ndarray

    @property
    def n_clusters(self):
        return int(np.unique(self.partition).size)

    def as_dict(self):
        return {"partition": self.partition.tolist(), "n_clusters": self.n_clusters,
                "k_distribution": {int(k): int(c) for k, c in
                                   zip(*np.unique(self.ks, return_counts=True))},
                "coassignment": self.matrix.tolist()}


def cocluster(delta, max_k=10):
    """Coclustering probabilities from per-draw k-means of the sociality
    effects, with a Binder-loss point partition.

    Parameters
    ----------
    delta : ndarray, shape (B, n)
        Posterior draws of the effects, ``B >= 10``.
    max_k : int
        Largest number of clusters considered per draw (``< n``).

    Returns
    -------
    CoclusterReport
        The point partition is the per-draw partition with the smallest
        Binder loss against the coassignment matrix (first one on ties).
    """
    delta = np.asarray(delta, dtype=float)
    B, n = delta.shape
    if B < 10:
        raise ValueError("need at least 10 draws")
    _check_max_k(max_k, n)
    labels, ks = cluster_effects(delta, max_k)
    co = coassignment(labels)
    uniq, first = np.unique(labels, axis=0, return_index=True)
    candidates = uniq[np.argsort(first)]
    losses = [binder_loss(p, co) for p in candidates]
    best = candidates[int(np.argmin(losses))]
    return CoclusterReport(co, best, ks)


def vi_cluster(mu_delta, max_k=10):
    """Elbow-selected k-means partition of the variational means."""
    mu_delta = getattr(mu_delta, "mu_delta", mu_delta)
    labels, _ = cluster_effects(np.asarray(mu_delta, dtype=float)[None, :], max_k)
    return labels[0]


def credible_effect_classes(delta, level=0.95):
    """``"negative"``, ``"null"`` or ``"positive"`` per actor according to
    where the equal-tailed interval of its effect sits relative to zero."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape[0] < 100:
        raise ValueError("need at least 100 draws")
    if not 0 < level < 1:
        raise ValueError("level must lie strictly between 0 and 1")
    lo, hi = np.quantile(delta, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return np.where(hi < 0, "negative", np.where(lo > 0, "positive", "null"))


# ---------------------------------------------------------------------------
# prior sensitivity

SENSITIVITY_PRIORS = (
    Hyperparams(2, 1 / 3, 2, 1 / 3),
    Hyperparams(3, 1 / 3, 3, 1 / 3),
    Hyperparams(2, 1 / 2, 2, 1 / 4),
    Hyperparams(3, 1 / 2, 3, 1 / 4),
    Hyperparams(2, 1, 2, 1),
    Hyperparams(3, 2, 3, 2),
)


def sensitivity_analysis(net, fit_fn, priors=SENSITIVITY_PRIORS, seed=0):
    """Posterior mean effects under each prior and their correlation matrix.

    ``fit_fn(net, hyper, rng)`` returns a fit whose ``draws`` hold ``delta``.
    """
    rngs = spawn_rngs(seed, len(priors))
    means = np.array([fit_fn(net, h, r).draws["delta"].mean(axis=0)
                      for h, r in zip(priors, rngs)])
    return {"priors": [h.as_dict() for h in priors], "delta_means": means,
            "correlation": np.corrcoef(means)}

