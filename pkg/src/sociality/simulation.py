"""Data simulation and the timing / accuracy study over network sizes."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .distributions import make_rng
from .fitting import PRESETS, ChainSettings, VISettings, fit
from .gibbs import Hyperparams
from .network import Network, dyad_index

log = logging.getLogger(__name__)


def simulate_network(n, mu, tau2, seed=0):
    """Draw ``delta_i ~ N(0, tau2)``, shift them to zero sum, then
    ``y_ij ~ Ber(Phi(mu + delta_i + delta_j))``.

    Returns
    -------
    (Network, ndarray)
        The network and the centred effects used to generate it.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    if tau2 < 0:
        raise ValueError("tau2 must be non-negative")
    rng = make_rng(seed)
    delta = math.sqrt(tau2) * rng.standard_normal(n)
    delta -= delta.mean()
    rows, cols = dyad_index(n)
    p = special.ndtr(mu + delta[rows] + delta[cols])
    y = (rng.random(p.size) < p).astype(np.int8)
    return Network(n, y), delta


def centred_rmse(estimate, truth):
    """RMSE after shifting both vectors to zero mean."""
    e = np.asarray(estimate, dtype=float)
    t = np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean(((e - e.mean()) - (t - t.mean())) ** 2)))


@dataclass(frozen=True)
class SimStudyConfig:
    mu_true: float = -2.0
    tau2_true: float = 0.5
    sizes: tuple = (25,)
    replications: int = 10
    methods: tuple = ("mcmc", "vi")
    seed: int = 0
    chain: ChainSettings = field(default_factory=lambda: PRESETS["quick"])
    vi: VISettings = field(default_factory=VISettings)
    hyper: Hyperparams = field(default_factory=Hyperparams)
    workers: int = 1

    def __post_init__(self):
        if any(n < 3 for n in self.sizes):
            raise ValueError("every size must be at least 3")
        if self.replications < 0:
            raise ValueError("replications must be non-negative")
        for m in self.methods:
            if m not in ("mcmc", "vi"):
                raise ValueError(f"unknown method {m!r}")

    def as_dict(self):
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["methods"] = list(self.methods)
        return d


def _cell_seeds(cfg):
    """Data seed per (size, replication) and fit seed per method, all drawn
    from one master SeedSequence so results do not depend on scheduling."""
    children = np.random.SeedSequence(cfg.seed).spawn(len(cfg.sizes) * cfg.replications)
    out = {}
    for si, n in enumerate(cfg.sizes):
        for rep in range(cfg.replications):
            data_ss, *fit_ss = children[si * cfg.replications + rep].spawn(1 + len(cfg.methods))
            out[(n, rep)] = (data_ss, dict(zip(cfg.methods, fit_ss)))
    return out


def _run_cell(args):
    cfg, n, rep, method, data_ss, fit_ss = args
    net, truth = simulate_network(n, cfg.mu_true, cfg.tau2_true, data_ss)
    try:
        res = fit(net, "sociality", method, hyper=cfg.hyper, chain=cfg.chain, vi=cfg.vi,
                  seed=fit_ss, keep_dyad_loglik=False)
    except Exception as exc:  # a failed cell must not stop the study
        log.error("n=%d rep=%d %s failed: %s", n, rep, method, exc)
        return {"n": n, "replication": rep, "method": method, "seconds": math.nan,
                "rmse": math.nan, "error": str(exc)}
    if res.vp is not None:
        estimate = res.vp.mu_delta
    else:
        estimate = res.draws["delta"].mean(axis=0)
    return {"n": n, "replication": rep, "method": method, "seconds": res.seconds,
            "rmse": centred_rmse(estimate, truth), "error": None}


def run_sim_study(cfg):
    """Fit every simulated network with each engine and summarise.

    Returns
    -------
    (list of dict, list of dict)
        The summary table, one row per (n, method) with mean time and mean
        RMSE over successful replications, and the per-cell records.
    """
    seeds = _cell_seeds(cfg)
    jobs = [(cfg, n, rep, m, seeds[(n, rep)][0], seeds[(n, rep)][1][m])
            for n in cfg.sizes for rep in range(cfg.replications) for m in cfg.methods]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(j) for j in jobs]

    table = []
    for n in cfg.sizes:
        for m in cfg.methods:
            ok = [c for c in cells if c["n"] == n and c["method"] == m and c["error"] is None]
            failed = sum(1 for c in cells if c["n"] == n and c["method"] == m and c["error"])
            if not ok and not failed:
                continue
            table.append({
                "n": n, "method": m, "replications": len(ok), "failed": failed,
                "mean_seconds": float(np.mean([c["seconds"] for c in ok])) if ok else math.nan,
                "mean_rmse": float(np.mean([c["rmse"] for c in ok])) if ok else math.nan,
            })
    return table, cells
