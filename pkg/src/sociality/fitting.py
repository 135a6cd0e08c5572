"""One entry point for fitting any model with either engine."""

import time
from dataclasses import asdict, dataclass, field

from .baselines import DEFAULT_K, fit_baseline
from .cavi import DEFAULT_CLIP, run_cavi, vi_draws, vi_predictive_probabilities
from .gibbs import Hyperparams, chain_length, run_gibbs

MODELS = ("sociality", "distance", "class", "eigen")
METHODS = ("mcmc", "vi")


@dataclass(frozen=True)
class ChainSettings:
    iterations: int = 1100
    burn_in: int = 100
    thin: int = 10

    def __post_init__(self):
        chain_length(self.iterations, self.burn_in, self.thin)

    @property
    def kept(self):
        return chain_length(self.iterations, self.burn_in, self.thin)

    def as_dict(self):
        return asdict(self)


# quick: 100 kept draws; full: 25,000 kept, thin 10 after 10,000 burn-in
PRESETS = {
    "quick": ChainSettings(1100, 100, 10),
    "full": ChainSettings(260_000, 10_000, 10),
}


@dataclass(frozen=True)
class VISettings:
    tol: float = 1e-6
    max_iters: int = 10_000
    clip: float = DEFAULT_CLIP
    draws: int = 1000

    def as_dict(self):
        return asdict(self)


@dataclass
class FitResult:
    """Posterior draws plus, for VI, the fitted factors and ELBO trace."""

    model: str
    method: str
    draws: object
    seconds: float
    vp: object = None
    trace: object = None
    settings: dict = field(default_factory=dict)

    def predictive_probabilities(self, net, positions=None):
        """Posterior predictive tie probability ``E[Phi(eta)]`` per dyad."""
        if self.vp is not None:
            return vi_predictive_probabilities(self.vp, net, positions)
        return self.draws.mean_probabilities(positions)


def fit(net, model="sociality", method="mcmc", K=None, hyper=None, chain=None, vi=None,
        seed=0, keep_dyad_loglik=True):
    """Fit ``model`` to ``net``.

    ``hyper`` is a :class:`Hyperparams` for the sociality model and the
    matching prior dataclass for a baseline.  VI exists only for the
    sociality model.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "vi" and model != "sociality":
        raise ValueError("variational inference is only available for the sociality model")
    chain = chain or PRESETS["quick"]
    vi = vi or VISettings()
    settings = {"seed": seed}

    t0 = time.perf_counter()
    if model == "sociality" and method == "vi":
        hyper = hyper or Hyperparams()
        vp, trace = run_cavi(net, hyper, tol=vi.tol, max_iters=vi.max_iters, seed=seed,
                             clip=vi.clip)
        seconds = time.perf_counter() - t0
        draws = vi_draws(vp, net, size=vi.draws, seed=seed, trace=trace)
        draws.meta["hyper"] = hyper.as_dict()
        settings.update(vi.as_dict(), hyper=hyper.as_dict())
        return FitResult(model, method, draws, seconds, vp, trace, settings)

    if model == "sociality":
        hyper = hyper or Hyperparams()
        draws = run_gibbs(net, hyper, chain.iterations, chain.burn_in, chain.thin, seed,
                          keep_dyad_loglik=keep_dyad_loglik)
        settings["hyper"] = hyper.as_dict()
    else:
        K = DEFAULT_K[model] if K is None else K
        draws = fit_baseline(model, net, K=K, priors=hyper, iterations=chain.iterations,
                             burn_in=chain.burn_in, thin=chain.thin, seed=seed,
                             keep_dyad_loglik=keep_dyad_loglik)
        settings["K"] = K
    seconds = time.perf_counter() - t0
    settings.update(chain.as_dict())
    return FitResult(model, method, draws, seconds, settings=settings)
