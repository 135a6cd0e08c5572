"""Container for stored MCMC draws and its on-disk format.

A draw file is an uncompressed ``.npz`` archive (one array per column)
written next to a JSON sidecar carrying model name, hyperparameters, seed
and chain settings.
"""

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from .network import dyad_index


@dataclass
class PosteriorDraws:
    """Stored draws from one chain.

    Attributes
    ----------
    model : str
        ``"sociality"``, ``"distance"``, ``"class"`` or ``"eigen"``.
    n : int
        Number of actors.
    samples : dict of str -> ndarray
        Parameter draws, leading axis of length ``B``.
    loglik : ndarray, shape (B,)
        Total log-likelihood of the observed dyads for each draw.
    dyad_loglik : ndarray, shape (B, D_obs) or None
        Per-dyad log-likelihood for the observed dyads, used for WAIC.
    observed : ndarray of int
        Dyad positions (into the full dyad vector) of the ``D_obs`` columns.
    meta : dict
        Hyperparameters, seed, chain settings and sampler diagnostics.
    """

    model: str
    n: int
    samples: dict
    loglik: np.ndarray
    dyad_loglik: np.ndarray = None
    observed: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return int(self.loglik.shape[0])

    def __getitem__(self, name):
        return self.samples[name]

    def linear_predictor(self, b):
        """Linear predictor of every dyad under draw ``b``."""
        return linear_predictor(self.model, {k: v[b] for k, v in self.samples.items()}, self.n)

    def probabilities(self, b):
        return special.ndtr(self.linear_predictor(b))

    def mean_probabilities(self, positions=None):
        """Posterior predictive tie probability, averaging ``Phi(eta)`` over draws."""
        acc = 0.0
        for b in range(self.size):
            p = self.probabilities(b)
            acc = acc + (p if positions is None else p[positions])
        return acc / self.size

    def posterior_mean(self, name):
        return self.samples[name].mean(axis=0)


def linear_predictor(model, params, n):
    """Per-dyad linear predictor for one parameter set of ``model``."""
    rows, cols = dyad_index(n)
    if model == "sociality":
        d = params["delta"]
        return params["mu"] + d[rows] + d[cols]
    if model == "distance":
        u = params["U"]
        return params["zeta"] - np.sqrt(((u[rows] - u[cols]) ** 2).sum(axis=1))
    if model == "eigen":
        u = params["U"]
        return params["zeta"] + ((u[rows] * params["lambda"]) * u[cols]).sum(axis=1)
    if model == "class":
        labels = params["labels"].astype(int)
        block = params["block"]
        return block[labels[rows], labels[cols]]
    raise ValueError(f"unknown model {model!r}")


def save_draws(draws, path):
    """Write ``<path>.npz`` and ``<path>.json``; returns both paths."""
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".npz", ".json") else path
    arrays = {f"param/{k}": np.asarray(v) for k, v in draws.samples.items()}
    arrays["loglik"] = draws.loglik
    if draws.dyad_loglik is not None:
        arrays["dyad_loglik"] = draws.dyad_loglik
    if draws.observed is not None:
        arrays["observed"] = draws.observed
    npz = base.with_suffix(".npz")
    _write_npz(npz, arrays)
    sidecar = base.with_suffix(".json")
    info = {"model": draws.model, "n": draws.n, "draws": draws.size,
            "parameters": sorted(draws.samples), "meta": draws.meta}
    sidecar.write_text(json.dumps(info, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return npz, sidecar


def load_draws(path):
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".npz", ".json") else path
    info = json.loads(base.with_suffix(".json").read_text())
    with np.load(base.with_suffix(".npz")) as data:
        samples = {k.split("/", 1)[1]: data[k] for k in data.files if k.startswith("param/")}
        dyad_ll = data["dyad_loglik"] if "dyad_loglik" in data.files else None
        observed = data["observed"] if "observed" in data.files else None
        loglik = data["loglik"]
    return PosteriorDraws(info["model"], info["n"], samples, loglik, dyad_ll,
                          observed, info.get("meta", {}))


def _write_npz(path, arrays):
    # np.savez stamps entries with the current time; fixed stamps keep
    # reruns byte-identical
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]),
                                      allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
