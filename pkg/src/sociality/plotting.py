"""SVG figures for fit and evaluation outputs.

Figures are written with a fixed hash salt and no date metadata so that the
same inputs give byte-identical files.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .network import STAT_NAMES  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "sociality"

STAT_LABELS = {
    "density": "Density", "transitivity": "Transitivity", "assortativity": "Assortativity",
    "mean_geodesic": "Mean geodesic", "mean_degree": "Mean degree", "sd_degree": "SD degree",
}
EFFECT_COLOURS = {"negative": "tab:red", "null": "0.6", "positive": "tab:green"}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_ppc(reports, path):
    """One panel per statistic: posterior predictive mean (dot), 95% (thick)
    and 99% (thin) intervals per model, observed value as a dashed line.

    Parameters
    ----------
    reports : dict of str -> dict
        Model name to the ``statistics`` mapping of a PPC report.
    """
    models = list(reports)
    fig, axes = plt.subplots(2, 3, figsize=(10, 6))
    for ax, name in zip(axes.ravel(), STAT_NAMES):
        observed = None
        for x, m in enumerate(models):
            s = reports[m][name]
            observed = s["observed"]
            ax.plot([x, x], s["interval_99"], color="0.4", lw=1)
            ax.plot([x, x], s["interval_95"], color="0.1", lw=3)
            ax.plot(x, s["mean"], "o", color="k", ms=5)
        if observed is not None and np.isfinite(observed):
            ax.axhline(observed, color="tab:blue", ls="--", lw=1)
        ax.set_title(STAT_LABELS[name], fontsize=10)
        ax.set_xticks(range(len(models)))
        ax.set_xticklabels(models, fontsize=8)
        ax.set_xlim(-0.6, len(models) - 0.4)
    fig.tight_layout()
    return _save(fig, path)


def plot_roc(reports, path):
    """Per-fold ROC curves for each model with mean and sd of the AUC."""
    models = list(reports)
    fig, axes = plt.subplots(1, len(models), figsize=(3.2 * len(models), 3.2), squeeze=False)
    for ax, m in zip(axes[0], models):
        rep = reports[m]
        for f in rep["folds"]:
            if f.get("fpr"):
                ax.plot(f["fpr"], f["tpr"], lw=1)
        ax.plot([0, 1], [0, 1], color="0.6", ls=":", lw=1)
        ax.set_title(f"{m}\nAUC {rep['mean_auc']:.3f} (sd {rep['sd_auc']:.3f})", fontsize=9)
        ax.set_xlabel("False positive rate")
        ax.set_aspect("equal")
    axes[0, 0].set_ylabel("True positive rate")
    fig.tight_layout()
    return _save(fig, path)


def plot_elbo(elbo, path):
    elbo = np.asarray(elbo, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(np.arange(1, elbo.size + 1), elbo, marker=".", lw=1)
    ax.set_xlabel("Iteration")
    ax.set_ylabel("ELBO")
    fig.tight_layout()
    return _save(fig, path)


def plot_prior_theta(theta, path, bins=50):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(np.asarray(theta, dtype=float), bins=bins, range=(0, 1), density=True,
            color="0.7", edgecolor="0.3")
    ax.axhline(1.0, color="tab:blue", ls="--", lw=1)
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel("Density")
    fig.tight_layout()
    return _save(fig, path)


def plot_effects(delta, classes, path, level=0.95):
    """Posterior means and equal-tailed intervals of the sociality effects,
    coloured by whether the interval sits below, across or above zero."""
    delta = np.asarray(delta, dtype=float)
    mean = delta.mean(axis=0)
    lo, hi = np.quantile(delta, [(1 - level) / 2, (1 + level) / 2], axis=0)
    order = np.argsort(mean)
    fig, ax = plt.subplots(figsize=(6, 0.18 * delta.shape[1] + 1))
    for y, i in enumerate(order):
        c = EFFECT_COLOURS[classes[i]]
        ax.plot([lo[i], hi[i]], [y, y], color=c, lw=1.5)
        ax.plot(mean[i], y, "o", color=c, ms=3)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yticks(range(order.size))
    ax.set_yticklabels([str(i + 1) for i in order], fontsize=6)
    ax.set_xlabel(r"$\delta_i$")
    fig.tight_layout()
    return _save(fig, path)


def plot_coclustering(matrix, partition, path):
    """Coassignment matrix with actors ordered by the point partition."""
    matrix = np.asarray(matrix, dtype=float)
    order = np.lexsort((np.arange(len(partition)), partition))
    fig, ax = plt.subplots(figsize=(5, 4.4))
    im = ax.imshow(matrix[np.ix_(order, order)], vmin=0, vmax=1, cmap="Greys")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    return _save(fig, path)
