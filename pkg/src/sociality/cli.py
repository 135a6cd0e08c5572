"""Command-line interface.

Every command that writes files also writes ``manifest.json`` next to them
with the package version, the seed, the resolved configuration, its hash,
the checksums of the outputs, wall-clock timings and a timestamp.  Nothing
else written depends on the clock, so reruns with the same seed are
byte-identical apart from the manifest.
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import platform
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .baselines import DEFAULT_K
from .cavi import VariationalParams, vi_posterior_summary
from .draws import load_draws, save_draws
from .evaluation import (cocluster, credible_effect_classes, cross_validate,
                         posterior_predictive_check, prior_predictor_variance,
                         simulate_prior_theta, vi_cluster, waic_from_draws)
from .fitting import MODELS, PRESETS, ChainSettings, VISettings, fit
from .gibbs import Hyperparams, mcmc_diagnostics
from .network import MISSING, load_network, save_network, STAT_NAMES
from .simulation import SimStudyConfig, run_sim_study, simulate_network

log = logging.getLogger("sociality")

OUTPUT_ENV = "SOCIALITY_OUTPUT_DIR"
DEFAULT_OUTPUT = "sociality-out"

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialisation helpers

def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats
    to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "NA" if not math.isfinite(x) else repr(float(x))
    return str(x)


class Outputs:
    """Collects the files of one run and writes its manifest."""

    def __init__(self, directory, config, argv):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.argv = argv
        self.files = []
        self.timings = {}
        self.extra = {}

    def path(self, name):
        p = self.dir / name
        self.files.append(p)
        return p

    def json(self, name, obj):
        self.path(name).write_text(_dumps(obj))

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def manifest(self):
        cfg_text = json.dumps(_clean(self.config), sort_keys=True)
        outputs = {}
        for p in sorted(set(self.files)):
            if p.exists():
                outputs[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        doc = {
            "package": "sociality", "version": __version__,
            "seed": self.config.get("seed"),
            "command": self.argv,
            "config": self.config,
            "config_hash": hashlib.sha256(cfg_text.encode()).hexdigest(),
            "outputs": outputs,
            "timings_seconds": self.timings,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "python": platform.python_version(),
            "numpy": np.__version__,
            **self.extra,
        }
        (self.dir / "manifest.json").write_text(_dumps(doc))


# ---------------------------------------------------------------------------
# argument types

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _number(text):
    """Float that also accepts fractions such as ``1/3`` and ``inf``."""
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text}")


def _hyper(text):
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected a_sigma,b_sigma,a_tau,b_tau")
    try:
        return Hyperparams(*(_number(p.strip()) for p in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_list(text):
    try:
        return tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text}")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text}")


# ---------------------------------------------------------------------------
# parser

def _common(p):
    p.add_argument("--config", metavar="FILE", help="key = value file; flags take precedence")
    p.add_argument("--out", metavar="DIR",
                   help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p.add_argument("--no-plot", action="store_true", help="skip SVG figures")


def _network_args(p, required=True):
    p.add_argument("--input", required=required, metavar="PATH", help="network file")
    p.add_argument("--format", default="edgelist", choices=["edgelist", "matrix"])
    p.add_argument("--one-based", action="store_true", help="edge-list indices start at 1")
    p.add_argument("--n", dest="n_actors", type=_positive_int,
                   help="actor count for edge lists without an n= header")


def _chain_args(p):
    p.add_argument("--preset", choices=sorted(PRESETS), default="quick",
                   help="quick: 1100/100/10; full: 260000/10000/10 (25,000 kept)")
    p.add_argument("--iters", type=_positive_int, help="total sweeps (overrides preset)")
    p.add_argument("--burnin", type=_nonneg_int, help="burn-in sweeps (overrides preset)")
    p.add_argument("--thin", type=_positive_int, help="thinning interval (overrides preset)")


def _vi_args(p):
    p.add_argument("--tol", type=_number, default=1e-6)
    p.add_argument("--max-iters", type=_positive_int, default=10_000)
    p.add_argument("--clip", type=_number, default=3.0, help="bound on E[z]; inf disables")
    p.add_argument("--vi-draws", type=_positive_int, default=1000,
                   help="draws taken from the fitted factors for downstream evaluation")


def _model_args(p):
    p.add_argument("--method", choices=["mcmc", "vi"], default="mcmc")
    p.add_argument("--K", type=_positive_int,
                   help="latent dimension / classes (default 4 distance, eigen; 10 class)")
    p.add_argument("--hyper", type=_hyper, default=Hyperparams(),
                   help="sociality priors a_sigma,b_sigma,a_tau,b_tau (default 2,1/3,2,1/3)")
    _chain_args(p)
    _vi_args(p)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sociality", description="Bayesian sociality models for binary networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("fit", help="fit a model to a network")
    p.add_argument("model", choices=MODELS)
    _network_args(p)
    _model_args(p)
    _common(p)
    p.set_defaults(handler=cmd_fit)

    ev = sub.add_parser("eval", help="evaluate fits")
    esub = ev.add_subparsers(dest="task", required=True, metavar="TASK")

    p = esub.add_parser("waic", help="WAIC from a draw file")
    p.add_argument("--draws", required=True, metavar="PATH")
    _common(p)
    p.set_defaults(handler=cmd_waic)

    p = esub.add_parser("ppc", help="posterior predictive checks")
    p.add_argument("--draws", required=True, metavar="PATH")
    _network_args(p)
    p.add_argument("--replicates", type=_positive_int, default=1000)
    _common(p)
    p.set_defaults(handler=cmd_ppc)

    p = esub.add_parser("cv", help="cross-validated link prediction")
    p.add_argument("model", nargs="?", default="sociality", choices=MODELS)
    _network_args(p)
    p.add_argument("--folds", type=_positive_int, default=5)
    _model_args(p)
    _common(p)
    p.set_defaults(handler=cmd_cv)

    p = esub.add_parser("cluster", help="clustering of sociality effects")
    p.add_argument("--draws", metavar="PATH", help="sociality draw file")
    p.add_argument("--vi-params", metavar="PATH", help="params.json of a VI fit")
    p.add_argument("--max-k", type=_positive_int, default=10)
    p.add_argument("--level", type=_number, default=0.95)
    _common(p)
    p.set_defaults(handler=cmd_cluster)

    p = esub.add_parser("prior-sim", help="tie probabilities implied by the prior")
    p.add_argument("--hyper", type=_hyper, default=Hyperparams())
    p.add_argument("--samples", type=_positive_int, default=100_000)
    _common(p)
    p.set_defaults(handler=cmd_prior_sim)

    p = sub.add_parser("simulate", help="simulate a network from the sociality model")
    p.add_argument("--n", dest="n_actors", type=_positive_int, required=True)
    p.add_argument("--mu", type=_number, default=-2.0)
    p.add_argument("--tau2", type=_number, default=0.5)
    _common(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sim-study", help="timing and RMSE of both engines on simulated data")
    p.add_argument("--sizes", type=_int_list, default=(25,))
    p.add_argument("--reps", type=_nonneg_int, default=10)
    p.add_argument("--mu", type=_number, default=-2.0)
    p.add_argument("--tau2", type=_number, default=0.5)
    p.add_argument("--methods", default="mcmc,vi")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--hyper", type=_hyper, default=Hyperparams())
    _chain_args(p)
    _vi_args(p)
    _common(p)
    p.set_defaults(handler=cmd_sim_study)

    pl = sub.add_parser("plot", help="re-render figures from saved outputs")
    psub = pl.add_subparsers(dest="figure", required=True, metavar="FIGURE")
    p = psub.add_parser("ppc", help="PPC intervals; one or more MODEL=ppc.json")
    p.add_argument("reports", nargs="+", metavar="MODEL=PATH")
    _common(p)
    p.set_defaults(handler=cmd_plot_ppc)
    p = psub.add_parser("roc", help="ROC curves; one or more MODEL=cv.json")
    p.add_argument("reports", nargs="+", metavar="MODEL=PATH")
    _common(p)
    p.set_defaults(handler=cmd_plot_roc)
    p = psub.add_parser("elbo", help="ELBO trace from elbo.csv")
    p.add_argument("--trace", required=True, metavar="PATH")
    _common(p)
    p.set_defaults(handler=cmd_plot_elbo)
    p = psub.add_parser("effects", help="sociality effects with credible intervals")
    p.add_argument("--draws", required=True, metavar="PATH")
    p.add_argument("--level", type=_number, default=0.95)
    _common(p)
    p.set_defaults(handler=cmd_plot_effects)
    p = psub.add_parser("prior", help="histogram of prior tie probabilities (theta.csv)")
    p.add_argument("--samples", required=True, metavar="PATH")
    _common(p)
    p.set_defaults(handler=cmd_plot_prior)

    p = sub.add_parser("info", help="version, presets and defaults")
    p.set_defaults(handler=cmd_info)
    return parser


def _leaf_parsers(parser):
    """Every parser that owns a handler, so config defaults can reach them."""
    out = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                out.extend(_leaf_parsers(child))
    return out


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; keys may use dashes."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _apply_config(parser, cfg):
    """Install config values as parser defaults (string defaults go through
    each option's type, so validation matches the flags)."""
    used = set()
    for p in _leaf_parsers(parser):
        dests = {a.dest: a for a in p._actions}
        updates = {}
        for key, value in cfg.items():
            dest = {"n": "n_actors", "burn_in": "burnin", "iterations": "iters"}.get(key, key)
            if dest in dests:
                action = dests[dest]
                if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                    try:
                        value = _bool(value)
                    except argparse.ArgumentTypeError as exc:
                        raise UsageError(f"config key {key}: {exc}")
                updates[dest] = value
                action.required = False
                used.add(key)
        if updates:
            p.set_defaults(**updates)
    unknown = set(cfg) - used
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")


# ---------------------------------------------------------------------------
# shared steps

def _resolved(args):
    skip = {"handler", "config", "out", "log_level", "no_plot"}
    return {k: (v.as_dict() if hasattr(v, "as_dict") else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _outputs(args, argv):
    out = args.out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    return Outputs(out, _resolved(args), argv)


def _require_file(path, what):
    if path is None or not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return path


def _load_input(args):
    _require_file(args.input, "input network")
    return load_network(args.input, format=args.format, n=args.n_actors,
                        one_based=args.one_based)


def _chain(args):
    base = PRESETS[args.preset]
    try:
        return ChainSettings(args.iters if args.iters is not None else base.iterations,
                             args.burnin if args.burnin is not None else base.burn_in,
                             args.thin if args.thin is not None else base.thin)
    except ValueError as exc:
        raise UsageError(str(exc))


def _vi(args):
    return VISettings(args.tol, args.max_iters, args.clip, args.vi_draws)


def _check_model(model, method, K):
    if method == "vi" and model != "sociality":
        raise UsageError("--method vi is only available for the sociality model")
    if K is not None and model == "class" and K < 2:
        raise UsageError("the class model needs K >= 2")


def _fit(args, net, seed):
    hyper = args.hyper if args.model == "sociality" else None
    return fit(net, args.model, args.method, K=args.K, hyper=hyper, chain=_chain(args),
               vi=_vi(args), seed=seed)


def _posterior_summary(draws, level=0.95):
    lo, hi = (1 - level) / 2, (1 + level) / 2
    out = {}
    for name, x in draws.samples.items():
        if name in ("labels", "U", "block", "log_omega"):
            continue
        x = np.asarray(x, dtype=float)
        q = np.quantile(x, [lo, hi], axis=0)
        out[name] = {"mean": x.mean(axis=0), "sd": x.std(axis=0, ddof=1),
                     "lower": q[0], "upper": q[1]}
    return out


# ---------------------------------------------------------------------------
# commands

def cmd_fit(args, outputs):
    _check_model(args.model, args.method, args.K)
    net = _load_input(args)
    result = _fit(args, net, args.seed)
    outputs.timings["fit"] = result.seconds
    draws = result.draws
    for p in save_draws(draws, outputs.dir / "draws"):
        outputs.files.append(p)
    summary = {"model": args.model, "method": args.method, "n": net.n,
               "edges": net.n_edges, "missing_dyads": int((net.y == MISSING).sum()),
               "settings": result.settings}
    if result.vp is not None:
        vp, trace = result.vp, result.trace
        summary.update(posterior=vi_posterior_summary(vp), iterations=trace.iterations,
                       converged=trace.converged, final_elbo=trace.final_elbo,
                       clip_events=len(trace.clip_events))
        outputs.json("params.json", vp.as_dict())
        outputs.csv("elbo.csv", ["iteration", "elbo"],
                    [(i + 1, e) for i, e in enumerate(trace.elbo)])
        if not args.no_plot:
            from .plotting import plot_elbo
            plot_elbo(trace.elbo, outputs.path("elbo.svg"))
    else:
        summary["posterior"] = _posterior_summary(draws)
        summary["draws"] = draws.size
        if args.model == "sociality" and draws.size >= 100:
            summary["diagnostics"] = mcmc_diagnostics(draws)
        for key in ("accept_rate", "step", "alpha_accept_rate"):
            if key in draws.meta:
                summary[key] = draws.meta[key]
    outputs.json("summary.json", summary)
    print(f"fit {args.model} ({args.method}): wrote {outputs.dir}")


def _load_draws_arg(path):
    _require_file(Path(path).with_suffix(".npz") if Path(path).suffix != ".npz" else path,
                  "draw file")
    return load_draws(path)


def cmd_waic(args, outputs):
    draws = _load_draws_arg(args.draws)
    rep = waic_from_draws(draws)
    outputs.json("waic.json", {"model": draws.model, **rep.as_dict()})
    rows, cols = np.triu_indices(draws.n, 1)
    obs = draws.observed
    outputs.csv("waic_pointwise.csv", ["i", "j", "lppd", "p_waic"],
                zip(rows[obs], cols[obs], rep.pointwise_lppd, rep.pointwise_p))
    print(f"WAIC {rep.waic:.2f}  lppd {rep.lppd:.2f}  p_waic {rep.p_waic:.2f}")


def cmd_ppc(args, outputs):
    draws = _load_draws_arg(args.draws)
    net = _load_input(args)
    if net.n != draws.n:
        raise UsageError(f"network has {net.n} actors but the draws have {draws.n}")
    rep = posterior_predictive_check(draws, net, args.replicates, args.seed)
    outputs.json("ppc.json", {"model": draws.model, **rep.as_dict()})
    outputs.csv("ppc_replicates.csv", list(STAT_NAMES), rep.replicates.tolist())
    if not args.no_plot:
        from .plotting import plot_ppc
        plot_ppc({draws.model: _clean(rep.stats)}, outputs.path("ppc.svg"))
    for name in STAT_NAMES:
        s = rep.stats[name]
        print(f"{name:>14}: observed {s['observed']:.4g}  mean {s['mean']:.4g}  "
              f"tail {s['tail_probability']:.3f}")


def cmd_cv(args, outputs):
    _check_model(args.model, args.method, args.K)
    if args.folds < 2:
        raise UsageError("--folds must be at least 2")
    net = _load_input(args)
    t0 = time.perf_counter()
    rep = cross_validate(net, lambda train, rng: _fit(args, train, rng), args.folds, args.seed)
    outputs.timings["cv"] = time.perf_counter() - t0
    outputs.json("cv.json", {"model": args.model, "method": args.method, **rep.as_dict()})
    rows = []
    for f in rep.folds:
        rows.extend((f["fold"], x, y) for x, y in zip(f["fpr"], f["tpr"]))
    outputs.csv("roc.csv", ["fold", "fpr", "tpr"], rows)
    if not args.no_plot:
        from .plotting import plot_roc
        plot_roc({args.model: {"folds": rep.folds, "mean_auc": rep.mean_auc,
                               "sd_auc": rep.sd_auc}}, outputs.path("roc.svg"))
    print(f"mean AUC {rep.mean_auc:.4f} (sd {rep.sd_auc:.4f}) over "
          f"{rep.aucs.size} of {args.folds} folds")


def cmd_cluster(args, outputs):
    if (args.draws is None) == (args.vi_params is None):
        raise UsageError("give exactly one of --draws and --vi-params")
    if args.vi_params is not None:
        _require_file(args.vi_params, "VI parameter file")
        vp = VariationalParams.from_dict(json.loads(Path(args.vi_params).read_text()))
        try:
            labels = vi_cluster(vp, args.max_k)
        except ValueError as exc:
            raise UsageError(str(exc))
        outputs.json("cluster.json", {"source": "vi", "partition": labels,
                                      "n_clusters": int(np.unique(labels).size)})
        outputs.csv("partition.csv", ["actor", "cluster"], enumerate(labels))
        print(f"{np.unique(labels).size} clusters")
        return
    draws = _load_draws_arg(args.draws)
    if draws.model != "sociality":
        raise UsageError("clustering needs draws of the sociality model")
    delta = draws.samples["delta"]
    if args.max_k >= draws.n:
        raise UsageError(f"--max-k must be below the number of actors ({draws.n})")
    rep = cocluster(delta, args.max_k)
    doc = {"source": draws.meta.get("method", "mcmc"), **rep.as_dict()}
    if delta.shape[0] >= 100:
        classes = credible_effect_classes(delta, args.level)
        doc["effect_classes"] = {c: [int(i) for i in np.flatnonzero(classes == c)]
                                 for c in ("negative", "null", "positive")}
    outputs.json("cluster.json", doc)
    outputs.csv("partition.csv", ["actor", "cluster"], enumerate(rep.partition))
    if not args.no_plot:
        from .plotting import plot_coclustering, plot_effects
        plot_coclustering(rep.matrix, rep.partition, outputs.path("coclustering.svg"))
        if "effect_classes" in doc:
            plot_effects(delta, classes, outputs.path("effects.svg"), args.level)
    print(f"{rep.n_clusters} clusters in the point partition")


def cmd_prior_sim(args, outputs):
    theta = simulate_prior_theta(args.hyper, args.samples, args.seed)
    ks = stats.kstest(theta, "uniform")
    doc = {"hyper": args.hyper.as_dict(), "samples": args.samples,
           "predictor_variance": prior_predictor_variance(args.hyper),
           "ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
           "extreme_mass": float(np.mean(theta < 0.05) + np.mean(theta > 0.95)),
           "quantiles": dict(zip(["q05", "q25", "q50", "q75", "q95"],
                                 np.quantile(theta, [0.05, 0.25, 0.5, 0.75, 0.95])))}
    outputs.json("prior_sim.json", doc)
    outputs.csv("theta.csv", ["theta"], ((t,) for t in theta))
    if not args.no_plot:
        from .plotting import plot_prior_theta
        plot_prior_theta(theta, outputs.path("prior_theta.svg"))
    print(f"Var(eta) = {doc['predictor_variance']}; KS vs uniform D = {ks.statistic:.4f}")


def cmd_simulate(args, outputs):
    if args.n_actors < 3:
        raise UsageError("--n must be at least 3")
    if args.tau2 < 0:
        raise UsageError("--tau2 must be non-negative")
    net, delta = simulate_network(args.n_actors, args.mu, args.tau2, args.seed)
    save_network(net, outputs.path("network.txt"))
    outputs.csv("delta.csv", ["actor", "delta"], enumerate(delta))
    print(f"simulated n={net.n} with {net.n_edges} edges")


def cmd_sim_study(args, outputs):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    try:
        cfg = SimStudyConfig(args.mu, args.tau2, tuple(args.sizes), args.reps, methods,
                             args.seed, _chain(args), _vi(args), args.hyper, args.workers)
    except ValueError as exc:
        raise UsageError(str(exc))
    table, cells = run_sim_study(cfg)
    outputs.csv("sim_study.csv", ["n", "method", "replications", "failed", "mean_rmse"],
                [(r["n"], r["method"], r["replications"], r["failed"], r["mean_rmse"])
                 for r in table])
    outputs.csv("cells.csv", ["n", "replication", "method", "rmse", "error"],
                [(c["n"], c["replication"], c["method"], c["rmse"], c["error"] or "")
                 for c in cells])
    outputs.timings["cells"] = [{"n": c["n"], "replication": c["replication"],
                                 "method": c["method"], "seconds": c["seconds"]}
                                for c in cells]
    outputs.timings["mean_seconds"] = {f"{r['n']}/{r['method']}": r["mean_seconds"]
                                       for r in table}
    for r in table:
        print(f"n={r['n']:<5} {r['method']:<5} RMSE {r['mean_rmse']:.3f}  "
              f"time {r['mean_seconds']:.3f}s  ({r['replications']} ok, {r['failed']} failed)")


def _model_reports(specs):
    reports = {}
    for item in specs:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        _require_file(path, "report")
        reports[name] = json.loads(Path(path).read_text())
    return reports


def cmd_plot_ppc(args, outputs):
    from .plotting import plot_ppc
    reports = {k: v["statistics"] for k, v in _model_reports(args.reports).items()}
    plot_ppc(reports, outputs.path("ppc.svg"))
    print(f"wrote {outputs.dir / 'ppc.svg'}")


def cmd_plot_roc(args, outputs):
    from .plotting import plot_roc
    reports = _model_reports(args.reports)
    for name, rep in reports.items():
        rep = dict(rep)
        roc = Path(args.reports[list(reports).index(name)].split("=", 1)[-1]).with_name("roc.csv")
        folds = {f["fold"]: dict(f, fpr=[], tpr=[]) for f in rep["folds"]}
        if roc.is_file():
            with open(roc) as fh:
                for row in csv.DictReader(fh):
                    f = folds[int(row["fold"])]
                    f["fpr"].append(float(row["fpr"]))
                    f["tpr"].append(float(row["tpr"]))
        rep["folds"] = list(folds.values())
        rep["mean_auc"] = rep["mean_auc"] if rep["mean_auc"] is not None else math.nan
        rep["sd_auc"] = rep["sd_auc"] if rep["sd_auc"] is not None else math.nan
        reports[name] = rep
    plot_roc(reports, outputs.path("roc.svg"))
    print(f"wrote {outputs.dir / 'roc.svg'}")


def cmd_plot_elbo(args, outputs):
    from .plotting import plot_elbo
    _require_file(args.trace, "ELBO trace")
    with open(args.trace) as fh:
        elbo = [float(r["elbo"]) for r in csv.DictReader(fh)]
    plot_elbo(elbo, outputs.path("elbo.svg"))
    print(f"wrote {outputs.dir / 'elbo.svg'}")


def cmd_plot_effects(args, outputs):
    from .plotting import plot_effects
    draws = _load_draws_arg(args.draws)
    if draws.model != "sociality":
        raise UsageError("effects plot needs draws of the sociality model")
    delta = draws.samples["delta"]
    if delta.shape[0] < 100:
        raise UsageError("need at least 100 draws for credible intervals")
    plot_effects(delta, credible_effect_classes(delta, args.level),
                 outputs.path("effects.svg"), args.level)
    print(f"wrote {outputs.dir / 'effects.svg'}")


def cmd_plot_prior(args, outputs):
    from .plotting import plot_prior_theta
    _require_file(args.samples, "sample file")
    with open(args.samples) as fh:
        theta = [float(r["theta"]) for r in csv.DictReader(fh)]
    plot_prior_theta(theta, outputs.path("prior_theta.svg"))
    print(f"wrote {outputs.dir / 'prior_theta.svg'}")


def cmd_info(args, outputs=None):
    print(f"sociality {__version__}")
    print(f"models: {', '.join(MODELS)}; VI available for sociality only")
    print(f"default K: {', '.join(f'{k}={v}' for k, v in DEFAULT_K.items())}")
    for name, c in sorted(PRESETS.items()):
        print(f"preset {name}: iterations={c.iterations} burn_in={c.burn_in} "
              f"thin={c.thin} kept={c.kept}")
    h = Hyperparams()
    print(f"default sociality priors: a_sigma={h.a_sigma} b_sigma={h.b_sigma:.6g} "
          f"a_tau={h.a_tau} b_tau={h.b_tau:.6g}")
    print(f"output directory: ${OUTPUT_ENV} = {os.environ.get(OUTPUT_ENV, '(unset)')}, "
          f"fallback ./{DEFAULT_OUTPUT}")


# ---------------------------------------------------------------------------
# entry point

def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            if not Path(known.config).is_file():
                raise UsageError(f"config file not found: {known.config}")
            _apply_config(parser, read_config(known.config))
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_USAGE
        logging.basicConfig(level=getattr(logging, getattr(args, "log_level", "WARNING")),
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if args.handler is cmd_info:
            cmd_info(args)
            return EXIT_OK
        outputs = _outputs(args, argv)
        args.handler(args, outputs)
        outputs.manifest()
        return EXIT_OK
    except UsageError as exc:
        print(f"sociality: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"sociality: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
