import json
import subprocess
import sys

import pytest

from sociality import __version__
from sociality.cli import main, read_config
from sociality.network import save_network
from sociality.simulation import simulate_network


@pytest.fixture
def net_file(tmp_path):
    net, _ = simulate_network(16, -1.0, 0.5, seed=2)
    p = tmp_path / "net.txt"
    save_network(net, p)
    return p


def _outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "manifest.json"}


def test_info(capsys):
    assert main(["info"]) == 0
    out = capsys.readouterr().out
    assert __version__ in out and "260000" in out


def test_usage_errors(tmp_path, net_file, capsys):
    assert main([]) == 2
    assert main(["fit", "sociality", "--input", str(net_file), "--bogus"]) == 2
    assert main(["fit", "sociality", "--input", str(tmp_path / "nope.txt")]) == 2
    assert "not found" in capsys.readouterr().err
    assert main(["fit", "class", "--method", "vi", "--input", str(net_file),
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["fit", "sociality", "--input", str(net_file), "--iters", "105",
                 "--burnin", "0", "--thin", "10", "--out", str(tmp_path / "o")]) == 2
    assert main(["fit", "sociality", "--input", str(net_file), "--config",
                 str(tmp_path / "missing.cfg")]) == 2


def test_runtime_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1 1\n1 0 0\n")  # conflicting duplicate
    assert main(["fit", "sociality", "--input", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "conflicting" in capsys.readouterr().err


def test_fit_vi_outputs(tmp_path, net_file):
    out = tmp_path / "vi"
    assert main(["fit", "sociality", "--method", "vi", "--input", str(net_file),
                 "--out", str(out), "--vi-draws", "200"]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"params.json", "elbo.csv", "elbo.svg", "summary.json", "draws.npz",
            "draws.json", "manifest.json"} <= names
    lines = (out / "elbo.csv").read_text().splitlines()
    assert lines[0] == "iteration,elbo" and len(lines) > 2
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 0 and man["version"] == __version__
    assert len(man["config_hash"]) == 64
    assert "fit" in man["timings_seconds"]
    assert set(man["outputs"]) == names - {"manifest.json"}


def test_same_seed_byte_identical(tmp_path, net_file):
    args = ["fit", "sociality", "--input", str(net_file), "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert _outputs(tmp_path / "a") == _outputs(tmp_path / "b")
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["config_hash"] == mb["config_hash"] and ma["outputs"] == mb["outputs"]
    assert main(["fit", "sociality", "--input", str(net_file), "--seed", "8",
                 "--out", str(tmp_path / "c")]) == 0
    assert _outputs(tmp_path / "a")["draws.npz"] != _outputs(tmp_path / "c")["draws.npz"]


def test_config_file_and_flag_precedence(tmp_path, net_file):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# quick run\ninput = {net_file}\nseed = 3\niters = 300\n"
                   "burn-in = 100\nthin = 2\nno_plot = true\n")
    assert read_config(cfg)["burn_in"] == "100"
    assert main(["fit", "sociality", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["config"]["seed"] == 3 and man["config"]["iters"] == 300
    assert main(["fit", "sociality", "--config", str(cfg), "--seed", "4",
                 "--out", str(tmp_path / "b")]) == 0
    man = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert man["config"]["seed"] == 4
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert summary["draws"] == 100
    cfg.write_text("colour = blue\n")
    assert main(["fit", "sociality", "--config", str(cfg), "--input", str(net_file)]) == 2
    cfg.write_text("iters = many\n")
    assert main(["fit", "sociality", "--config", str(cfg), "--input", str(net_file)]) == 2


def test_output_dir_from_environment(tmp_path, net_file, monkeypatch):
    monkeypatch.setenv("SOCIALITY_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["simulate", "--n", "6", "--seed", "1"]) == 0
    assert (tmp_path / "env" / "network.txt").exists()
    assert (tmp_path / "env" / "manifest.json").exists()


def test_eval_pipeline(tmp_path, net_file):
    fitdir = tmp_path / "fit"
    assert main(["fit", "sociality", "--input", str(net_file), "--out", str(fitdir)]) == 0
    draws = str(fitdir / "draws.npz")
    assert main(["eval", "waic", "--draws", draws, "--out", str(tmp_path / "w")]) == 0
    w = json.loads((tmp_path / "w" / "waic.json").read_text())
    assert w["waic"] == pytest.approx(-2 * (w["lppd"] - w["p_waic"]))
    assert main(["eval", "ppc", "--draws", draws, "--input", str(net_file),
                 "--replicates", "50", "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "ppc.svg").exists()
    assert main(["eval", "cluster", "--draws", draws, "--max-k", "5",
                 "--out", str(tmp_path / "c")]) == 0
    assert main(["eval", "cluster", "--draws", draws, "--max-k", "50",
                 "--out", str(tmp_path / "c2")]) == 2
    assert main(["eval", "cv", "--input", str(net_file), "--folds", "5", "--iters", "300",
                 "--burnin", "100", "--thin", "2", "--out", str(tmp_path / "cv")]) == 0
    cv = json.loads((tmp_path / "cv" / "cv.json").read_text())
    assert len(cv["folds"]) == 5
    assert main(["eval", "prior-sim", "--samples", "2000", "--out", str(tmp_path / "ps")]) == 0
    ps = json.loads((tmp_path / "ps" / "prior_sim.json").read_text())
    assert ps["predictor_variance"] == pytest.approx(1.0)
    assert main(["plot", "ppc", f"sociality={tmp_path / 'p' / 'ppc.json'}",
                 "--out", str(tmp_path / "pl")]) == 0
    assert main(["plot", "roc", f"sociality={tmp_path / 'cv' / 'cv.json'}",
                 "--out", str(tmp_path / "pl")]) == 0
    assert main(["plot", "prior", "--samples", str(tmp_path / "ps" / "theta.csv"),
                 "--out", str(tmp_path / "pl")]) == 0
    assert {"ppc.svg", "roc.svg", "prior_theta.svg"} <= {p.name for p in (tmp_path / "pl").iterdir()}


def test_baseline_fit_and_sim_study(tmp_path, net_file):
    assert main(["fit", "class", "--K", "3", "--input", str(net_file), "--iters", "200",
                 "--burnin", "100", "--thin", "1", "--out", str(tmp_path / "cl")]) == 0
    s = json.loads((tmp_path / "cl" / "summary.json").read_text())
    assert s["settings"]["K"] == 3
    assert main(["sim-study", "--sizes", "8", "--reps", "1", "--out", str(tmp_path / "ss")]) == 0
    rows = (tmp_path / "ss" / "sim_study.csv").read_text().splitlines()
    assert rows[0] == "n,method,replications,failed,mean_rmse" and len(rows) == 3
    man = json.loads((tmp_path / "ss" / "manifest.json").read_text())
    assert "mean_seconds" in man["timings_seconds"]


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "sociality.cli", "simulate", "--n", "5",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "sociality.cli", "fit"], capture_output=True,
                       text=True)
    assert r.returncode == 2 and "usage" in r.stderr
