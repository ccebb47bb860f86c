import xml.etree.ElementTree as ET

import pytest

from wcsmooth.cli import main, read_config
from wcsmooth.experiments import read_dataset
from wcsmooth.solvers import TRACE_COLUMNS, Trace

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def robust(tmp_path):
    path = tmp_path / "d.txt"
    assert main(["gen", "--problem", "robust", "--m", "4", "--n", "2", "--kappa", "1", "--p", "0", "--h", "quad",
                 "--seed", "7", "--out", str(path)]) == 0
    return path


@pytest.fixture
def pwq(tmp_path):
    path = tmp_path / "q.txt"
    assert main(["gen", "--problem", "pwq", "--m", "5", "--n", "20", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_gen_robust(robust, capsys):
    ds = read_dataset(robust)
    assert ds.f_star == 0.0
    assert (ds.m, ds.n) == (4, 2)


def test_gen_pwq(pwq):
    import numpy as np

    ds = read_dataset(pwq)
    assert ds.As.shape == (5, 20, 20)
    for A in ds.As:
        assert np.linalg.eigvalsh(A).min() >= -1e-10


def test_gen_missing_kappa(tmp_path, capsys):
    code = main(["gen", "--problem", "robust", "--m", "4", "--n", "2", "--p", "0", "--h", "quad", "--seed", "7",
                 "--out", str(tmp_path / "x.txt")])
    assert code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["gen", "--problem", "robust", "--m", "4"],
    ["gen", "--problem", "robust", "--m", "four", "--n", "2", "--seed", "1"],
    ["run", "--bogus"],
    ["nope"],
])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_run_gm_writes_trace(robust, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["run", "--algo", "gm", "--data", str(robust), "--alpha0", "0.1", "--seed", "3",
                 "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert out.with_suffix(".config.txt").exists()
    assert out.with_suffix(".summary.csv").exists()


def test_run_agls_sipp_line_search(pwq, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["run", "--algo", "agls-sipp", "--smoother", "softmax", "--eta", "0.8", "--data", str(pwq),
                 "--out", str(out)]) == 0
    steps = Trace.from_csv(out).column("ls_steps")
    assert max(steps[1:]) > 0


@pytest.mark.parametrize("algo", ["gm", "sspg", "asgd-sipp", "agls-sipp"])
def test_run_is_deterministic(robust, tmp_path, algo):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["run", "--algo", algo, "--data", str(robust), "--seed", "2", "--batch", "1"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("algo, smoother", [("agls", "huber"), ("sspg", "softmax"), ("agls", None)])
def test_incompatible_algo_smoother(robust, tmp_path, algo, smoother, capsys):
    argv = ["run", "--algo", algo, "--data", str(robust), "--out", str(tmp_path / "t.csv")]
    if smoother:
        argv += ["--smoother", smoother]
    assert main(argv) == 2
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize("suite", ["gradients", "sandwich", "prox", "rates"])
def test_check_suites_pass(suite, capsys):
    assert main(["check", "--suite", suite]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])


def test_plot_svg(robust, tmp_path):
    traces = []
    for algo in ("gm", "ngd"):
        out = tmp_path / f"{algo}.csv"
        assert main(["run", "--algo", algo, "--data", str(robust), "--out", str(out)]) == 0
        traces.append(f"{algo}={out}")
    svg = tmp_path / "cmp.svg"
    assert main(["plot", *traces, "--out", str(svg), "--x", "oracle_count"]) == 0
    root = ET.parse(svg).getroot()
    assert root.tag == SVG + "svg"
    assert len(root.findall(f".//{SVG}polyline")) == 2


def test_run_plot_flag(robust, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["run", "--algo", "gm", "--data", str(robust), "--plot", "--out", str(out)]) == 0
    root = ET.parse(out.with_suffix(".svg")).getroot()
    assert len(root.findall(f".//{SVG}polyline")) == 1


def test_config_precedence(robust, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# overrides\nalpha0 = 1.0\nseed=5\nbudget=800\n")
    out = tmp_path / "t.csv"
    assert main(["run", "--algo", "gm", "--data", str(robust), "--config", str(cfg), "--seed", "9",
                 "--out", str(out)]) == 0
    resolved = read_config_lines(out.with_suffix(".config.txt"))
    assert resolved["alpha0"] == "1.0"
    assert resolved["seed"] == "9"
    assert resolved["budget"] == "800"
    assert resolved["schedule"] == "sqrtK"


def read_config_lines(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def test_config_rejects_unknown_key(robust, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("nonsense=1\n")
    assert main(["run", "--algo", "gm", "--data", str(robust), "--config", str(cfg),
                 "--out", str(tmp_path / "t.csv")]) == 2


def test_read_config_strips_comments(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("rho-hat = 2.5  # trailing\n\n")
    assert read_config(cfg) == {"rho_hat": "2.5"}


def test_sweep_cli(robust, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--algo", "gm", "--data", str(robust), "--grid", "0.1,1", "--seeds", "0,1",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha0,seed,iters,oracles,final_f,reason"
    assert len(lines) == 5
    assert main(["sweep", "--algo", "gm", "--data", str(robust), "--grid", "", "--out", str(out)]) == 2


def test_missing_data_file_is_runtime_error(tmp_path):
    assert main(["run", "--algo", "gm", "--data", str(tmp_path / "none.txt"), "--out",
                 str(tmp_path / "t.csv")]) == 3
