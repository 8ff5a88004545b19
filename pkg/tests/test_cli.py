import os

import pytest

from maxwell_ddm_nn.cli import dispatch

SMALL = """[mesh]
n = 4
[train]
hidden = 6
max_iter = 30
schedule = 0.001:20, 0.0001:10
[output]
sample_grid = 5
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return str(path)


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_usage_errors(capsys):
    code, _, err = run(capsys)
    assert code == 2 and err.startswith("error: usage:")
    code, _, err = run(capsys, "frobnicate")
    assert code == 2 and err.count("\n") == 1
    code, _, err = run(capsys, "train", "--net", "u11")
    assert code == 2


def test_mesh_info(capsys, tmp_path):
    code, out, _ = run(capsys, "mesh-info", "--n", "2", "--out", str(tmp_path))
    assert code == 0
    assert "cells = 4" in out and "subdomain 1" in out


def test_bad_config_reports_invalid_argument(capsys, tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[mesh]\nn = 3\n")
    code, _, err = run(capsys, "ddm", "--config", str(p), "--out", str(tmp_path))
    assert code == 1 and err.startswith("error: invalid-argument:")
    code, _, err = run(capsys, "solve", "--config", str(tmp_path / "missing.ini"))
    assert code == 1 and err.startswith("error: io:")


def test_output_precedence(capsys, cfg, tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("MAXWELL_DDM_NN_OUT", str(env_dir))
    assert run(capsys, "ddm", "--config", cfg, "--steps", "2")[0] == 0
    assert (env_dir / "ddm_history.csv").exists()
    cli_dir = tmp_path / "from_cli"
    assert run(capsys, "ddm", "--config", cfg, "--steps", "2", "--out", str(cli_dir))[0] == 0
    assert (cli_dir / "ddm_step2_real.vtk").exists()


def test_train_before_data_fails(capsys, cfg, tmp_path):
    code, _, err = run(capsys, "train", "--config", cfg, "--out", str(tmp_path))
    assert code == 1 and "gen-data" in err


def test_full_workflow(capsys, cfg, tmp_path):
    out = str(tmp_path)
    assert run(capsys, "solve", "--config", cfg, "--out", out)[0] == 0
    assert (tmp_path / "monolithic.csv").exists()
    code, text, _ = run(capsys, "gen-data", "--config", cfg, "--out", out)
    assert code == 0 and "rows=40" in text and "rows=8" in text
    assert (tmp_path / "data_01_train.csv").read_text().startswith("# direction 01")
    code, text, _ = run(capsys, "train", "--config", cfg, "--out", out, "--activation", "sigmoid,relu")
    assert code == 0
    for name in ("u01", "u10", "u01_relu", "u10_relu"):
        assert (tmp_path / f"{name}.model").exists()
        assert (tmp_path / f"{name}_loss.csv").exists()
    report = (tmp_path / "activation_report.txt").read_text().splitlines()
    assert len(report) == 4 and report[0].startswith("u01:")
    code, text, _ = run(capsys, "nn-solve", "--config", cfg, "--out", out)
    assert code == 0
    rep = (tmp_path / "nn_report_wl3.txt").read_text()
    assert "jump_nn" in rep and "rel_l2_quadrature" in rep
    code, text, _ = run(capsys, "compare", "--config", cfg, "--out", out, "--activation", "relu")
    assert code == 0 and "jump_ddm" in text
    code, text, _ = run(capsys, "export", "--config", cfg, "--out", out, "--steps", "3", "--grid", "4")
    assert code == 0 and os.path.exists(tmp_path / "ddm_step3_abs.vtk")


def test_missing_model(capsys, cfg, tmp_path):
    code, _, err = run(capsys, "nn-solve", "--config", cfg, "--out", str(tmp_path))
    assert code == 1 and err.startswith("error: io:")
