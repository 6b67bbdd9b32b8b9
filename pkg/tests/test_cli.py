import json

import numpy as np
import pytest

from mra_lab import cli
from mra_lab.fisher import CheckResult, CheckSuite


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


BASE = {
    "group": {"kind": "diag_signs", "d": 2},
    "theta_star": [1.5, 0.0],
    "seed": 31415,
}


def test_version_command(capsys):
    assert cli.main(["version"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["name"] == "mra-lab"
    assert "element_order" in doc


def test_sample_writes_csv(tmp_path, capsys):
    cfg = write_config(tmp_path, {**BASE, "sample": {"n": 25}})
    out = tmp_path / "data.csv"
    assert cli.main(["sample", "--config", cfg, "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 25
    assert len(rows[0].split(",")) == 2
    err = capsys.readouterr().err
    assert "resolved config" in err and "31415" in err


def test_sample_writes_binary(tmp_path):
    cfg = write_config(tmp_path, {**BASE, "sample": {"n": 10}})
    out = tmp_path / "data.bin"
    assert cli.main(["sample", "--config", cfg, "--out", str(out)]) == 0
    assert out.read_bytes()[:4] == b"MRA1"


def test_sample_requires_block(tmp_path):
    cfg = write_config(tmp_path, BASE)
    assert cli.main(["sample", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


def test_seed_override_changes_output(tmp_path):
    cfg = write_config(tmp_path, {**BASE, "sample": {"n": 20}})
    a, b, c = (tmp_path / name for name in ("a.csv", "b.csv", "c.csv"))
    cli.main(["sample", "--config", cfg, "--out", str(a)])
    cli.main(["sample", "--config", cfg, "--out", str(b), "--seed", "999"])
    cli.main(["sample", "--config", cfg, "--out", str(c), "--seed", "999"])
    assert a.read_bytes() != b.read_bytes()
    assert b.read_bytes() == c.read_bytes()


def test_estimate_round_trip(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {**BASE, "sample": {"n": 3000}, "estimate": {"restarts": 3, "max_iter": 300}},
    )
    data = tmp_path / "data.csv"
    cli.main(["sample", "--config", cfg, "--out", str(data)])
    capsys.readouterr()
    assert cli.main(["estimate", "--config", cfg, "--data", str(data)]) == 0
    doc = json.loads(capsys.readouterr().out)
    theta_hat = np.abs(np.array(doc["theta_hat"]))
    assert abs(theta_hat[0] - 1.5) < 0.25
    assert theta_hat[1] < 0.35
    assert doc["converged"] is True
    assert doc["config"]["estimate"]["restarts"] == 3


def test_fisher_command(tmp_path, capsys):
    cfg = write_config(tmp_path, {**BASE, "fisher": {"n_mc": 20000}})
    assert cli.main(["fisher", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["null_space_match"]["passed"] is True
    assert doc["null_space_match"]["null_dim_fisher"] == 1
    assert len(doc["fisher"]["matrix"]) == 4
    assert doc["stabilizer"]["degree"] == 2


def test_verify_geometry_exits_zero(tmp_path, capsys):
    cfg = write_config(tmp_path, {**BASE, "fisher": {"n_mc": 15000}})
    assert cli.main(["verify-geometry", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] is True
    names = [c["name"] for c in doc["checks"]]
    assert "mean_score_zero" in names and "variance_lower_bound" in names


def test_verify_geometry_exit_one_on_failure(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, {**BASE, "fisher": {"n_mc": 15000}})

    def fake_checks(model, report, n_mc, gen, fd_step=0.1):
        return CheckSuite(
            checks=[CheckResult("mean_score_zero", False, 1.0, 0.1)],
            n_mc=n_mc,
            fd_step=fd_step,
        )

    monkeypatch.setattr(cli, "geometry_checks", fake_checks)
    assert cli.main(["verify-geometry", "--config", cfg]) == 1
    assert "failed checks" in capsys.readouterr().err


def test_rates_command_writes_files(tmp_path, capsys):
    doc = {
        **BASE,
        "estimate": {"restarts": 2, "max_iter": 150, "rel_tol": 1e-8},
        "rates": {"n_grid": [30, 60, 120, 240], "trials": 50},
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "exp" / "result"
    out.parent.mkdir()
    assert cli.main(["rates", "--config", cfg, "--out", str(out), "--workers", "1"]) == 0
    csv_text = (out.with_suffix(".csv")).read_text()
    assert csv_text.startswith("n,trial,e_fast,e_slow,rho,loglik")
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["slopes"]["fast"]["fitted"] is True
    png = out.with_suffix(".png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_rates_requires_block(tmp_path):
    cfg = write_config(tmp_path, BASE)
    assert cli.main(["rates", "--config", cfg, "--out", str(tmp_path / "r")]) == 2


def test_bad_configs_exit_two(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert cli.main(["fisher", "--config", missing]) == 2
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert cli.main(["fisher", "--config", str(bad_json)]) == 2
    unknown_key = write_config(tmp_path, {**BASE, "extra": 1}, "unknown.json")
    assert cli.main(["fisher", "--config", unknown_key]) == 2
    assert "unknown" in capsys.readouterr().err
    zero_trials = write_config(
        tmp_path,
        {**BASE, "rates": {"n_grid": [30, 60, 120, 240], "trials": 0}},
        "zero.json",
    )
    assert cli.main(["rates", "--config", zero_trials, "--out", str(tmp_path / "r")]) == 2
    wrong_theta = write_config(tmp_path, {**BASE, "theta_star": [1.0]}, "short.json")
    assert cli.main(["fisher", "--config", wrong_theta]) == 2


def test_emitted_json_reparses_and_is_stable(tmp_path, capsys):
    cfg = write_config(tmp_path, {**BASE, "fisher": {"n_mc": 5000}})
    cli.main(["fisher", "--config", cfg])
    first = capsys.readouterr().out
    cli.main(["fisher", "--config", cfg])
    second = capsys.readouterr().out
    assert first == second
    json.loads(first)


def test_console_script_installed():
    import shutil
    import subprocess

    exe = shutil.which("mra-lab")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["name"] == "mra-lab"
