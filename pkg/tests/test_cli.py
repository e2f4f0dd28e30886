import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from wynercap.cli import main

CONFIGS = Path(__file__).parents[1] / "configs"
GOLDEN = float(np.log((3 + np.sqrt(5)) / 2))


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _by_metric(text):
    return {r["metric"]: r for r in _rows(text)}


def _write(tmp_path, body, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


def test_nonfading_subcommand(capsys):
    assert main(["nonfading", "--kind", "soft_handoff", "--alpha", "1", "--lam", "1"]) == 0
    row = _by_metric(capsys.readouterr().out)["nonfading"]
    assert float(row["value_nats"]) == pytest.approx(GOLDEN, abs=1e-12)
    assert main(["nonfading", "--K", "10", "--rho", "10", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert abs(data["rows"][0]["value_nats"] - 4.72) < 0.005


def test_capacity_subcommand(capsys):
    argv = ["capacity", "--model", "soft_handoff", "--alpha", "1", "--samples", "2000"]
    assert main(argv) == 0
    rows = _by_metric(capsys.readouterr().out)
    assert abs(float(rows["capacity_limit"]["value_nats"]) - GOLDEN) < 2e-3
    assert {"information_lower", "hadamard_upper"} <= set(rows)


def test_bounds_subcommand(capsys):
    argv = ["bounds", "--d", "2", "--samples", "2000", "--p", "1", "2", "--truncation", "8"]
    assert main(argv) == 0
    rows = _by_metric(capsys.readouterr().out)
    assert {"p_step[N,p=1]", "p_step[N,p=2]", "one_step_closed",
            "truncation_lower[n=8]", "truncation_upper[n=8]"} <= set(rows)
    assert all(r["stderr"] != "" for r in rows.values())


def test_highsnr_subcommand(capsys):
    assert main(["highsnr", "--d", "1", "--samples", "3000", "--lifted", "--rho", "100"]) == 0
    rows = _by_metric(capsys.readouterr().out)
    assert float(rows["S_inf"]["value_nats"]) == 1.0
    assert {"L_inf", "L_inf_lifted", "high_snr_affine"} <= set(rows)


def test_domain_subcommand(capsys):
    assert main(["domain", "--alpha", "0.2", "0.4", "--beta", "0.2", "--samples", "1000"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4
    f = [float(r["value_nats"]) for r in rows if r["metric"].startswith("f_p")]
    assert f[0] <= f[1]


def test_verify_closedforms_passes(capsys):
    assert main(["verify", "closedforms"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "[PASS]" in out


def test_verify_identities_passes(capsys):
    assert main(["verify", "identities", "--seed", "2"]) == 0
    assert "[FAIL]" not in capsys.readouterr().out


def test_verify_failure_exit(capsys, monkeypatch):
    from wynercap import verify

    monkeypatch.setitem(verify.SUITES, "closedforms", lambda: [verify.Check("broken", 1.0, 0.1)])
    assert main(["verify", "closedforms"]) == 1
    assert "[FAIL] broken" in capsys.readouterr().out


def test_run_empty_sweep_is_machine_readable_error(tmp_path, capsys):
    cfg = _write(tmp_path, 'experiment = "custom"\n[sweep]\n')
    assert main(["run", "--config", cfg]) != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ConfigError"
    assert "sweep" in err["error"]["message"]


def test_run_without_config(capsys, monkeypatch):
    monkeypatch.delenv("WYNERCAP_CONFIG", raising=False)
    assert main(["run"]) == 2
    assert "config" in json.loads(capsys.readouterr().err)["error"]["message"]


def test_run_nonfading_comparator(tmp_path, capsys):
    cfg = _write(tmp_path, '\n'.join([
        'experiment = "bounds_vs_K_d2"', 'samples = 1000',
        '[sweep]', 'K = [1]', 'lam = [1.0]',
        '[metrics]', 'list = ["nonfading", "information"]', '']))
    out = tmp_path / "out.csv"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    summary = capsys.readouterr().out
    assert "bounds_vs_K_d2" in summary
    row = _by_metric(out.read_text())["nonfading"]
    assert abs(float(row["value_nats"]) - 1.06) < 0.005


def test_run_byte_identical_across_threads(tmp_path, capsys):
    cfg = str(CONFIGS / "custom_example.toml")
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}.csv"
        assert main(["run", "--config", cfg, "--samples", "500", "--threads", threads,
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert b"wall_time_s" not in outs[0]


def test_env_overrides(tmp_path, capsys, monkeypatch):
    cfg = _write(tmp_path, '\n'.join([
        'experiment = "custom"', 'samples = 1000',
        '[sweep]', 'lam = [1.0]', '[metrics]', 'list = ["information"]', '']))
    monkeypatch.setenv("WYNERCAP_CONFIG", cfg)
    monkeypatch.setenv("WYNERCAP_FORMAT", "json")
    assert main(["run"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["rows"]) == 2
    # flags win over the environment
    assert main(["run", "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("experiment,point,")
    monkeypatch.setenv("WYNERCAP_SEED", "not-a-number")
    assert main(["run"]) == 2


def test_run_domain_grid_flags_point(tmp_path, capsys):
    out = tmp_path / "domain.csv"
    assert main(["run", "--config", str(CONFIGS / "domain_D.toml"), "--threads", "4",
                 "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert len(rows) == 2 * 400
    flag = [r for r in rows if r["metric"] == "in_domain"
            and float(r["alpha"]) == 0.4 and float(r["beta"]) == 0.4]
    assert len(flag) == 1 and float(flag[0]["value_nats"]) == 1.0


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "wynercap.cli", "nonfading"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("experiment,")


def test_fading_column_reflects_model(capsys):
    assert main(["nonfading"]) == 0
    assert _rows(capsys.readouterr().out)[0]["fading"] == "none"
    assert main(["bounds", "--model", "asym_wyner_d2", "--alpha", "0.3", "--beta", "0.3",
                 "--samples", "1000", "--p", "1", "--truncation", "4"]) == 0
    assert {r["fading"] for r in _rows(capsys.readouterr().out)} == {"rayleigh"}
    assert main(["bounds", "--model", "wyner_symmetric", "--alpha", "0.5", "--fading", "rayleigh",
                 "--samples", "1000", "--p", "1", "--truncation", "4"]) == 0
    assert {r["fading"] for r in _rows(capsys.readouterr().out)} == {"rayleigh"}
