import json

import numpy as np
import pytest

from sgmlab.cli import load_config, main
from sgmlab.core import DomainError, Trajectory
from sgmlab.io import config_hash, fmt, read_checkpoint, write_checkpoint, write_json


def test_checkpoint_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    tr = Trajectory(rng.standard_normal((7, 16)) * 1e-7, np.linspace(0, 0.3, 7), np.pi)
    path = tmp_path / "c.csv"
    write_checkpoint(path, tr, "ux", {"N": "999", "note": "x"})
    back, meta = read_checkpoint(path)
    assert np.array_equal(back.data, tr.data) and np.array_equal(back.times, tr.times)
    assert back.L == tr.L
    assert meta["kind"] == "ux" and meta["N"] == "16" and meta["config_N"] == "999"


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("t,u_0\n0,1\n")
    with pytest.raises(DomainError):
        read_checkpoint(path)
    with pytest.raises(DomainError):
        write_checkpoint(path, Trajectory(np.zeros((2, 8)), [0, 1], 1.0), "v")


def test_fmt_and_json_handle_non_finite(tmp_path):
    assert fmt(float("inf")) == "inf" and fmt(float("nan")) == "nan" and fmt(True) == "1"
    assert float(fmt(0.1)) == 0.1
    write_json(tmp_path / "a.json", {"b": np.float64("inf"), "a": [np.int64(2)]})
    assert json.loads((tmp_path / "a.json").read_text()) == {"a": [2], "b": "inf"}


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": 2.5}) == config_hash({"b": 2.5, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_load_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "sim.cfg"
    cfg_file.write_text("N = 32\ndt = 0.01\n")
    cfg, raw = load_config("simulate", cfg_file, ["T=0.05"])
    assert cfg["N"] == 32 and cfg["dt"] == 0.01 and cfg["T"] == 0.05 and raw["T"] == "0.05"


def _run(tmp_path, name, *args):
    out = tmp_path / name
    return main(list(args) + ["--out", str(out)]), out


SMALL_SIM = ["simulate", "--set", "N=32", "--set", "dt=0.001", "--set", "T=0.1",
             "--set", "L=1", "--set", "amplitude=0.01"]


def test_unknown_key_and_bad_value_exit_one(tmp_path, capsys):
    code, _ = _run(tmp_path, "a", "simulate", "--set", "bogus=1")
    assert code == 1 and "bogus" in capsys.readouterr().err
    code, _ = _run(tmp_path, "b", "simulate", "--set", "N=abc")
    assert code == 1 and "N" in capsys.readouterr().err
    code, _ = _run(tmp_path, "c", "picard", "--set", "q=0.5")
    assert code == 1 and "q" in capsys.readouterr().err
    assert main(["no-such-command"]) == 1


def test_simulate_is_deterministic_and_diagnose_reads_it(tmp_path):
    code1, out1 = _run(tmp_path, "one", *SMALL_SIM)
    code2, out2 = _run(tmp_path, "two", *SMALL_SIM)
    assert code1 == code2 == 0
    for name in ("checkpoint.csv", "energy.csv", "simulate_summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    summary = json.loads((out1 / "simulate_summary.json").read_text())
    assert summary["diverged"] is False and summary["max_abs_mean"] < 1e-15
    code, out = _run(tmp_path, "diag", "diagnose", "--set",
                     f"checkpoint={out1 / 'checkpoint.csv'}", "--set", "radii=0.3,0.25",
                     "--set", "poincare_r=0.45", "--set", "poincare_count=5")
    assert code == 0
    diag = json.loads((out / "diagnose_summary.json").read_text())
    assert diag["bad_counts"] == {"0.29999999999999999": 0, "0.25": 0}
    assert (out / "poincare.csv").exists() and (out / "serrin.csv").exists()


def test_simulate_divergence_exits_two(tmp_path):
    code, out = _run(tmp_path, "div", "simulate", "--set", "amplitude=1e3", "--set", "dt=0.01",
                     "--set", "T=1")
    assert code == 2
    assert json.loads((out / "simulate_summary.json").read_text())["diverged"] is True


def test_diagnose_requires_checkpoint(tmp_path):
    assert _run(tmp_path, "d", "diagnose")[0] == 1


def test_picard_command(tmp_path):
    code, out = _run(tmp_path, "p", "picard", "--set", "N=32", "--set", "n_frames=21")
    assert code == 0
    rep = json.loads((out / "picard.json").read_text())
    assert rep["converged"] and rep["max_ratio"] <= 0.25 and rep["start_independence"] < 1e-7


def test_verify_estimates_command(tmp_path):
    code, out = _run(tmp_path, "v", "verify-estimates", "--set", "quadruples=1:2:2:2:2",
                     "--set", "levels=16x9,32x17", "--set", "trials=10")
    assert code == 0
    summ = json.loads((out / "estimates_summary.json").read_text())
    assert summ["quadruples"][0]["flag"] == "bounded"
    assert _run(tmp_path, "w", "verify-estimates", "--set", "trials=3")[0] == 1


def test_kernel_table_command(tmp_path):
    code, out = _run(tmp_path, "k", "kernel-table", "--set", "r_points=11", "--set", "n_times=3")
    assert code == 0
    assert (out / "kernel_profile.csv").read_text().count("\n") > 11
    assert json.loads((out / "kernel_summary.json").read_text())


def test_diagnose_constant_slope_checkpoint_gives_closed_form_Y(tmp_path):
    c = 1.3
    times = np.linspace(0, 1, 401)
    write_checkpoint(tmp_path / "c.csv", Trajectory(np.full((401, 32), c), times, 4.0), "ux")
    code, out = _run(tmp_path, "d", "diagnose", "--set", f"checkpoint={tmp_path / 'c.csv'}",
                     "--set", "radii=0.6,0.5")
    assert code == 0
    lines = [l for l in (out / "census.csv").read_text().splitlines() if not l.startswith("#")]
    rows = [dict(zip(lines[0].split(","), l.split(","))) for l in lines[1:]]
    assert rows
    for row in rows:
        r = float(row["r"])
        assert float(row["Y"]) == pytest.approx(2 * c ** 3 * r ** 3, rel=1e-12)
    assert not (out / "poincare.csv").exists()


def test_diagnose_zero_trajectory_gives_zero_norms(tmp_path):
    times = np.linspace(0, 1, 401)
    write_checkpoint(tmp_path / "z.csv", Trajectory(np.zeros((401, 32)), times, 4.0), "u")
    code, out = _run(tmp_path, "d", "diagnose", "--set", f"checkpoint={tmp_path / 'z.csv'}",
                     "--set", "radii=0.6,0.5", "--set", "poincare_r=0.6")
    assert code == 0
    summary = json.loads((out / "diagnose_summary.json").read_text())
    assert all(s["norm"] == 0 for s in summary["serrin"])
    assert summary["bad_counts"] == {"0.59999999999999998": 0, "0.5": 0}
    assert summary["poincare_max_ratio"] == 0.0
