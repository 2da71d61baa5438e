import math
import os

import numpy as np
import pytest

from ppk import cli, io


def test_table_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    rows = [
        {"a": 1, "b": 0.1 + 0.2, "c": "pd", "d": float("nan")},
        {"a": -3, "b": 6.02e23, "c": "hom", "d": 1.5},
    ]
    io.write_table(path, {"tool": "ppk test", "note": "x"}, ["a", "b", "c", "d"], rows)
    table = io.read_table(path)
    assert table.metadata["tool"] == "ppk test"
    assert table.columns == ["a", "b", "c", "d"]
    assert len(table.rows) == 2
    for got, want in zip(table.rows, rows):
        assert io.rows_equal(got, want)


def test_manifest_resume_and_cleanup(tmp_path):
    out = str(tmp_path / "m.csv")
    m = io.Manifest(out, "spec1")
    m.record(0, [{"x": 1}])
    m.record(2, [{"x": 3}])
    m2 = io.Manifest(out, "spec1")
    assert m2.load_if_matching()
    assert m2.done(0) and m2.done(2) and not m2.done(1)
    m3 = io.Manifest(out, "other-spec")
    assert not m3.load_if_matching()
    m2.cleanup()
    assert not os.path.exists(m2.path)


def run_cli(args):
    return cli.main(args)


def test_steady_state_command(tmp_path):
    out = tmp_path / "ss.csv"
    code = run_cli(["steady-state", "--delta", "0.0", "--g", "1.0", "--u", "1.0",
                    "--dim", "20", "--out", str(out)])
    assert code == 0
    table = io.read_table(out)
    row = table.rows[0]
    assert row["dim"] == 20
    assert row["n_mean"] == pytest.approx(0.775, abs=0.05)
    assert row["residual_norm"] < 1e-10


def test_diffusion_command_column_order(tmp_path):
    out = tmp_path / "d.csv"
    code = run_cli(["diffusion", "--delta", "0.0", "--g", "1.0", "--u", "1.0",
                    "--dim", "25", "--scheme", "pd", "--out", str(out)])
    assert code == 0
    table = io.read_table(out)
    assert table.columns == ["g", "delta", "u", "kappa", "scheme", "theta", "dim",
                             "mean_current", "diffusion", "residual_norm"]
    row = table.rows[0]
    assert row["scheme"] == "pd"
    assert math.isnan(row["theta"])
    assert row["diffusion"] == pytest.approx(0.769843, abs=1e-4)


def test_spectrum_command_vacuum_shot_noise(tmp_path):
    out = tmp_path / "s.csv"
    code = run_cli(["spectrum", "--delta", "0.0", "--g", "0.0", "--u", "1.0",
                    "--dim", "8", "--scheme", "hom", "--omega-min", "0",
                    "--omega-max", "10", "--omega-count", "5", "--out", str(out)])
    assert code == 0
    table = io.read_table(out)
    assert all(abs(r["value"] - 1.0) < 1e-8 for r in table.rows)


def test_wigner_command_normalization(tmp_path):
    out = tmp_path / "w.csv"
    code = run_cli(["wigner", "--delta", "0.0", "--g", "0.0", "--u", "1.0",
                    "--dim", "10", "--half-width", "6", "--points", "61",
                    "--out", str(out)])
    assert code == 0
    table = io.read_table(out)
    assert "convention" in table.metadata
    w = np.array([r["w"] for r in table.rows])
    dx = 12.0 / 60
    assert w.sum() * dx * dx == pytest.approx(1.0, abs=1e-3)


def test_trajectory_command_deterministic(tmp_path):
    args = ["trajectory", "--delta", "2.0", "--g", "1.0", "--u", "0.3333333333",
            "--dim", "30", "--scheme", "hom", "--dt", "1e-3", "--t-final", "0.3",
            "--seed", "12", "--out", None]
    out1 = tmp_path / "t1.csv"
    out2 = tmp_path / "t2.csv"
    args[-1] = str(out1)
    assert run_cli(list(args)) == 0
    args[-1] = str(out2)
    assert run_cli(list(args)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_validation_exit_code(tmp_path):
    assert run_cli(["diffusion", "--delta", "0.0", "--g", "1.0",
                    "--out", str(tmp_path / "x.csv")]) == 1  # missing --u


def test_numerical_failure_exit_code(tmp_path):
    # truncation rule exhausted at a hot point with a tiny starting dim
    assert run_cli(["diffusion", "--delta", "2.0", "--g", "1.0", "--u", "0.3333",
                    "--dim", "6", "--out", str(tmp_path / "x.csv")]) == 2


def test_sweep_resume_byte_identical(tmp_path, monkeypatch):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text("""
[sweep]
task = steady_state
seed = 4
workers = 1

[fixed]
g = 1.0
u = 1.0
kappa = 1.0

[axis:delta]
start = -1.0
stop = 1.0
count = 5
spacing = linear
""")
    out_full = tmp_path / "full.csv"
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(out_full)]) == 0

    # interrupted run: the third point raises on the first pass
    out_resume = tmp_path / "resumed.csv"
    original = cli._TASK_RUNNERS["steady_state"]
    calls = {"n": 0}

    def flaky(point, seed, index):
        if index == 2 and calls["n"] == 0:
            calls["n"] += 1
            raise RuntimeError("simulated interruption")
        return original(point, seed, index)

    monkeypatch.setitem(cli._TASK_RUNNERS, "steady_state", flaky)
    code = run_cli(["sweep", "--config", str(cfg), "--out", str(out_resume)])
    assert code == 2
    assert os.path.exists(str(out_resume) + ".manifest.json")
    code = run_cli(["sweep", "--config", str(cfg), "--out", str(out_resume), "--resume"])
    assert code == 0
    assert out_resume.read_bytes() == out_full.read_bytes()
    assert not os.path.exists(str(out_resume) + ".manifest.json")


def test_sweep_diffusion_round_trip(tmp_path):
    cfg = tmp_path / "d.ini"
    cfg.write_text("""
[sweep]
task = diffusion
workers = 1

[fixed]
g = 1.0
u = 1.0
kappa = 1.0
scheme = pd
dim = 20

[axis:delta]
start = -0.5
stop = 0.5
count = 3
""")
    out = tmp_path / "d.csv"
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    table = io.read_table(out)
    assert [r["delta"] for r in table.rows] == [-0.5, 0.0, 0.5]
    io.write_table(tmp_path / "copy.csv", table.metadata, table.columns, table.rows)
    table2 = io.read_table(tmp_path / "copy.csv")
    assert all(io.rows_equal(a, b) for a, b in zip(table.rows, table2.rows))


def test_scaling_command(tmp_path):
    out = tmp_path / "sc.csv"
    code = run_cli(["scaling", "--g-list", "1.0", "--kou-list", "2",
                    "--schemes", "pd", "--delta-lo", "1.5", "--delta-hi", "3.0",
                    "--delta-step", "0.25", "--out", str(out)])
    assert code == 0
    table = io.read_table(out)
    assert len(table.rows) == 1
    row = table.rows[0]
    assert row["kappa_over_u"] == 2
    assert 1.5 < row["delta_at_max"] < 3.0
    assert row["d_max"] > 100.0


def test_sweep_spectrum_task(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text("""
[sweep]
task = spectrum

[fixed]
g = 0.0
u = 1.0
scheme = hom
dim = 8
omega_min = 0.0
omega_max = 4.0
omega_count = 3

[axis:delta]
start = 0.0
stop = 1.0
count = 2
""")
    out = tmp_path / "s.csv"
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    table = io.read_table(out)
    assert len(table.rows) == 6  # 2 points x 3 frequencies
    assert all(abs(r["value"] - 1.0) < 1e-8 for r in table.rows)
    assert sorted({r["point"] for r in table.rows}) == [0, 1]


def test_sweep_trajectory_task_deterministic(tmp_path):
    cfg = tmp_path / "t.ini"
    cfg.write_text("""
[sweep]
task = trajectory
seed = 3

[fixed]
g = 1.0
u = 0.5
delta = 0.5
scheme = pd
dim = 20
dt = 1e-3
t_final = 0.5
record_stride = 100
""")
    out1 = tmp_path / "t1.csv"
    out2 = tmp_path / "t2.csv"
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    table = io.read_table(out1)
    assert table.columns == ["point", "time", "current", "n_mean", "x_mean",
                             "p_mean", "n_var"]
    assert len(table.rows) == 5


def test_sweep_scaling_task(tmp_path):
    cfg = tmp_path / "sc.ini"
    cfg.write_text("""
[sweep]
task = scaling

[fixed]
g = 1.0
schemes = pd
delta_lo = 1.6
delta_hi = 2.8
delta_step = 0.3

[axis:kappa_over_u]
start = 2.0
stop = 2.0
count = 1
""")
    out = tmp_path / "sc.csv"
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    table = io.read_table(out)
    assert len(table.rows) == 1
    assert table.rows[0]["scheme"] == "pd"
    assert table.rows[0]["d_max"] > 100.0


def test_sweep_spec_validation():
    spec = cli.SweepSpec(task="nope", out="x.csv", fixed={})
    with pytest.raises(ValueError):
        spec.validate()
    spec = cli.SweepSpec(task="diffusion", out="x.csv", fixed={},
                         axes=[("bogus", 0, 1, 2, "linear")])
    with pytest.raises(ValueError):
        spec.validate()
    spec = cli.SweepSpec(task="diffusion", out="x.csv", fixed={},
                         axes=[("delta", -1, 1, 3, "log")])
    with pytest.raises(ValueError):
        spec.validate()
