import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddalab import cli
from ddalab import experiment as ex
from ddalab.config import ConfigError, ExperimentConfig
from ddalab.nse2d.io import read_snapshot

finite = st.floats(allow_nan=False, allow_infinity=False)


def write_cfg(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("# ")]
    return list(csv.DictReader(lines))


def test_ini_round_trip_defaults():
    cfg = ExperimentConfig()
    assert ExperimentConfig.from_ini(cfg.to_ini()) == cfg
    nse = cfg.replace("experiment", system="nse2d").replace("sweep", h=(0.5, 2.5), lam=(4.0, 9.0))
    assert ExperimentConfig.from_ini(nse.resolved().to_ini()) == nse.resolved()


@settings(max_examples=100, deadline=None)
@given(sigma=finite, h=st.one_of(st.none(), finite), dwell=finite)
def test_ini_round_trip_floats(sigma, h, dwell):
    cfg = (ExperimentConfig().replace("lorenz", sigma=sigma)
           .replace("schedule", h=h).replace("verdict", dwell=dwell))
    assert ExperimentConfig.from_ini(cfg.to_ini()) == cfg


def test_unknown_names_are_reported_with_paths():
    with pytest.raises(ConfigError, match=r"^lorenz\.rho"):
        ExperimentConfig.from_ini("[lorenz]\nrho = 28\n")
    with pytest.raises(ConfigError, match=r"^plots"):
        ExperimentConfig.from_ini("[plots]\nx = 1\n")
    with pytest.raises(ConfigError, match=r"^lorenz\.b.*float"):
        ExperimentConfig.from_ini("[lorenz]\nb = eight-thirds\n")
    with pytest.raises(ConfigError, match="unparseable"):
        ExperimentConfig.from_ini("no section header\n")


def test_partial_file_keeps_defaults():
    cfg = ExperimentConfig.from_ini("[schedule]\nh = 0.05\n")
    assert cfg.schedule.h == 0.05 and cfg.lorenz == ExperimentConfig().lorenz


def test_validation_messages():
    bad_b = ExperimentConfig().replace("lorenz", b=1.0)
    with pytest.raises(ConfigError) as info:
        bad_b.validate()
    msg = str(info.value)
    assert msg.startswith("lorenz.b") and "4(b-1)" in msg
    for section, kw, path in [
        ("experiment", {"system": "burgers"}, "experiment.system"),
        ("schedule", {"h": -1.0}, "schedule.h"),
        ("threshold", {"h_lo": 0.5, "h_hi": 0.1}, "threshold.h_hi"),
        ("verdict", {"dwell": 2.0}, "verdict.dwell"),
        ("integrator", {"scheme": "Euler"}, "integrator.scheme"),
    ]:
        with pytest.raises(ConfigError, match="^" + path.replace(".", r"\.")):
            ExperimentConfig().replace(section, **kw).validate()
    nse = ExperimentConfig().replace("experiment", system="nse2d")
    with pytest.raises(ConfigError, match=r"^nse2d\.N"):
        nse.replace("nse2d", N=48).validate()


def test_resolved_defaults():
    lor = ExperimentConfig().resolved()
    assert (lor.integrator.scheme, lor.integrator.dt) == ("RK4", 1e-3)
    nse = ExperimentConfig().replace("experiment", system="nse2d").resolved()
    assert nse.integrator.scheme == "IFRK4"


# ------------------------------------------------------------ CLI

def test_cli_bounds_lorenz(tmp_path, capsys):
    assert cli.main(["bounds", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "K" in text and "1540.266667" in text
    rows = {r["name"]: float(r["value"]) for r in read_rows(tmp_path / "bounds.csv")}
    assert rows["K"] == pytest.approx(92416 / 60)
    assert (tmp_path / "config.ini").exists()


def test_cli_bounds_nse_direct_values(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[experiment]\nsystem = nse2d\n[nse2d]\nnu = 0.1\nf_norm = 1.0\n"
                              "lam = 200.0\n")
    assert cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    rows = {r["name"]: float(r["value"]) for r in read_rows(tmp_path / "o" / "bounds.csv")}
    assert rows["K"] == pytest.approx(100.0)
    assert rows["lambda_min_bounded"] == pytest.approx(1e4)
    assert rows["lambda_min_eta0"] == pytest.approx(9 * (30 / 0.1) ** (8 / 3))
    assert "lambda_min_bounded" in out and "lambda_min_eta0" in out


def test_cli_bounds_failed_search_is_runtime_error(tmp_path):
    cfg = write_cfg(tmp_path, "[experiment]\nsystem = nse2d\n[nse2d]\nnu = 1.0\nf_norm = 1.0\n"
                              "t_star_target = 1.0\n")
    assert cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    rows = {r["name"]: r for r in read_rows(tmp_path / "o" / "bounds.csv")}
    assert math.isnan(float(rows["lambda_for_t_star_target"]["value"]))


def test_cli_config_error_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[lorenz]\nb = 1.0\n")
    assert cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "lorenz.b" in capsys.readouterr().err
    assert cli.main(["run", "--seed-count", "0", "--out", str(tmp_path)]) == 1


def test_cli_missing_config_exit_3(tmp_path):
    assert cli.main(["bounds", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == 3


def test_cli_unwritable_out_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["bounds", "--out", str(blocker / "sub")]) == 3


def test_cli_run_blowup_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[experiment]\nt_spinup = 5.0\n[integrator]\ndt = 0.5\n"
                              "[schedule]\nh = 1.0\nhorizon = 20.0\n[eta]\nkind = random\nnorm = 1.0\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--workers", "1"]) == 2
    assert "non-finite" in capsys.readouterr().err


def test_cli_run_writes_series_and_is_reproducible(tmp_path):
    cfg = write_cfg(tmp_path, "[experiment]\nt_spinup = 5.0\n[schedule]\nhorizon = 2.0\n"
                              "[eta]\nkind = random\nnorm = 1.0\n")
    for name in ("a", "b"):
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / name),
                         "--workers", "1", "--seed-count", "2"]) == 0
    for seed in (0, 1):
        a = (tmp_path / "a" / f"series_seed{seed}.csv").read_bytes()
        b = (tmp_path / "b" / f"series_seed{seed}.csv").read_bytes()
        assert a == b
    text = (tmp_path / "a" / "series_seed0.csv").read_text()
    assert "# config=" in text and "# version=" in text
    assert "series_seed1.csv" in (tmp_path / "a" / "plot_error.gp").read_text()


def test_cli_threshold_bad_bracket_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[experiment]\nt_spinup = 5.0\n[schedule]\nhorizon = 5.0\n"
                              "[eta]\nkind = random\nnorm = 1.0\n"
                              "[threshold]\nh_lo = 0.3\nh_hi = 0.5\n")
    assert cli.main(["threshold", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--workers", "1", "--seed-count", "1"]) == 2
    assert "widen" in capsys.readouterr().err


def test_cli_lorenz_sweep_rows(tmp_path):
    cfg = write_cfg(tmp_path, "[experiment]\nt_spinup = 5.0\n[schedule]\nhorizon = 3.0\n"
                              "[eta]\nkind = random\nnorm = 1.0\n[sweep]\nh = 0.05, 0.5\n")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--workers", "1", "--seed-count", "3"]) == 0
    rows = read_rows(tmp_path / "o" / "sweep.csv")
    per_seed = [r for r in rows if r["seed"] != "majority"]
    assert [(float(r["h"]), r["seed"]) for r in per_seed] == [
        (0.05, "0"), (0.05, "1"), (0.05, "2"), (0.5, "0"), (0.5, "1"), (0.5, "2")]
    majority = {float(r["h"]): r["verdict"] for r in rows if r["seed"] == "majority"}
    assert set(majority) == {0.05, 0.5}
    assert (tmp_path / "o" / "anomalies.csv").exists()


def test_cli_nse_run_writes_reference_snapshot(tmp_path):
    cfg = write_cfg(tmp_path, "[experiment]\nsystem = nse2d\nt_spinup = 1.0\n"
                              "[nse2d]\nN = 16\nnu = 0.1\nf_norm = 1.0\nforcing = shell\n"
                              "[schedule]\nhorizon = 1.0\n[eta]\nkind = random\nnorm = 1.0\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--workers", "1"]) == 0
    snap = read_snapshot(tmp_path / "o" / "reference_seed0.bin")
    assert snap.grid.N == 16 and snap.nu == 0.1
    loaded = ExperimentConfig.load(cfg).resolved()
    np.testing.assert_allclose(snap.u, ex.reference(loaded, 0), atol=1e-15)


def test_small_nse_sweep_runs():
    cfg = (ExperimentConfig()
           .replace("experiment", system="nse2d", t_spinup=2.0, seed_count=2)
           .replace("nse2d", N=16, nu=0.1, f_norm=1.0, forcing="shell")
           .replace("schedule", horizon=1.0)
           .replace("eta", kind="random", norm=1.0)
           .replace("sweep", h=(0.2, 0.5), lam=(2.0, 10.0)))
    rows, summary, anomalies = cli.run_sweep(cfg, workers=1)
    assert len(rows) == 2 * 2 * 2
    assert set(summary) == {(0.2, 2.0), (0.2, 10.0), (0.5, 2.0), (0.5, 10.0)}
    assert all(r[3] in ("Converged", "Diverged", "Undecided") for r in rows)
    assert isinstance(anomalies, list)
