"""CLI verbs, presets, sweeps, and CSV schema stability."""

import csv
import os
import subprocess
import sys

import pytest

from conftest import make_scenario
from ackpolice import traces
from ackpolice.cli import main
from ackpolice.presets import (ANALYTIC_PRESETS, SIM_PRESETS, apply_axis,
                               curve_fig3, curve_fig6, curve_fig7,
                               robustness_grid, sweep)
from ackpolice.scenario import ScenarioError, serialize_scenario
from ackpolice.sim import Simulation

SCENARIO_TEXT = """
phy = dot11b-11M
duration_s = 15
seed = 2

station mis {
  policy = cwmin_halved
}
station fair { }
"""


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "demo.scn"
    path.write_text(SCENARIO_TEXT)
    return str(path)


def test_cli_run_writes_csvs(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", scenario_file, "--out-dir", str(out)]) == 0
    for stem in ("demo_trace.csv", "demo_windows.csv", "demo_summary.csv"):
        assert (out / stem).exists()
    with open(out / "demo_trace.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header == traces.TRACE_COLUMNS


def test_cli_exit_code_on_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("nonsense = 1\n")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.scn")]) == 2


def test_cli_no_policing_flag(scenario_file, tmp_path):
    out = tmp_path / "o"
    assert main(["run", scenario_file, "--out-dir", str(out),
                 "--no-policing", "--seed", "7"]) == 0
    with open(out / "demo_trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["penalty"]) == 0.0 for r in rows)


def test_cli_env_var_out_dir(scenario_file, tmp_path, monkeypatch):
    env_dir = tmp_path / "envout"
    monkeypatch.setenv("ACKPOLICE_OUT_DIR", str(env_dir))
    assert main(["run", scenario_file]) == 0
    assert (env_dir / "demo_trace.csv").exists()


def test_cli_analytics_and_preset_tables(tmp_path):
    for curve in ("fig3", "fig6", "fig7"):
        assert main(["analytics", curve, "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / f"{curve}.csv").exists()
    assert main(["analytics", "fig99", "--out-dir", str(tmp_path)]) == 2


def test_cli_sweep(scenario_file, tmp_path):
    assert main(["sweep", scenario_file, "--axis", "n_fair",
                 "--values", "1,2", "--seeds", "1,2",
                 "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "demo_sweep_agg.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["value"] for r in rows} == {"1", "2"}
    assert all(r["attempt_rate_ci95"] for r in rows)


def test_cli_entry_point_installed():
    proc = subprocess.run([sys.executable, "-m", "ackpolice.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "preset" in proc.stdout


# ---------------------------------------------------------------------------
# presets

def test_fig5_preset_expands_misbehaviours():
    runs = dict(SIM_PRESETS["fig5"](seed=1))
    assert "fig5_cwmin_halved_policing" in runs
    assert "fig5_all_fair" in runs
    cfg = runs["fig5_cwmin_halved_nopolicing"]
    assert len(cfg.stations) == 3
    assert cfg.phy == "dot11b-11M"
    mis = [s for s in cfg.stations if s.policy.kind == "cwmin_halved"]
    assert len(mis) == 1
    assert mis[0].policy.mac_params().cw_min == 16
    assert all(s.traffic.kind == "saturated" for s in cfg.stations)


def test_fig5_single_alias():
    runs = dict(SIM_PRESETS["fig5-cwmin-halved"](seed=1))
    assert set(runs) == {"fig5_cwmin_halved_nopolicing",
                         "fig5_cwmin_halved_policing"}


def test_fig8_preset_schedule():
    (name, cfg), = SIM_PRESETS["fig8"](seed=1)
    episodes = [(s.sid, s.join_s, s.leave_s) for s in cfg.stations]
    assert ("s3", 100.0, 300.0) in episodes
    assert ("s3", 450.0, None) in episodes          # rejoin carries penalty
    assert ("s4", 200.0, 400.0) in episodes


def test_presets_all_buildable_and_serialisable():
    for name, builder in SIM_PRESETS.items():
        for run_name, cfg in builder(seed=1):
            assert serialize_scenario(cfg)


def test_analytic_curves_shape():
    assert len(curve_fig3()) == 11 * 21
    assert all(row["within_bound"] for row in curve_fig3())
    fig6 = curve_fig6()
    assert all(b["fv"] > a["fv"] for a, b in zip(fig6, fig6[1:]))
    fig7 = curve_fig7(max_n=10)
    assert all(row["observation_s"] > 0.5 for row in fig7)
    assert fig7[-1]["observation_s"] > fig7[0]["observation_s"]


def test_robustness_grid_rows():
    rows = robustness_grid(max_horizon=7)
    vac = [r for r in rows if r["vacuous"]]
    live = [r for r in rows if not r["vacuous"]]
    assert all(r["alpha"] == 0.1 for r in vac if r["horizon"] > 5)
    assert live and all(r["zero_prefix_holds"] for r in live)
    assert all(r["tail_gain"] > 0 for r in live)


# ---------------------------------------------------------------------------
# sweeps

def test_apply_axis_paths():
    cfg = make_scenario(n_fair=1, mis_kind="cwmin_halved", duration_s=10.0)
    assert len(apply_axis(cfg, "n_fair", 4).stations) == 5
    assert len(apply_axis(cfg, "n_misbehaving", 3).stations) == 4
    assert apply_axis(cfg, "controller.alpha", 0.3).controller.alpha == 0.3
    assert apply_axis(cfg, "duration_s", 5.0).duration_s == 5.0
    with pytest.raises(ScenarioError):
        apply_axis(cfg, "warp.factor", 9)


def test_sweep_rows_and_ci():
    cfg = make_scenario(n_fair=1, mis_kind="cwmin_halved", duration_s=12.0,
                        policing=False)
    rows, agg = sweep(cfg, "n_fair", [1, 2], seeds=[1, 2])
    assert len(rows) == 2 * 2 + 3 * 2       # stations grow with n_fair
    by_pol = {(r["value"], r["policy"]): r for r in agg}
    assert by_pol[(1, "cwmin_halved")]["attempt_rate_mean"] > \
        by_pol[(1, "compliant")]["attempt_rate_mean"]
    assert by_pol[(1, "compliant")]["attempt_rate_ci95"] is not None


def test_sweep_single_seed_empty_ci():
    cfg = make_scenario(n_fair=1, duration_s=10.0, policing=False)
    rows, agg = sweep(cfg, "n_fair", [2], seeds=[1])
    assert agg[0]["attempt_rate_ci95"] is None


def test_sweep_empty_values():
    cfg = make_scenario(n_fair=1, duration_s=10.0)
    assert sweep(cfg, "n_fair", [], seeds=[1]) == ([], [])


def test_sweep_parallel_matches_serial():
    cfg = make_scenario(n_fair=1, mis_kind="cwmin_halved", duration_s=10.0,
                        policing=False)
    serial = sweep(cfg, "n_fair", [1, 2], seeds=[1, 2], workers=1)
    parallel = sweep(cfg, "n_fair", [1, 2], seeds=[1, 2], workers=2)
    assert serial == parallel


# ---------------------------------------------------------------------------
# CSV schema golden file

def test_trace_csv_golden(tmp_path):
    """Column set, order, and cell formatting are pinned."""
    cfg = make_scenario(n_fair=1, mis_kind="fixed_cw", duration_s=25.0, seed=11)
    trace = Simulation(cfg).run()
    rendered = traces.render_csv(traces.TRACE_COLUMNS, trace.station_rows)
    golden_path = os.path.join(os.path.dirname(__file__), "data",
                               "golden_trace.csv")
    with open(golden_path, newline="") as fh:
        assert fh.read() == rendered
