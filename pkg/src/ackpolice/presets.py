"""Named experiment presets and the parameter-sweep runner.

Each simulation preset expands to one or more (run_name, ScenarioConfig)
pairs: the classic two-station unfairness demo, the four-misbehaviour
catalogue with and without policing, dynamic join/leave, the capture
scenario, and a network-size sweep.  Analytic presets emit curve tables
(attempt-rate bound grid, virtual-failure relation, observation-time
rule) without running the simulator.
"""

import math
from dataclasses import replace

from . import dcf
from .adversary import BehaviourPolicy, brute_force_best_prefix, min_delta
from .dcf import (EstimatorConfig, PhyTiming, attempt_probability,
                  effective_failure, expected_slot_duration,
                  homogeneous_fixed_point, normalized_attempt,
                  required_samples, throughput, virtual_failure)
from .policing import ControllerConfig
from .scenario import ScenarioConfig, ScenarioError, StationSpec, TrafficSpec


def _fair(sid, **kw):
    return StationSpec(sid=sid, **kw)


def _mis(sid, kind, **kw):
    return StationSpec(sid=sid, policy=BehaviourPolicy(kind=kind), **kw)


def _pair(name, cfg):
    """A policing-off / policing-on pair sharing everything else."""
    return [(f"{name}_nopolicing", replace(cfg, policing_enabled=False)),
            (f"{name}_policing", replace(cfg, policing_enabled=True))]


def preset_fig1(seed=1, duration_s=180.0):
    cfg = ScenarioConfig(
        stations=(_mis("mis", "cwmin_halved"), _fair("fair")),
        duration_s=duration_s, seed=seed)
    return _pair("fig1", cfg)


def preset_fig2(seed=1, duration_s=180.0):
    cfg = ScenarioConfig(
        stations=(_mis("mis", "cwmin_halved"), _fair("f1"), _fair("f2")),
        phy="dot11g-54M", payload_bytes=1500, duration_s=duration_s, seed=seed)
    return [("fig2", cfg)]


_FIG5_KINDS = ("cwmin_halved", "fixed_cw", "aifs_sifs", "large_txop")


def preset_fig5(seed=1, duration_s=180.0):
    runs = []
    for kind in _FIG5_KINDS:
        cfg = ScenarioConfig(
            stations=(StationSpec(sid="mis",
                                  policy=BehaviourPolicy(kind=kind, cw=16)),
                      _fair("f1"), _fair("f2")),
            duration_s=duration_s, seed=seed)
        runs += _pair(f"fig5_{kind}", cfg)
    runs.append(("fig5_all_fair", ScenarioConfig(
        stations=(_fair("f1"), _fair("f2"), _fair("f3")),
        duration_s=duration_s, seed=seed, policing_enabled=False)))
    return runs


def preset_fig8(seed=1, duration_s=500.0):
    """Dynamic topology: misbehaver joins at 100 s, leaves at 300 s and
    rejoins at 450 s (carrying its penalty); a late fair client spans
    200-400 s."""
    cfg = ScenarioConfig(
        stations=(
            _fair("s1"), _fair("s2"),
            StationSpec(sid="s3", policy=BehaviourPolicy(kind="cwmin_halved"),
                        join_s=100.0, leave_s=300.0),
            StationSpec(sid="s3", policy=BehaviourPolicy(kind="cwmin_halved"),
                        join_s=450.0),
            StationSpec(sid="s4", join_s=200.0, leave_s=400.0),
        ),
        duration_s=duration_s, seed=seed)
    return [("fig8", cfg)]


def preset_fig11(seed=1, duration_s=180.0):
    cfg = ScenarioConfig(
        stations=(_fair("s1", capture_priority=1), _fair("s2"), _fair("s3")),
        duration_s=duration_s, seed=seed, p_capture=1.0,
        measurement_mode="realistic")
    return _pair("fig11", cfg)


def preset_heterogeneous_load(seed=1, duration_s=1800.0):
    """Mixed offered loads, everyone compliant: saturated uplink, on-off
    web-like source, ~1 Mb/s constant-rate stream, saturated download."""
    cbr_prob = 0.0285   # ~1 Mb/s at the expected 4-station slot duration
    cfg = ScenarioConfig(
        stations=(
            _fair("upload"),
            StationSpec(sid="web", traffic=TrafficSpec(kind="onoff",
                                                       active_s=5.0,
                                                       idle_mean_s=60.0)),
            StationSpec(sid="video", traffic=TrafficSpec(kind="bernoulli",
                                                         arrival_prob=cbr_prob)),
            _fair("download"),
        ),
        duration_s=duration_s, seed=seed)
    return [("heterogeneous_load", cfg)]


def _fig5_single(kind):
    def build(seed=1, duration_s=180.0):
        cfg = ScenarioConfig(
            stations=(StationSpec(sid="mis",
                                  policy=BehaviourPolicy(kind=kind, cw=16)),
                      _fair("f1"), _fair("f2")),
            duration_s=duration_s, seed=seed)
        return _pair(f"fig5_{kind}", cfg)
    return build


SIM_PRESETS = {
    "fig1": preset_fig1,
    "fig2": preset_fig2,
    "fig5": preset_fig5,
    "fig5-cwmin-halved": _fig5_single("cwmin_halved"),
    "fig5-fixed-cw": _fig5_single("fixed_cw"),
    "fig5-aifs-sifs": _fig5_single("aifs_sifs"),
    "fig5-large-txop": _fig5_single("large_txop"),
    "fig8": preset_fig8,
    "fig11": preset_fig11,
    "heterogeneous-load": preset_heterogeneous_load,
}


# ---------------------------------------------------------------------------
# analytic curve tables

def curve_fig3(params=dcf.DEFAULT_MAC_PARAMS):
    """Normalised attempt rate against the 1 - 0.4*P bound, on the grid
    f in [0, 0.5] step 0.05, P in [0, 1] step 0.05."""
    rows = []
    for i in range(11):
        f = i / 20
        for j in range(21):
            p = j / 20
            ratio = normalized_attempt(f, p, params)
            bound = 1 - 0.4 * p
            rows.append({"f": f, "p_nack": p, "normalized_attempt": ratio,
                         "bound": bound, "within_bound": ratio <= bound + 1e-12})
    return rows


def curve_fig6(params=dcf.DEFAULT_MAC_PARAMS, points=99):
    """Virtual vs real failure probability of a saturated fair station."""
    rows = []
    for i in range(points + 1):
        f1 = i / (points + 1) * 0.99
        rows.append({"f1": f1, "fv": virtual_failure(f1, params)})
    return rows


def curve_fig7(payload_bytes=1000, estimator=EstimatorConfig(), max_n=20):
    """Channel observation time needed for the target estimate precision,
    by network size (saturated stations, 11 Mb/s)."""
    timing = PhyTiming.dot11b_11m(payload_bytes)
    n_samples = required_samples(estimator)
    rows = []
    for n in range(1, max_n + 1):
        x, _ = homogeneous_fixed_point(n)
        _, probs = throughput([x] * n, timing)
        slot_us = expected_slot_duration(probs, timing)
        rows.append({"n": n, "x": x, "slot_us": slot_us,
                     "samples": n_samples,
                     "observation_s": n_samples * slot_us / 1e6})
    return rows


ANALYTIC_PRESETS = {
    "fig3": (curve_fig3, ["f", "p_nack", "normalized_attempt", "bound",
                          "within_bound"]),
    "fig6": (curve_fig6, ["f1", "fv"]),
    "fig7": (curve_fig7, ["n", "x", "slot_us", "samples", "observation_s"]),
}


def robustness_grid(max_horizon=10, grid=(-0.5, 0.0, 0.5),
                    alphas=(0.1, 0.25)):
    """Theorem-4 harness over every exhaustively searchable instance.

    One row per (alpha, T): the best admissible strategy on the grid,
    its mean goodput, whether the zero-prefix property held, and the
    end-game tail gain the maximiser still extracts.  Instances with
    T <= delta are reported as vacuous (no constraint to check).
    """
    upper = max(grid)
    rows = []
    for alpha in alphas:
        delta = min_delta(alpha, upper)
        for horizon in range(1, max_horizon + 1):
            if horizon <= delta:
                rows.append({"alpha": alpha, "horizon": horizon,
                             "delta": delta, "vacuous": True,
                             "zero_prefix_holds": None, "best_goodput": None,
                             "tail_gain": None, "best_sequence": None})
                continue
            res = brute_force_best_prefix(horizon, delta, alpha, upper, grid)
            rows.append({
                "alpha": alpha, "horizon": horizon, "delta": delta,
                "vacuous": False,
                "zero_prefix_holds": res.zero_prefix_holds,
                "best_goodput": res.best_goodput,
                "tail_gain": res.tail_gain,
                "best_sequence": " ".join(format(v, "g")
                                          for v in res.best_sequences[0]),
            })
    return rows


ROBUSTNESS_COLUMNS = ["alpha", "horizon", "delta", "vacuous",
                      "zero_prefix_holds", "best_goodput", "tail_gain",
                      "best_sequence"]


# ---------------------------------------------------------------------------
# sweeps

def apply_axis(cfg, axis, value):
    """Scenario with one parameter replaced.

    Dotted paths address config fields (duration_s, payload_bytes,
    controller.alpha, ...).  Two virtual axes resize the topology:
    n_fair / n_misbehaving clone the first station of that kind until
    the requested count is reached.
    """
    if axis in ("n_fair", "n_misbehaving"):
        count = int(value)
        if count < 1:
            raise ScenarioError(f"{axis} must be >= 1")
        wanted_kind = (lambda k: k == "compliant") if axis == "n_fair" \
            else (lambda k: k != "compliant")
        template = next((s for s in cfg.stations
                         if wanted_kind(s.policy.kind)), None)
        if template is None:
            raise ScenarioError(f"no station matches axis {axis!r}")
        others = [s for s in cfg.stations if not wanted_kind(s.policy.kind)]
        clones = [replace(template, sid=f"{template.sid}{i:02d}")
                  for i in range(count)]
        return replace(cfg, stations=tuple(clones + others))
    head, _, rest = axis.partition(".")
    if rest:
        if head == "controller" and hasattr(cfg.controller, rest):
            ctrl = replace(cfg.controller, **{rest: value})
            return replace(cfg, controller=ctrl)
        if head == "estimator" and hasattr(cfg.estimator, rest):
            est = replace(cfg.estimator, **{rest: value})
            return replace(cfg, estimator=est)
        raise ScenarioError(f"invalid axis path {axis!r}")
    if head in ("duration_s", "payload_bytes", "phy", "measurement_mode",
                "p_capture", "policing_enabled"):
        return replace(cfg, **{head: value})
    raise ScenarioError(f"invalid axis path {axis!r}")


def _sweep_point(args):
    from .sim import Simulation
    from .scenario import with_overrides
    axis, value, seed, cfg = args
    trace = Simulation(with_overrides(cfg, seed=seed)).run()
    rows = []
    for srow in trace.summary_rows:
        rows.append({"axis": axis, "value": value, "seed": seed,
                     "station": srow["station"], "policy": srow["policy"],
                     "attempt_rate": srow["attempt_rate"],
                     "throughput_bps": srow["throughput_bps"],
                     "goodput_bps": srow["goodput_bps"]})
    return rows


def sweep(base_cfg, axis, values, seeds, workers=1):
    """Run base_cfg once per (value, seed); returns (rows, aggregate).

    Aggregates are per (value, policy kind): station metrics averaged
    within each run, then mean and 95% Student-t confidence interval
    across seeds.  A single seed yields point estimates with empty CI.
    """
    from .traces import mean_ci95
    if not values:
        return [], []
    points = [(axis, v, s, apply_axis(base_cfg, axis, v))
              for v in values for s in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    rows = [r for chunk in results for r in chunk]

    agg = []
    for value in values:
        by_policy = {}
        for seed in seeds:
            per_run = {}
            for r in rows:
                if r["value"] == value and r["seed"] == seed:
                    per_run.setdefault(r["policy"], []).append(r)
            for pol, items in per_run.items():
                by_policy.setdefault(pol, []).append({
                    "attempt_rate": math.fsum(i["attempt_rate"] for i in items) / len(items),
                    "throughput_bps": math.fsum(i["throughput_bps"] for i in items) / len(items),
                    "goodput_bps": math.fsum(i["goodput_bps"] for i in items) / len(items),
                })
        for pol in sorted(by_policy):
            samples = by_policy[pol]
            row = {"axis": axis, "value": value, "policy": pol,
                   "n_seeds": len(samples)}
            for metric in ("attempt_rate", "throughput_bps", "goodput_bps"):
                mean, ci = mean_ci95([s[metric] for s in samples])
                row[f"{metric}_mean"] = mean
                row[f"{metric}_ci95"] = ci
            agg.append(row)
    return rows, agg


def fig10_base(seed=1, duration_s=180.0, policing=True):
    """One CW_min-halved misbehaver among a variable number of fair
    stations (sweep axis n_fair)."""
    return ScenarioConfig(
        stations=(_mis("mis", "cwmin_halved"), _fair("fair")),
        duration_s=duration_s, seed=seed, policing_enabled=policing)
