"""CSV emission for simulation traces, summaries, and sweep tables.

Column sets and their order are fixed; floats are rendered with repr-
faithful shortest form so identical runs serialise byte-identically.
Files follow RFC 4180 (header row, quoting only where needed).
"""

import csv
import math
import statistics

TRACE_COLUMNS = ["time_s", "station", "attempts", "fcs_successes", "acked",
                 "measured_rate", "fair_rate_est", "penalty", "p_nack",
                 "escalation"]

WINDOW_COLUMNS = ["time_s", "window", "slots", "idle", "success", "collision",
                  "virtual_attempts", "virtual_failures", "fv_est", "f1_est",
                  "fair_rate_oracle", "fair_rate_realistic",
                  "estimation_failed"]

SUMMARY_COLUMNS = ["station", "policy", "active_s", "attempts",
                   "fcs_successes", "acked", "attempt_rate", "throughput_bps",
                   "goodput_bps", "ln_throughput"]

SWEEP_COLUMNS = ["axis", "value", "seed", "station", "policy", "attempt_rate",
                 "throughput_bps", "goodput_bps"]

SWEEP_AGG_COLUMNS = ["axis", "value", "policy", "n_seeds",
                     "attempt_rate_mean", "attempt_rate_ci95",
                     "throughput_bps_mean", "throughput_bps_ci95",
                     "goodput_bps_mean", "goodput_bps_ci95"]

# two-sided 95% Student-t quantiles by degrees of freedom; beyond the table
# the normal quantile is close enough
_T95 = {1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447,
        7: 2.365, 8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179,
        13: 2.160, 14: 2.145, 15: 2.131, 16: 2.120, 17: 2.110, 18: 2.101,
        19: 2.093, 20: 2.086, 21: 2.080, 22: 2.074, 23: 2.069, 24: 2.064,
        25: 2.060, 26: 2.056, 27: 2.052, 28: 2.048, 29: 2.045, 30: 2.042}


def t95(df):
    if df < 1:
        return math.nan
    return _T95.get(df, 1.96)


def mean_ci95(values):
    """(mean, half-width) of the 95% Student-t interval; half-width is None
    for a single observation."""
    if not values:
        return None, None
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, None
    half = t95(len(values) - 1) * statistics.stdev(values) / math.sqrt(len(values))
    return mean, half


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])


def render_csv(columns, rows):
    """CSV text for in-memory comparisons (determinism checks)."""
    import io
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def write_trace(trace, out_dir, stem):
    """Write the three per-run CSVs; returns their paths."""
    import os
    paths = {}
    for name, cols, rows in (
            ("trace", TRACE_COLUMNS, trace.station_rows),
            ("windows", WINDOW_COLUMNS, trace.window_rows),
            ("summary", SUMMARY_COLUMNS, trace.summary_rows)):
        path = os.path.join(out_dir, f"{stem}_{name}.csv")
        write_csv(path, cols, rows)
        paths[name] = path
    return paths


def summarise_from_rows(trace, payload_bits):
    """Recompute the per-station summary from trace rows (consistency check:
    the emitted summary must match this reconstruction)."""
    agg = {}
    for row in trace.station_rows:
        a = agg.setdefault(row["station"],
                           {"attempts": 0, "fcs_successes": 0, "acked": 0})
        a["attempts"] += row["attempts"]
        a["fcs_successes"] += row["fcs_successes"]
        a["acked"] += row["acked"]
    out = {}
    for srow in trace.summary_rows:
        sid = srow["station"]
        rebuilt = agg.get(sid, {"attempts": 0, "fcs_successes": 0, "acked": 0})
        secs = srow["active_s"]
        out[sid] = {
            "attempts": rebuilt["attempts"],
            "fcs_successes": rebuilt["fcs_successes"],
            "acked": rebuilt["acked"],
            "throughput_bps": rebuilt["fcs_successes"] * payload_bits / secs
            if secs > 0 else 0.0,
            "goodput_bps": rebuilt["acked"] * payload_bits / secs
            if secs > 0 else 0.0,
        }
    return out
