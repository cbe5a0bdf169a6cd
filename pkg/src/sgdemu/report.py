"""Report assembly and serialization.

Every statistic is emitted twice: a JSON document carrying full float
precision, and companion CSVs for plotting where dB, percent and minute
columns are fixed to 4 decimals (fractions to 8). Reports embed the
resolved configuration and seed so any report can be regenerated
bit-identically.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

from . import SCHEMA_VERSION, __version__, kernel_backend
from .propstats import exceedance, fade_duration_distribution, fade_events, joint_exceedance
from .scenario import BaselineTable, DailyBreakdown, PairResult, SweepResult, daily_breakdown
from .sgd_engine import EmulationResult
from .timeseries import SeriesSet

__all__ = [
    "report_header",
    "build_stats_report",
    "build_emulation_report",
    "build_sweep_report",
    "build_cluster_report",
    "build_baseline_report",
    "write_json",
    "write_csv",
    "stats_csv_files",
    "emulation_csv_files",
    "sweep_csv_rows",
    "cluster_csv_rows",
    "baseline_csv_rows",
    "series_csv_rows",
]


def fmt4(x) -> str:
    return f"{float(x):.4f}"


def fmt8(x) -> str:
    return f"{float(x):.8f}"


def _date(day_epoch: int) -> str:
    return datetime.fromtimestamp(int(day_epoch), tz=timezone.utc).strftime("%Y-%m-%d")


def report_header(seed=None, config=None) -> dict:
    header = {
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "kernel_backend": kernel_backend(),
        "rng": {"selection": "splitmix64", "synthesis": "numpy-pcg64"},
    }
    if seed is not None:
        header["seed"] = int(seed)
    if config is not None:
        header["config"] = config
    return header


def write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# propagation statistics
# ---------------------------------------------------------------------------

def build_stats_report(sset: SeriesSet, ccdf_thresholds, fade_thresholds,
                       duration_bins, **header_kw):
    """Exceedance, fade-event and joint statistics for every site of a set."""
    report = report_header(**header_kw)
    report["grid"] = {
        "start_epoch": sset.grid.start_epoch,
        "step_seconds": str(sset.grid.step),
        "count": sset.grid.count,
        "concurrent_validity_fraction": sset.concurrent_validity_fraction,
    }
    sites = {}
    for meta, series in sset.members:
        curve = exceedance(series, ccdf_thresholds)
        entry = {
            "region_tag": meta.region_tag,
            "valid_seconds": curve.valid_seconds,
            "exceedance": {
                "thresholds_db": list(curve.thresholds_db),
                "fraction": list(curve.exceedance_fraction),
                "minutes": list(curve.exceedance_minutes),
            },
            "fades": [],
        }
        for th in fade_thresholds:
            events, summary = fade_events(series, th)
            fade = {
                "threshold_db": summary.threshold_db,
                "fading_time_percent": summary.fading_time_percent,
                "fade_time_minutes": summary.fading_time_seconds / 60.0,
                "fade_count": summary.fade_count,
                "mean_duration_seconds": summary.mean_duration_seconds,
            }
            if events and duration_bins:
                fracs = fade_duration_distribution(events, duration_bins)
                fade["duration_distribution"] = {
                    "duration_s": [float(d) for d in duration_bins],
                    "fraction_of_fading_time": list(fracs),
                }
            entry["fades"].append(fade)
        sites[meta.site_id] = entry
    report["sites"] = sites

    if len(sset) >= 2:
        table = joint_exceedance(sset, fade_thresholds)
        report["joint_exceedance"] = {
            "thresholds_db": list(table.thresholds_db),
            "pairs": [
                {"sites": list(pair), "joint_minutes": list(table.joint_minutes[i])}
                for i, pair in enumerate(table.pairs)
            ],
        }
    return report


def stats_csv_files(report: dict) -> dict:
    """CSV companions of a stats report: {filename: (header, rows)}."""
    exc_rows, fade_rows, dist_rows = [], [], []
    for sid in sorted(report["sites"]):
        entry = report["sites"][sid]
        exc = entry["exceedance"]
        for th, fr, mins in zip(exc["thresholds_db"], exc["fraction"], exc["minutes"]):
            exc_rows.append([sid, fmt4(th), fmt8(fr), fmt4(mins)])
        for fade in entry["fades"]:
            mean = fade["mean_duration_seconds"]
            fade_rows.append([
                sid, fmt4(fade["threshold_db"]), fmt4(fade["fading_time_percent"]),
                fmt4(fade["fade_time_minutes"]), fade["fade_count"],
                fmt4(mean) if mean is not None else "",
            ])
            dist = fade.get("duration_distribution")
            if dist:
                for d, fr in zip(dist["duration_s"], dist["fraction_of_fading_time"]):
                    dist_rows.append([sid, fmt4(fade["threshold_db"]), fmt4(d), fmt8(fr)])
    files = {
        "exceedance.csv": (
            ["site_id", "threshold_db", "exceedance_fraction", "exceedance_minutes"],
            exc_rows,
        ),
        "fade_summary.csv": (
            ["site_id", "threshold_db", "fading_time_percent", "fade_time_minutes",
             "fade_count", "mean_duration_s"],
            fade_rows,
        ),
    }
    if dist_rows:
        files["fade_duration_distribution.csv"] = (
            ["site_id", "threshold_db", "duration_s", "fraction_of_fading_time"],
            dist_rows,
        )
    joint = report.get("joint_exceedance")
    if joint:
        rows = []
        for pair in joint["pairs"]:
            a, b = pair["sites"]
            for th, mins in zip(joint["thresholds_db"], pair["joint_minutes"]):
                rows.append([a, b, fmt4(th), fmt4(mins)])
        files["joint_exceedance.csv"] = (
            ["site_a", "site_b", "threshold_db", "joint_minutes"], rows)
    return files


# ---------------------------------------------------------------------------
# emulation
# ---------------------------------------------------------------------------

def _network_echo(result: EmulationResult) -> dict:
    cfg = result.config
    return {
        "n_active": cfg.n_active,
        "n_redundant": cfg.n_redundant,
        "switching_delay_s": cfg.switching_delay_s,
        "selection_policy": cfg.selection_policy,
        "freeze_scope": cfg.freeze_scope,
        "initial_active": list(result.initial_active),
        "gateways": [
            {"site_id": g.site_id, "region_tag": g.region_tag,
             "fade_margin_db": g.fade_margin_db, "sst_db": g.sst_db}
            for g in cfg.gateways
        ],
    }


def build_emulation_report(result: EmulationResult, breakdown: DailyBreakdown | None = None,
                           **header_kw) -> dict:
    if breakdown is None:
        breakdown = daily_breakdown(result)
    report = report_header(seed=result.config.seed, **header_kw)
    report["network"] = _network_echo(result)
    report["grid"] = {
        "start_epoch": result.grid_start_epoch,
        "step_seconds": str(result.grid_step),
        "total_samples": result.total_samples,
        "valid_samples": result.valid_samples,
    }
    report["results"] = {
        "availability_percent": result.availability_percent,
        "fade_outage_seconds": result.fade_outage_seconds,
        "switching_outage_seconds": result.switching_outage_seconds,
        "w_eff_seconds": result.w_eff_seconds,
        "network_switches": result.network_switches,
        "per_gw_switches": dict(result.per_gw_switches),
        "network_fade_count": result.network_fade_count,
        "network_mean_fade_duration_seconds": result.network_mean_fade_duration_seconds,
        "standby_margin_fraction": dict(result.standby_margin_fraction),
        "days_with_switches": breakdown.days_with_switches,
        "days_with_outage": breakdown.days_with_outage,
    }
    daily = result.daily
    report["daily"] = [
        {
            "date": _date(d),
            "valid_seconds": float(v),
            "fade_outage_seconds": float(f),
            "switching_outage_seconds": float(s),
            "switches": int(sw),
            "availability_percent": float(a),
        }
        for d, v, f, s, sw, a in zip(
            daily.day_epochs, daily.valid_seconds, daily.fade_outage_seconds,
            daily.switching_outage_seconds, daily.switches, daily.availability_percent)
    ]
    report["switch_histogram"] = [
        {"bin": "1" if lo == 1 else f"[{lo},{hi})", "lo": lo, "hi_exclusive": hi, "days": days}
        for lo, hi, days in breakdown.histogram
    ]
    report["switch_events"] = [
        {"time_index": e.time_index, "from_gw": e.from_gw, "to_gw": e.to_gw}
        for e in result.switch_events
    ]
    return report


def emulation_csv_files(result: EmulationResult, report: dict) -> dict:
    step = result.grid_step
    start = result.grid_start_epoch

    def iso(idx: int) -> str:
        t = start + idx * step
        dt = datetime.fromtimestamp(float(t), tz=timezone.utc)
        if t.denominator == 1:
            return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")

    event_rows = [[iso(e.time_index), e.from_gw, e.to_gw] for e in result.switch_events]
    daily_rows = [
        [d["date"], f"{d['valid_seconds']:.3f}", f"{d['fade_outage_seconds']:.3f}",
         f"{d['switching_outage_seconds']:.3f}", d["switches"],
         fmt4(d["availability_percent"])]
        for d in report["daily"]
    ]
    hist_rows = [[h["bin"], h["lo"], h["hi_exclusive"], h["days"]]
                 for h in report["switch_histogram"]]
    margin_rows = [
        [sid, fmt8(frac)] for sid, frac in sorted(result.standby_margin_fraction.items())
    ]
    return {
        "switch_events.csv": (["time_utc", "from_gw", "to_gw"], event_rows),
        "daily.csv": (
            ["date", "valid_seconds", "fade_outage_seconds", "switching_outage_seconds",
             "switches", "availability_percent"],
            daily_rows,
        ),
        "switch_histogram.csv": (["bin", "lo", "hi_exclusive", "days"], hist_rows),
        "standby_margin.csv": (["site_id", "fraction_of_valid_time"], margin_rows),
    }


# ---------------------------------------------------------------------------
# sweeps and cluster plans
# ---------------------------------------------------------------------------

def build_sweep_report(sweep: SweepResult, **header_kw) -> dict:
    report = report_header(**header_kw)
    report["sweep"] = [
        {"sst_db": float(s), "availability_percent": float(a), "network_switches": int(n)}
        for s, a, n in zip(sweep.sst_db, sweep.availability_percent,
                           sweep.network_switches)
    ]
    return report


def sweep_csv_rows(report: dict):
    rows = [
        [fmt4(p["sst_db"]), fmt4(p["availability_percent"]), p["network_switches"]]
        for p in report["sweep"]
    ]
    return ["sst_db", "availability_percent", "network_switches"], rows


def build_cluster_report(pair: PairResult, **header_kw) -> dict:
    report = report_header(**header_kw)
    report["category"] = pair.plan.category
    report["sub_networks"] = [
        {
            "site_ids": list(r.config.site_ids),
            "n_active": r.config.n_active,
            "availability_percent": r.availability_percent,
            "network_switches": r.network_switches,
            "fade_outage_seconds": r.fade_outage_seconds,
            "switching_outage_seconds": r.switching_outage_seconds,
        }
        for r in pair.sub_results
    ]
    report["pair"] = {
        "availability_percent": pair.pair_availability_percent,
        "network_switches": pair.pair_switches,
    }
    return report


def cluster_csv_rows(report: dict):
    rows = []
    for i, sub in enumerate(report["sub_networks"], start=1):
        rows.append([f"sub-{i}", "+".join(sub["site_ids"]),
                     fmt4(sub["availability_percent"]), sub["network_switches"]])
    rows.append(["pair", "", fmt4(report["pair"]["availability_percent"]),
                 report["pair"]["network_switches"]])
    header = ["sub_network", "site_ids", "availability_percent", "network_switches"]
    return header, rows


def build_baseline_report(table: BaselineTable, **header_kw) -> dict:
    report = report_header(**header_kw)
    report["fade_margins_db"] = list(table.fade_margins_db)
    report["combinations"] = [
        {"site_ids": list(combo), "availability_percent": list(avail)}
        for combo, avail in zip(table.combinations, table.availability_percent)
    ]
    report["region_averages"] = {r: list(v) for r, v in table.region_averages.items()}
    report["overall_average"] = list(table.overall_average)
    return report


def baseline_csv_rows(report: dict):
    header = ["combination"] + [
        f"availability_percent_{fmt4(m)}dB" for m in report["fade_margins_db"]
    ]
    rows = []
    for entry in report["combinations"]:
        rows.append(["+".join(entry["site_ids"])]
                    + [fmt4(a) for a in entry["availability_percent"]])
    for region, avg in sorted(report["region_averages"].items()):
        rows.append([f"average_including_{region}_pair"] + [fmt4(a) for a in avg])
    rows.append(["average_all"] + [fmt4(a) for a in report["overall_average"]])
    return header, rows


# ---------------------------------------------------------------------------
# series round-trip
# ---------------------------------------------------------------------------

def series_csv_rows(series, grid):
    """Rows in the input CSV format (timestamp_utc,attenuation_db,valid)."""
    rows = []
    for k in range(grid.count):
        t = grid.start_epoch + k * grid.step
        ts = str(int(t)) if t.denominator == 1 else str(float(t))
        if series.valid[k]:
            rows.append([ts, repr(float(series.values[k])), 1])
        else:
            rows.append([ts, "NaN", 0])
    return ["timestamp_utc", "attenuation_db", "valid"], rows
