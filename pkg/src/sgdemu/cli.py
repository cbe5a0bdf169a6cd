"""Command-line front end.

One JSON scenario config drives every stage:

    sgdemu run     --config scenario.json --out reports
    sgdemu stats   --config scenario.json
    sgdemu emulate --config scenario.json
    sgdemu sweep   --config scenario.json
    sgdemu cluster --config scenario.json
    sgdemu synth   --config scenario.json --seed 7
    sgdemu scale   --input site.csv --f1 40 --f2 50 --out reports

Exit codes: 0 success, 2 config validation failure (machine-readable
error list on stderr), 3 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, __version__, report
from .errors import (
    ConfigError,
    ConfigValidationError,
    DataError,
    FormatError,
    FrequencyDomainError,
    PlanError,
    SgdemuError,
    SpanError,
    SpecError,
    StatisticError,
)
from .propstats import frequency_scale
from .scenario import ClusterPlan, evaluate_cluster_plan, no_sgd_baseline, sst_sweep
from .sgd_engine import GatewayConfig, NetworkConfig, emulate
from .timeseries import (
    SeriesSet,
    SiteMeta,
    SiteSynthSpec,
    SynthSpec,
    TimeGrid,
    harmonize,
    load_series,
    synthesize,
)

DEFAULT_CCDF_THRESHOLDS = [0.5 * k for k in range(1, 41)]  # 0.5 .. 20 dB
DEFAULT_FADE_THRESHOLDS = [5.0, 10.0]
DEFAULT_DURATION_BINS = [0, 5, 10, 30, 60, 120, 300, 600, 1800, 3600]


# ---------------------------------------------------------------------------
# config loading / validation
# ---------------------------------------------------------------------------

def _err(errors, field, message):
    errors.append({"field": field, "message": message})


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([{"field": "", "message": f"config is not valid JSON: {exc}"}])
    if not isinstance(cfg, dict):
        raise ConfigValidationError([{"field": "", "message": "config root must be an object"}])
    return cfg


def _require_number(errors, obj, key, field, minimum=None):
    v = obj.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        _err(errors, field, f"missing or non-numeric '{key}'")
        return None
    if minimum is not None and v < minimum:
        _err(errors, field, f"'{key}' must be >= {minimum}")
        return None
    return v


def validate_config(cfg: dict, needs_network: bool = False) -> dict:
    """Apply defaults and collect validation errors; raises on any."""
    errors: list[dict] = []
    cfg = json.loads(json.dumps(cfg))  # deep copy, JSON types only

    sites = cfg.get("sites")
    if not isinstance(sites, list) or not sites:
        _err(errors, "sites", "config needs a non-empty 'sites' list")
        sites = []
    site_ids = []
    any_synth = False
    for i, site in enumerate(sites):
        field = f"sites[{i}]"
        if not isinstance(site, dict):
            _err(errors, field, "site entries must be objects")
            continue
        sid = site.get("site_id")
        if not sid or not isinstance(sid, str):
            _err(errors, field, "missing site_id")
            sid = f"<{i}>"
        if sid in site_ids:
            _err(errors, field, f"duplicate site_id {sid!r}")
        site_ids.append(sid)
        if not isinstance(site.get("region_tag"), str):
            _err(errors, field, "missing region_tag")
        _require_number(errors, site, "elevation_angle", field)
        _require_number(errors, site, "frequency_ghz", field, minimum=1e-9)
        site.setdefault("latitude", 0.0)
        site.setdefault("longitude", 0.0)
        has_csv = "csv" in site
        has_synth = "synth" in site
        if has_csv == has_synth:
            _err(errors, field, "each site needs exactly one of 'csv' or 'synth'")
        if has_synth:
            any_synth = True
            synth = site["synth"]
            if not isinstance(synth, dict):
                _err(errors, field + ".synth", "'synth' must be an object")
            else:
                _require_number(errors, synth, "rate_per_day", field + ".synth", minimum=0)
                for part in ("duration_lognormal", "peak_lognormal"):
                    block = synth.get(part)
                    if not isinstance(block, dict):
                        _err(errors, f"{field}.synth.{part}", "missing lognormal parameters")
                    else:
                        _require_number(errors, block, "mu", f"{field}.synth.{part}")
                        _require_number(errors, block, "sigma", f"{field}.synth.{part}", minimum=0)
                synth.setdefault("shape", "linear")

    if any_synth:
        grid = cfg.get("synth_grid")
        if not isinstance(grid, dict):
            _err(errors, "synth_grid", "synthetic sites need a 'synth_grid' object")
        else:
            _require_number(errors, grid, "start_epoch", "synth_grid")
            _require_number(errors, grid, "count", "synth_grid", minimum=1)
            if "step" not in grid:
                grid["step"] = "1"
        if cfg.get("seed") is None:
            _err(errors, "seed", "synthetic generation needs a seed")
        corr = cfg.get("correlation")
        if corr is not None:
            n_synth = sum(1 for s in sites if isinstance(s, dict) and "synth" in s)
            if (not isinstance(corr, list) or len(corr) != n_synth
                    or any(not isinstance(r, list) or len(r) != n_synth for r in corr)):
                _err(errors, "correlation",
                     f"correlation must be a {n_synth}x{n_synth} matrix over the synthetic sites")

    network = cfg.get("network")
    if needs_network and network is None:
        _err(errors, "network", "this command needs a 'network' section")
    if network is not None:
        if not isinstance(network, dict):
            _err(errors, "network", "'network' must be an object")
        else:
            n_a = _require_number(errors, network, "n_active", "network", minimum=1)
            n_r = _require_number(errors, network, "n_redundant", "network", minimum=0)
            network.setdefault("switching_delay_s", 0.0)
            network.setdefault("selection_policy", "uniform-random")
            network.setdefault("freeze_scope", "network")
            if network["selection_policy"] == "uniform-random" and cfg.get("seed") is None:
                _err(errors, "seed", "uniform-random selection needs a seed")
            gws = network.get("gateways")
            if not isinstance(gws, list) or not gws:
                _err(errors, "network.gateways", "missing gateway list")
            else:
                if (n_a is not None and n_r is not None
                        and len(gws) != int(n_a) + int(n_r)):
                    _err(errors, "network.gateways",
                         f"roster size {len(gws)} != n_active + n_redundant")
                for j, gw in enumerate(gws):
                    field = f"network.gateways[{j}]"
                    if not isinstance(gw, dict):
                        _err(errors, field, "gateway entries must be objects")
                        continue
                    gid = gw.get("site_id")
                    if gid not in site_ids:
                        _err(errors, field, f"gateway references unknown site {gid!r}")
                    fm = _require_number(errors, gw, "fade_margin_db", field, minimum=1e-12)
                    if "sst_db" not in gw and fm is not None:
                        gw["sst_db"] = fm
                init = network.get("initial_active")
                if init is not None:
                    known = {gw.get("site_id") for gw in gws if isinstance(gw, dict)}
                    if not isinstance(init, list) or not set(init) <= known:
                        _err(errors, "network.initial_active",
                             "initial_active must list configured gateways")

    sweep = cfg.get("sweep")
    if sweep is not None:
        values = sweep.get("sst_values_db") if isinstance(sweep, dict) else None
        if (not isinstance(values, list) or len(values) == 0
                or any(not isinstance(v, (int, float)) for v in values)
                or any(b <= a for a, b in zip(values, values[1:]))):
            _err(errors, "sweep.sst_values_db", "need a strictly ascending list of thresholds")
        if network is None:
            _err(errors, "sweep", "sweep needs a 'network' section")

    cluster = cfg.get("cluster")
    if cluster is not None:
        subs = cluster.get("sub_networks") if isinstance(cluster, dict) else None
        if not isinstance(subs, list) or len(subs) < 2:
            _err(errors, "cluster.sub_networks", "need at least two sub-networks")
        elif network is None:
            _err(errors, "cluster", "cluster needs a 'network' section")
        else:
            gw_ids = {gw.get("site_id") for gw in network.get("gateways", [])
                      if isinstance(gw, dict)}
            for j, sub in enumerate(subs):
                field = f"cluster.sub_networks[{j}]"
                members = sub.get("members") if isinstance(sub, dict) else None
                if not isinstance(members, list) or not members:
                    _err(errors, field, "missing 'members' list")
                    continue
                unknown = [m for m in members if m not in gw_ids]
                if unknown:
                    _err(errors, field, f"members not in the network roster: {unknown}")
                if _require_number(errors, sub, "n_active", field, minimum=1) is not None:
                    if int(sub["n_active"]) >= len(members):
                        _err(errors, field, "n_active must leave at least 0 standby")

    baseline = cfg.get("baseline")
    if baseline is not None:
        if not isinstance(baseline, dict):
            _err(errors, "baseline", "'baseline' must be an object")
        elif network is None:
            _err(errors, "baseline", "baseline needs a 'network' section")
        else:
            baseline.setdefault("min_regions", 1)
            if isinstance(network, dict) and isinstance(network.get("n_active"), (int, float)):
                baseline.setdefault("n_active", int(network["n_active"]))
            _require_number(errors, baseline, "n_active", "baseline", minimum=1)
            margins = baseline.get("fade_margins_db")
            if (not isinstance(margins, list) or not margins
                    or any(not isinstance(m, (int, float)) for m in margins)):
                _err(errors, "baseline.fade_margins_db", "need a list of fade margins")

    fscale = cfg.get("frequency_scale")
    if fscale is not None:
        if not isinstance(fscale, dict):
            _err(errors, "frequency_scale", "'frequency_scale' must be an object")
        else:
            _require_number(errors, fscale, "f1_ghz", "frequency_scale", minimum=1e-9)
            _require_number(errors, fscale, "f2_ghz", "frequency_scale", minimum=1e-9)

    stats = cfg.setdefault("stats", {})
    stats.setdefault("ccdf_thresholds_db", DEFAULT_CCDF_THRESHOLDS)
    stats.setdefault("fade_thresholds_db", DEFAULT_FADE_THRESHOLDS)
    stats.setdefault("duration_bins_s", DEFAULT_DURATION_BINS)
    cfg.setdefault("harmonize", {"target_step": "1", "downsample": "mean"})
    cfg["harmonize"].setdefault("target_step", "1")
    cfg["harmonize"].setdefault("downsample", "mean")

    if errors:
        raise ConfigValidationError(errors)
    return cfg


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------

def _site_meta(site: dict) -> SiteMeta:
    return SiteMeta(
        site_id=site["site_id"],
        region_tag=site["region_tag"],
        latitude=float(site["latitude"]),
        longitude=float(site["longitude"]),
        elevation_angle=float(site["elevation_angle"]),
        frequency_ghz=float(site["frequency_ghz"]),
    )


def build_series_set(cfg: dict, base_dir: Path) -> SeriesSet:
    """Load and/or synthesize every configured site, harmonized to one grid."""
    synth_sites = [s for s in cfg["sites"] if "synth" in s]
    members = []

    synth_set = None
    if synth_sites:
        grid_cfg = cfg["synth_grid"]
        grid = TimeGrid(start_epoch=int(grid_cfg["start_epoch"]),
                        step=grid_cfg["step"], count=int(grid_cfg["count"]))
        specs = []
        for site in synth_sites:
            synth = site["synth"]
            specs.append(SiteSynthSpec(
                meta=_site_meta(site),
                rate_per_day=float(synth["rate_per_day"]),
                duration_mu=float(synth["duration_lognormal"]["mu"]),
                duration_sigma=float(synth["duration_lognormal"]["sigma"]),
                peak_mu=float(synth["peak_lognormal"]["mu"]),
                peak_sigma=float(synth["peak_lognormal"]["sigma"]),
                shape=synth.get("shape", "linear"),
            ))
        corr = cfg.get("correlation")
        spec = SynthSpec(grid=grid, sites=tuple(specs),
                         correlation=np.asarray(corr, dtype=float) if corr else None)
        synth_set = synthesize(spec, int(cfg["seed"]))

    for site in cfg["sites"]:
        meta = _site_meta(site)
        if "synth" in site:
            members.append((meta, synth_set.series(meta.site_id)))
        else:
            path = Path(site["csv"])
            if not path.is_absolute():
                path = base_dir / path
            series, _ = load_series(path, meta, step=site.get("step"))
            members.append((meta, series))

    harm = cfg["harmonize"]
    return harmonize(members, harm["target_step"], harm["downsample"])


def _network_config(cfg: dict) -> NetworkConfig:
    net = cfg["network"]
    gws = tuple(
        GatewayConfig(
            site_id=gw["site_id"],
            region_tag=next(s["region_tag"] for s in cfg["sites"]
                            if s["site_id"] == gw["site_id"]),
            fade_margin_db=float(gw["fade_margin_db"]),
            sst_db=float(gw["sst_db"]),
        )
        for gw in net["gateways"]
    )
    init = net.get("initial_active")
    return NetworkConfig(
        gateways=gws,
        n_active=int(net["n_active"]),
        n_redundant=int(net["n_redundant"]),
        switching_delay_s=float(net["switching_delay_s"]),
        selection_policy=net["selection_policy"],
        seed=int(cfg["seed"]) if cfg.get("seed") is not None else None,
        initial_active=tuple(init) if init else None,
        freeze_scope=net["freeze_scope"],
    )


def _apply_frequency_scale(sset: SeriesSet, cfg: dict) -> SeriesSet:
    fscale = cfg.get("frequency_scale")
    if not fscale:
        return sset
    f1, f2 = float(fscale["f1_ghz"]), float(fscale["f2_ghz"])
    members = tuple(
        (meta, frequency_scale(series, f1, f2,
                               allow_out_of_range=bool(fscale.get("allow_out_of_range"))))
        for meta, series in sset.members
    )
    return SeriesSet(grid=sset.grid, members=members)


def _write_bundle(out_dir: Path, fmt: str, json_name: str, payload: dict, csv_files: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt in ("json", "both"):
        report.write_json(out_dir / json_name, payload)
    if fmt in ("csv", "both"):
        for name, (header, rows) in csv_files.items():
            report.write_csv(out_dir / name, header, rows)


def _stage_stats(cfg, sset, out_dir, fmt):
    stats = cfg["stats"]
    payload = report.build_stats_report(
        sset, stats["ccdf_thresholds_db"], stats["fade_thresholds_db"],
        stats["duration_bins_s"], seed=cfg.get("seed"), config=cfg)
    _write_bundle(out_dir, fmt, "stats_report.json", payload, report.stats_csv_files(payload))
    return payload


def _stage_emulate(cfg, sset, out_dir, fmt):
    result = emulate(sset, _network_config(cfg))
    payload = report.build_emulation_report(result, config=cfg)
    _write_bundle(out_dir, fmt, "emulation_report.json", payload,
                  report.emulation_csv_files(result, payload))
    return payload


def _stage_sweep(cfg, sset, out_dir, fmt):
    sweep = sst_sweep(sset, _network_config(cfg), cfg["sweep"]["sst_values_db"])
    payload = report.build_sweep_report(sweep, seed=cfg.get("seed"), config=cfg)
    header, rows = report.sweep_csv_rows(payload)
    _write_bundle(out_dir, fmt, "sweep_report.json", payload, {"sweep.csv": (header, rows)})
    return payload


def _stage_cluster(cfg, sset, out_dir, fmt):
    template = _network_config(cfg)
    by_id = {g.site_id: g for g in template.gateways}
    subs = []
    for sub in cfg["cluster"]["sub_networks"]:
        members = tuple(by_id[m] for m in sub["members"])
        subs.append(NetworkConfig(
            gateways=members,
            n_active=int(sub["n_active"]),
            n_redundant=len(members) - int(sub["n_active"]),
            switching_delay_s=template.switching_delay_s,
            selection_policy=template.selection_policy,
            seed=template.seed,
            freeze_scope=template.freeze_scope,
        ))
    plan = ClusterPlan(sub_networks=tuple(subs), full_roster=template.site_ids)
    pair = evaluate_cluster_plan(sset, plan)
    payload = report.build_cluster_report(pair, seed=cfg.get("seed"), config=cfg)
    header, rows = report.cluster_csv_rows(payload)
    _write_bundle(out_dir, fmt, "cluster_report.json", payload, {"cluster.csv": (header, rows)})
    return payload


def _stage_baseline(cfg, sset, out_dir, fmt):
    template = _network_config(cfg)
    spec = cfg["baseline"]
    table = no_sgd_baseline(sset, template.gateways, int(spec["n_active"]),
                            spec["fade_margins_db"],
                            min_regions=int(spec["min_regions"]))
    payload = report.build_baseline_report(table, seed=cfg.get("seed"), config=cfg)
    header, rows = report.baseline_csv_rows(payload)
    _write_bundle(out_dir, fmt, "baseline_report.json", payload,
                  {"baseline.csv": (header, rows)})
    return payload


def _stage_synth(cfg, sset, out_dir, fmt):
    payload = report.report_header(seed=cfg.get("seed"), config=cfg)
    payload["sites"] = {}
    csv_files = {}
    for meta, series in sset.members:
        payload["sites"][meta.site_id] = {
            "valid_fraction": float(series.valid.mean()) if len(series) else 0.0,
            "mean_db": float(series.values[series.valid].mean()) if series.valid.any() else 0.0,
            "max_db": float(series.values[series.valid].max()) if series.valid.any() else 0.0,
        }
        header, rows = report.series_csv_rows(series, sset.grid)
        csv_files[f"synthetic_{meta.site_id}.csv"] = (header, rows)
    # synthetic series are the product here: always write them
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in csv_files.items():
        report.write_csv(out_dir / name, header, rows)
    if fmt in ("json", "both"):
        report.write_json(out_dir / "synth_report.json", payload)
    return payload


def _stage_scale_config(cfg, sset, out_dir, fmt):
    scaled = _apply_frequency_scale(sset, cfg)
    payload = report.report_header(seed=cfg.get("seed"), config=cfg)
    payload["frequency_scale"] = cfg["frequency_scale"]
    out_dir.mkdir(parents=True, exist_ok=True)
    for meta, series in scaled.members:
        header, rows = report.series_csv_rows(series, scaled.grid)
        report.write_csv(out_dir / f"scaled_{meta.site_id}.csv", header, rows)
    if fmt in ("json", "both"):
        report.write_json(out_dir / "scale_report.json", payload)
    return payload


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgdemu",
        description="Smart gateway diversity emulation for satellite feeder links.",
    )
    parser.add_argument("--version", action="version",
                        version=f"sgdemu {__version__} (schema {SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, config_required=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=config_required, help="scenario config (JSON)")
        p.add_argument("--out", help="output directory (default: config output_dir or cwd)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
        return p

    add("run", "run every configured stage")
    add("stats", "propagation statistics only")
    add("emulate", "switching emulation only")
    add("sweep", "SST sweep only")
    add("cluster", "sub-network clustering only")
    add("synth", "generate and write synthetic series")
    scale = add("scale", "frequency-scale series", config_required=False)
    scale.add_argument("--input", help="single series CSV to scale (instead of --config)")
    scale.add_argument("--f1", type=float, help="source frequency, GHz")
    scale.add_argument("--f2", type=float, help="target frequency, GHz")
    scale.add_argument("--site-id", default=None, help="site id for --input mode")
    return parser


def _out_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("SGDEMU_OUT")
    if env:
        return Path(env)
    if cfg and cfg.get("output_dir"):
        return Path(cfg["output_dir"])
    return Path(".")


def _scale_single_file(args) -> int:
    if args.f1 is None or args.f2 is None:
        raise ConfigValidationError([{"field": "scale", "message": "--input mode needs --f1 and --f2"}])
    path = Path(args.input)
    sid = args.site_id or path.stem
    meta = SiteMeta(site_id=sid, region_tag="unknown", latitude=0.0, longitude=0.0,
                    elevation_angle=30.0, frequency_ghz=args.f1)
    series, grid = load_series(path, meta)
    scaled = frequency_scale(series, args.f1, args.f2)
    out = _out_dir(args, None)
    out.mkdir(parents=True, exist_ok=True)
    header, rows = report.series_csv_rows(scaled, grid)
    report.write_csv(out / f"scaled_{sid}.csv", header, rows)
    if args.format in ("json", "both"):
        payload = report.report_header()
        payload["frequency_scale"] = {"f1_ghz": args.f1, "f2_ghz": args.f2,
                                      "input": str(path), "site_id": sid}
        report.write_json(out / "scale_report.json", payload)
    return 0


_NEEDS_NETWORK = {"emulate", "sweep", "cluster"}


def _dispatch(args) -> int:
    if args.command == "scale" and args.input:
        return _scale_single_file(args)
    if not args.config:
        raise ConfigValidationError([{"field": "config", "message": "--config is required"}])

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg = validate_config(cfg, needs_network=args.command in _NEEDS_NETWORK)
    if args.command == "sweep" and cfg.get("sweep") is None:
        raise ConfigValidationError([{"field": "sweep", "message": "config has no 'sweep' section"}])
    if args.command == "cluster" and cfg.get("cluster") is None:
        raise ConfigValidationError([{"field": "cluster", "message": "config has no 'cluster' section"}])
    if args.command == "scale" and cfg.get("frequency_scale") is None:
        raise ConfigValidationError([{"field": "frequency_scale",
                                      "message": "config has no 'frequency_scale' section"}])

    out_dir = _out_dir(args, cfg)
    fmt = args.format
    base_dir = Path(args.config).resolve().parent
    sset = build_series_set(cfg, base_dir)

    if args.command == "synth":
        _stage_synth(cfg, sset, out_dir, fmt)
        return 0
    if args.command == "scale":
        _stage_scale_config(cfg, sset, out_dir, fmt)
        return 0

    sset = _apply_frequency_scale(sset, cfg)
    if args.command in ("stats", "run"):
        _stage_stats(cfg, sset, out_dir, fmt)
    if args.command == "run" and cfg.get("baseline"):
        _stage_baseline(cfg, sset, out_dir, fmt)
    if args.command == "emulate" or (args.command == "run" and cfg.get("network")):
        _stage_emulate(cfg, sset, out_dir, fmt)
    if args.command == "sweep" or (args.command == "run" and cfg.get("sweep")):
        _stage_sweep(cfg, sset, out_dir, fmt)
    if args.command == "cluster" or (args.command == "run" and cfg.get("cluster")):
        _stage_cluster(cfg, sset, out_dir, fmt)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigValidationError as exc:
        json.dump({"errors": exc.errors}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 2
    except (ConfigError, SpecError, PlanError) as exc:
        json.dump({"errors": [{"field": "", "message": str(exc)}]}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 2
    except (DataError, FormatError, SpanError, StatisticError, FrequencyDomainError) as exc:
        json.dump({"errors": [{"field": "", "message": str(exc)}]}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 3
    except SgdemuError as exc:
        json.dump({"errors": [{"field": "", "message": str(exc)}]}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
