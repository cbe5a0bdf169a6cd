"""Scenario orchestration: roster combinations, sub-network clustering,
SST sweeps and daily switching statistics."""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .errors import PlanError, StatisticError
from .sgd_engine import EmulationResult, NetworkConfig, availability_no_sgd, emulate
from .timeseries import SeriesSet

__all__ = [
    "ClusterPlan",
    "PairResult",
    "SweepResult",
    "DailyBreakdown",
    "BaselineTable",
    "enumerate_combinations",
    "evaluate_cluster_plan",
    "sst_sweep",
    "daily_breakdown",
    "no_sgd_baseline",
]


def enumerate_combinations(roster, n: int, min_regions: int = 1):
    """All size-n gateway subsets whose members span >= min_regions regions.

    ``roster`` is a sequence of objects carrying site_id and region_tag
    (GatewayConfig or SiteMeta). Subsets come out in lexicographic order
    of roster position; an unsatisfiable constraint yields an empty list.
    """
    roster = list(roster)
    if n > len(roster):
        raise PlanError(f"cannot pick {n} gateways from a roster of {len(roster)}")
    out = []
    for combo in combinations(roster, n):
        if len({g.region_tag for g in combo}) >= min_regions:
            out.append(tuple(g.site_id for g in combo))
    return out


@dataclass(frozen=True, slots=True)
class ClusterPlan:
    """A partition of the roster into independently switching sub-networks.

    The category is derived from the region tags: category 1 when every
    sub-network draws each member from a different climatic region,
    category 2 when some sub-network contains a same-region pair.
    """

    sub_networks: tuple  # of NetworkConfig
    full_roster: tuple | None = None  # site_ids; default: union of sub-networks

    def __post_init__(self):
        subs = tuple(self.sub_networks)
        if len(subs) < 2:
            raise PlanError("a cluster plan needs at least two sub-networks")
        seen = set()
        for sub in subs:
            for sid in sub.site_ids:
                if sid in seen:
                    raise PlanError(f"gateway {sid} appears in more than one sub-network")
                seen.add(sid)
        if self.full_roster is not None:
            roster = tuple(self.full_roster)
            if set(roster) != seen:
                raise PlanError("sub-networks do not partition the full roster")
            object.__setattr__(self, "full_roster", roster)
        object.__setattr__(self, "sub_networks", subs)

    @property
    def category(self) -> int:
        for sub in self.sub_networks:
            tags = [g.region_tag for g in sub.gateways]
            if len(set(tags)) != len(tags):
                return 2
        return 1


@dataclass(frozen=True, slots=True)
class PairResult:
    """Joint performance of the sub-networks of one cluster plan."""

    plan: ClusterPlan
    sub_results: tuple  # of EmulationResult
    pair_availability_percent: float
    pair_switches: int


def evaluate_cluster_plan(sset: SeriesSet, plan: ClusterPlan) -> PairResult:
    """Emulate every sub-network independently and aggregate.

    Pair availability is the unweighted mean of the sub-network
    availabilities; pair switches is their sum.
    """
    results = tuple(emulate(sset, sub) for sub in plan.sub_networks)
    availability = sum(r.availability_percent for r in results) / len(results)
    switches = sum(r.network_switches for r in results)
    return PairResult(plan=plan, sub_results=results,
                      pair_availability_percent=availability,
                      pair_switches=switches)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Availability and switch count across a common-SST sweep."""

    sst_db: np.ndarray
    availability_percent: np.ndarray
    network_switches: np.ndarray
    results: tuple  # of EmulationResult


def sst_sweep(sset: SeriesSet, template: NetworkConfig, sst_values) -> SweepResult:
    """One emulation per SST value, all gateways sharing the swept threshold.

    Common dimensioning: both SST and fade margin are set to the swept
    value for every gateway. Every run reuses the template's seed so the
    points differ only by threshold.
    """
    sst_values = np.asarray(sst_values, dtype=np.float64)
    if sst_values.ndim != 1 or sst_values.size == 0:
        raise StatisticError("sst_values must be a non-empty 1-D array")
    if (np.diff(sst_values) <= 0).any():
        raise StatisticError("sst_values must be strictly ascending")
    results = []
    for threshold in sst_values:
        gws = tuple(replace(g, fade_margin_db=float(threshold), sst_db=float(threshold))
                    for g in template.gateways)
        results.append(emulate(sset, replace(template, gateways=gws)))
    return SweepResult(
        sst_db=sst_values,
        availability_percent=np.array([r.availability_percent for r in results]),
        network_switches=np.array([r.network_switches for r in results], dtype=np.int64),
        results=tuple(results),
    )


@dataclass(frozen=True, slots=True)
class BaselineTable:
    """No-redundancy availability for every admissible roster combination.

    One row per size-n subset, one availability column per fade margin;
    region averages cover the combinations containing both gateways of a
    region.
    """

    fade_margins_db: tuple
    combinations: tuple        # of site_id tuples
    availability_percent: tuple  # row-major, one tuple per combination
    region_averages: dict      # region_tag -> tuple per fade margin
    overall_average: tuple

    def __len__(self):
        return len(self.combinations)


def no_sgd_baseline(sset: SeriesSet, roster, n_active: int, fade_margins,
                    min_regions: int = 1) -> BaselineTable:
    """Availability of every n_active-gateway subset without redundancy.

    The reference point for judging what redundant gateways buy: each
    subset's availability is the fraction of time all its members sit at
    or below the fade margin, evaluated per margin value.
    """
    roster = list(roster)
    by_id = {g.site_id: g for g in roster}
    combos = enumerate_combinations(roster, n_active, min_regions=min_regions)
    margins = tuple(float(m) for m in fade_margins)
    if not margins:
        raise StatisticError("need at least one fade margin")
    rows = []
    for combo in combos:
        row = []
        for margin in margins:
            gws = [replace(by_id[sid], fade_margin_db=margin, sst_db=margin)
                   for sid in combo]
            row.append(availability_no_sgd(sset, gws))
        rows.append(tuple(row))
    regions = {}
    for region in dict.fromkeys(g.region_tag for g in roster):
        pair = [g.site_id for g in roster if g.region_tag == region]
        member_rows = [rows[i] for i, combo in enumerate(combos)
                       if all(sid in combo for sid in pair)]
        if member_rows:
            regions[region] = tuple(
                sum(r[k] for r in member_rows) / len(member_rows)
                for k in range(len(margins)))
    overall = tuple(
        sum(r[k] for r in rows) / len(rows) for k in range(len(margins))
    ) if rows else ()
    return BaselineTable(fade_margins_db=margins, combinations=tuple(combos),
                         availability_percent=tuple(rows),
                         region_averages=regions, overall_average=overall)


@dataclass(frozen=True, slots=True)
class DailyBreakdown:
    """Per-day availability/switches plus the switches-per-day histogram."""

    result: EmulationResult
    days_with_switches: int
    days_with_outage: int
    histogram: tuple  # of (lo, hi_exclusive, n_days); first bin is the singleton {1}


def daily_breakdown(result: EmulationResult) -> DailyBreakdown:
    """Histogram days by switch count: a singleton bin for 1 switch, then
    width-2 half-open bins [2,4), [4,6), ... Days without switches are
    excluded from the histogram."""
    switches = result.daily.switches
    day_outage = result.daily.fade_samples > 0
    if result.w_samples > 0:
        day_outage = day_outage | (switches > 0)
    outage_days = int(day_outage.sum())
    active = switches[switches > 0]
    bins = []
    if active.size:
        bins.append((1, 2, int((active == 1).sum())))
        top = int(active.max())
        lo = 2
        while lo <= top:
            bins.append((lo, lo + 2, int(((active >= lo) & (active < lo + 2)).sum())))
            lo += 2
    return DailyBreakdown(
        result=result,
        days_with_switches=int((switches > 0).sum()),
        days_with_outage=outage_days,
        histogram=tuple(bins),
    )
