"""N-active + P-redundant gateway switching emulation.

The emulation consumes only samples that are valid at every configured
gateway; invalid time is excluded from the availability time base. Each
switch freezes the network for the (sample-rounded) switching delay w and
books exactly w seconds of switching outage, so

    switching_outage_seconds == network_switches * w_eff

holds on every run. Fading during a freeze window is attributed to
switching outage, never double counted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._kernel import (
    FREEZE_GATEWAY,
    FREEZE_NETWORK,
    POLICY_FIRST,
    POLICY_RANDOM,
    POLICY_ROUND_ROBIN,
    run_switching,
)
from .errors import ConfigError, StatisticError
from .timeseries import SeriesSet

logger = logging.getLogger(__name__)

__all__ = [
    "GatewayConfig",
    "NetworkConfig",
    "SwitchEvent",
    "DailyStats",
    "EmulationResult",
    "emulate",
    "availability_no_sgd",
    "availability_count_oracle",
    "standby_margin_time",
    "SELECTION_POLICIES",
]

SELECTION_POLICIES = {
    "first-in-order": POLICY_FIRST,
    "uniform-random": POLICY_RANDOM,
    "round-robin": POLICY_ROUND_ROBIN,
}

FREEZE_SCOPES = {"network": FREEZE_NETWORK, "gateway": FREEZE_GATEWAY}

_DAY = 86400
_CHUNK = 1 << 20


@dataclass(frozen=True, slots=True)
class GatewayConfig:
    """One gateway's link-budget thresholds.

    The gateway is in outage above fade_margin_db; switching is initiated
    above sst_db. sst_db == fade_margin_db is the common-dimensioning
    default; sst_db < fade_margin_db models a switching hysteresis.
    """

    site_id: str
    region_tag: str
    fade_margin_db: float
    sst_db: float

    def __post_init__(self):
        if not 0 < self.sst_db <= self.fade_margin_db:
            raise ConfigError(
                f"{self.site_id}: need 0 < SST <= FM, got SST={self.sst_db}, "
                f"FM={self.fade_margin_db}"
            )


@dataclass(frozen=True, slots=True)
class NetworkConfig:
    """The N+P roster and switching behaviour of one emulation run."""

    gateways: tuple  # of GatewayConfig, roster order
    n_active: int
    n_redundant: int
    switching_delay_s: float = 0.0
    selection_policy: str = "uniform-random"
    seed: int | None = None
    initial_active: tuple | None = None  # site_ids; default: first N in order
    freeze_scope: str = "network"

    def __post_init__(self):
        gws = tuple(self.gateways)
        object.__setattr__(self, "gateways", gws)
        ids = [g.site_id for g in gws]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate gateway site_ids")
        if self.n_active < 1 or self.n_redundant < 0:
            raise ConfigError("need n_active >= 1 and n_redundant >= 0")
        if len(gws) != self.n_active + self.n_redundant:
            raise ConfigError(
                f"roster size {len(gws)} != N+P = {self.n_active + self.n_redundant}"
            )
        if self.switching_delay_s < 0:
            raise ConfigError("switching delay must be >= 0")
        if self.selection_policy not in SELECTION_POLICIES:
            raise ConfigError(f"unknown selection policy {self.selection_policy!r}")
        if self.freeze_scope not in FREEZE_SCOPES:
            raise ConfigError(f"unknown freeze scope {self.freeze_scope!r}")
        if self.selection_policy == "uniform-random" and self.seed is None:
            raise ConfigError("uniform-random selection needs a seed")
        if self.initial_active is not None:
            init = tuple(self.initial_active)
            if len(init) != self.n_active or len(set(init)) != len(init):
                raise ConfigError("initial_active must list n_active distinct gateways")
            unknown = set(init) - set(ids)
            if unknown:
                raise ConfigError(f"initial_active references unknown gateways {sorted(unknown)}")
            object.__setattr__(self, "initial_active", init)

    @property
    def site_ids(self) -> tuple:
        return tuple(g.site_id for g in self.gateways)

    def initial_active_ids(self) -> tuple:
        if self.initial_active is not None:
            return self.initial_active
        return self.site_ids[: self.n_active]


@dataclass(frozen=True, slots=True)
class SwitchEvent:
    """One handover: from_gw goes standby, to_gw goes active."""

    time_index: int  # sample index on the SeriesSet grid
    from_gw: str
    to_gw: str


@dataclass(frozen=True, eq=False)
class DailyStats:
    """Per-UTC-day sample counts; only days with valid samples appear."""

    day_epochs: np.ndarray      # UTC midnight epoch seconds
    valid_samples: np.ndarray
    fade_samples: np.ndarray
    switches: np.ndarray
    step: Fraction
    w_eff: Fraction             # effective (rounded) switching delay, seconds

    def __len__(self):
        return len(self.day_epochs)

    @property
    def valid_seconds(self) -> np.ndarray:
        return self.valid_samples * float(self.step)

    @property
    def fade_outage_seconds(self) -> np.ndarray:
        return self.fade_samples * float(self.step)

    @property
    def switching_outage_seconds(self) -> np.ndarray:
        return self.switches * float(self.w_eff)

    @property
    def availability_percent(self) -> np.ndarray:
        outage = self.fade_outage_seconds + self.switching_outage_seconds
        return 100.0 * (1.0 - outage / self.valid_seconds)


@dataclass(frozen=True, eq=False)
class EmulationResult:
    """Everything one emulation run produced."""

    config: NetworkConfig
    grid_start_epoch: int
    grid_step: Fraction
    valid_samples: int
    total_samples: int
    w_eff_seconds: float
    w_samples: int
    initial_active: tuple
    switch_events: tuple  # of SwitchEvent
    network_switches: int
    per_gw_switches: dict
    fade_outage_seconds: float
    switching_outage_seconds: float
    availability_percent: float
    network_fade_count: int
    network_mean_fade_duration_seconds: float | None
    standby_margin_fraction: dict
    daily: DailyStats

    @property
    def valid_seconds(self) -> float:
        return float(self.grid_step * self.valid_samples)

    @property
    def seed(self):
        return self.config.seed


def _policy_code(config: NetworkConfig) -> int:
    return SELECTION_POLICIES[config.selection_policy]


def _effective_delay(config: NetworkConfig, step: Fraction):
    """Round the switching delay up to whole samples; returns (w_samples, w_eff)."""
    w = Fraction(str(float(config.switching_delay_s)))
    if w == 0:
        return 0, Fraction(0)
    w_samples = math.ceil(w / step)
    w_eff = w_samples * step
    if w_eff != w:
        logger.warning(
            "switching delay %s s is not a multiple of the %s s grid step; "
            "rounded up to %s s", float(w), float(step), float(w_eff),
        )
    return w_samples, w_eff


def _gateway_arrays(sset: SeriesSet, gateways):
    missing = [g.site_id for g in gateways if g.site_id not in sset.site_ids]
    if missing:
        raise ConfigError(f"no series for configured gateways {missing}")
    series = [sset.series(g.site_id) for g in gateways]
    mask = np.ones(sset.grid.count, dtype=bool)
    for s in series:
        mask &= s.valid
    if not mask.any():
        raise StatisticError("no concurrently valid samples across the configured gateways")
    if mask.all():
        valid_idx = None
        att = [s.values for s in series]
    else:
        valid_idx = np.flatnonzero(mask)
        att = [s.values[valid_idx] for s in series]
    return att, valid_idx, int(mask.sum())


def _day_sample_edges(start_epoch: int, step: Fraction, n: int):
    """Per-UTC-day sample-index boundaries over an n-sample grid.

    Returns (day_epochs, edges) where samples k with edges[d] <= k < edges[d+1]
    fall on day d. Exact integer arithmetic.
    """
    num, den = step.numerator, step.denominator
    d0 = start_epoch // _DAY
    t_last_num = start_epoch * den + (n - 1) * num  # last instant * den
    d_last = t_last_num // (_DAY * den)
    days = np.arange(d0, d_last + 1, dtype=np.int64)
    bounds = np.arange(d0, d_last + 2, dtype=np.int64) * (_DAY * den) - start_epoch * den
    edges = -(-bounds // num)  # ceil division
    np.clip(edges, 0, n, out=edges)
    return days * _DAY, edges


def _counts_between(sorted_idx: np.ndarray, edges: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(sorted_idx, edges)
    return np.diff(pos)


def _fade_runs(orig_fade_idx: np.ndarray):
    """Maximal runs of consecutive grid indices; returns run sample counts."""
    if orig_fade_idx.size == 0:
        return np.array([], dtype=np.int64)
    breaks = np.flatnonzero(np.diff(orig_fade_idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [orig_fade_idx.size - 1]))
    return orig_fade_idx[ends] - orig_fade_idx[starts] + 1


def emulate(sset: SeriesSet, config: NetworkConfig) -> EmulationResult:
    """Run the N+P switching state machine over a SeriesSet.

    Deterministic for a fixed (set, config, seed): the uniform-random
    standby selection runs on a seeded splitmix64 stream, so results are
    reproducible bit for bit across runs, platforms and kernel backends.
    """
    gws = config.gateways
    att, valid_idx, n_valid = _gateway_arrays(sset, gws)
    step = sset.grid.step
    w_samples, w_eff = _effective_delay(config, step)

    sst = np.array([g.sst_db for g in gws])
    fm = np.array([g.fade_margin_db for g in gws])
    init_ids = config.initial_active_ids()
    init = np.array([1 if g.site_id in init_ids else 0 for g in gws], dtype=np.uint8)

    ev_t, ev_from, ev_to, fade, frozen, margin = run_switching(
        att, sst, fm, config.n_active, w_samples,
        _policy_code(config), config.seed or 0, init,
        FREEZE_SCOPES[config.freeze_scope],
    )

    ids = config.site_ids
    if valid_idx is None:
        ev_orig = ev_t
        fade_orig = np.flatnonzero(fade)
    else:
        ev_orig = valid_idx[ev_t]
        fade_orig = valid_idx[np.flatnonzero(fade)]

    events = tuple(
        SwitchEvent(time_index=int(t), from_gw=ids[f], to_gw=ids[to])
        for t, f, to in zip(ev_orig, ev_from, ev_to)
    )
    n_switches = len(events)
    per_gw = {sid: 0 for sid in ids}
    for e in events:
        per_gw[e.from_gw] += 1
        per_gw[e.to_gw] += 1
    assert sum(per_gw.values()) == 2 * n_switches

    fade_samples = int(fade.sum())
    fade_seconds = Fraction(fade_samples) * step
    switching_seconds = Fraction(n_switches) * w_eff
    if config.freeze_scope == "network":
        # every frozen sample sits inside some switch's window
        assert int(frozen.sum()) <= n_switches * w_samples
    valid_seconds = Fraction(n_valid) * step
    availability = 100 * (1 - (fade_seconds + switching_seconds) / valid_seconds)

    runs = _fade_runs(fade_orig)
    fade_count = int(runs.size)
    mean_fade = float(fade_seconds) / fade_count if fade_count else None

    day_epochs, edges = _day_sample_edges(sset.grid.start_epoch, step, sset.grid.count)
    if valid_idx is None:
        valid_per_day = np.diff(edges)
    else:
        valid_per_day = _counts_between(valid_idx, edges)
    fade_per_day = _counts_between(fade_orig, edges)
    switches_per_day = _counts_between(ev_orig, edges)
    keep = valid_per_day > 0
    daily = DailyStats(
        day_epochs=day_epochs[keep],
        valid_samples=valid_per_day[keep],
        fade_samples=fade_per_day[keep],
        switches=switches_per_day[keep],
        step=step,
        w_eff=w_eff,
    )

    margin_frac = {sid: float(margin[i]) / n_valid for i, sid in enumerate(ids)}

    return EmulationResult(
        config=config,
        grid_start_epoch=sset.grid.start_epoch,
        grid_step=step,
        valid_samples=n_valid,
        total_samples=sset.grid.count,
        w_eff_seconds=float(w_eff),
        w_samples=w_samples,
        initial_active=tuple(init_ids),
        switch_events=events,
        network_switches=n_switches,
        per_gw_switches=per_gw,
        fade_outage_seconds=float(fade_seconds),
        switching_outage_seconds=float(switching_seconds),
        availability_percent=float(availability),
        network_fade_count=fade_count,
        network_mean_fade_duration_seconds=mean_fade,
        standby_margin_fraction=margin_frac,
        daily=daily,
    )


def availability_no_sgd(sset: SeriesSet, gateways) -> float:
    """Availability (%) of a fixed roster without redundancy.

    The network counts as available at a concurrently valid sample when
    every gateway is at or below its fade margin.
    """
    gateways = list(gateways)
    if not gateways:
        raise ConfigError("need at least one gateway")
    att, _, n_valid = _gateway_arrays(sset, gateways)
    fm = [g.fade_margin_db for g in gateways]
    n = len(att[0])
    good = 0
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        ok = att[0][lo:hi] <= fm[0]
        for a, m in zip(att[1:], fm[1:]):
            ok &= a[lo:hi] <= m
        good += int(np.count_nonzero(ok))
    return 100.0 * good / n_valid


def availability_count_oracle(sset: SeriesSet, config: NetworkConfig) -> float:
    """Closed-form availability (%): samples with >= N gateways at A <= SST.

    Independent of the switching state machine; with w == 0 and SST == FM
    the emulation must reproduce it exactly.
    """
    att, _, n_valid = _gateway_arrays(sset, config.gateways)
    sst = [g.sst_db for g in config.gateways]
    n = len(att[0])
    good = 0
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        counts = (att[0][lo:hi] <= sst[0]).astype(np.int8)
        for a, s in zip(att[1:], sst[1:]):
            counts += a[lo:hi] <= s
        good += int(np.count_nonzero(counts >= config.n_active))
    return 100.0 * good / n_valid


def standby_margin_time(result: EmulationResult, sset: SeriesSet,
                        config: NetworkConfig) -> dict:
    """Fraction of total valid time each gateway sat standby with A < SST.

    Replays the role history from the recorded switch events; an
    independent cross-check of the margin tallies the emulation keeps
    inline.
    """
    if config.site_ids != result.config.site_ids:
        raise ConfigError("result was produced with a different gateway roster")
    if tuple(result.initial_active) != tuple(config.initial_active_ids()):
        raise ConfigError("result was produced with different initial roles")
    att, valid_idx, n_valid = _gateway_arrays(sset, config.gateways)
    if n_valid != result.valid_samples:
        raise ConfigError("result does not match this series set")
    ids = config.site_ids
    index_of = {sid: i for i, sid in enumerate(ids)}
    sst = [g.sst_db for g in config.gateways]
    n = len(att[0])

    ev_orig = np.array([e.time_index for e in result.switch_events], dtype=np.int64)
    if valid_idx is None:
        ev_pos = ev_orig
    else:
        ev_pos = np.searchsorted(valid_idx, ev_orig)

    standby = [sid not in result.initial_active for sid in ids]
    margin = np.zeros(len(ids), dtype=np.int64)
    cursor = 0
    k = 0
    n_events = len(result.switch_events)
    while k <= n_events:
        # segment end: roles change after the sample that carries the event
        seg_end = n if k == n_events else int(ev_pos[k]) + 1
        for g in range(len(ids)):
            if standby[g] and seg_end > cursor:
                margin[g] += int(np.count_nonzero(att[g][cursor:seg_end] < sst[g]))
        cursor = max(cursor, seg_end)
        if k == n_events:
            break
        # apply every event on this sample
        this_pos = ev_pos[k]
        while k < n_events and ev_pos[k] == this_pos:
            e = result.switch_events[k]
            standby[index_of[e.from_gw]] = True
            standby[index_of[e.to_gw]] = False
            k += 1
    return {sid: float(margin[i]) / n_valid for i, sid in enumerate(ids)}
