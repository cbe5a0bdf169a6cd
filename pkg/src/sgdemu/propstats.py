"""Single-site and joint propagation statistics over attenuation series.

Exceedance is strict everywhere: a sample at exactly the threshold does
not exceed it. All statistics run over valid samples only and report
time relative to valid time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrequencyDomainError, StatisticError
from .timeseries import AttenuationSeries, SeriesSet, _freeze

__all__ = [
    "ExceedanceCurve",
    "FadeEvent",
    "FadeSummary",
    "JointExceedanceTable",
    "exceedance",
    "fade_events",
    "fade_duration_distribution",
    "joint_exceedance",
    "frequency_scale",
]

FREQ_SCALING_RANGE_GHZ = (7.0, 55.0)


@dataclass(frozen=True, eq=False)
class ExceedanceCurve:
    """CCDF of attenuation: fraction (and minutes) of valid time above each threshold."""

    site_id: str
    thresholds_db: np.ndarray
    exceedance_fraction: np.ndarray
    exceedance_minutes: np.ndarray
    valid_seconds: float

    def __post_init__(self):
        f = self.exceedance_fraction
        if (np.diff(f) > 0).any():
            raise StatisticError("exceedance fraction must be non-increasing")
        if (f < 0).any() or (f > 1).any():
            raise StatisticError("exceedance fraction must lie in [0, 1]")
        for name in ("thresholds_db", "exceedance_fraction", "exceedance_minutes"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name), dtype=np.float64)))


@dataclass(frozen=True, slots=True)
class FadeEvent:
    """Maximal run of consecutive valid samples above a threshold."""

    start_index: int
    duration_seconds: float
    threshold_db: float


@dataclass(frozen=True, slots=True)
class FadeSummary:
    site_id: str
    threshold_db: float
    fading_time_seconds: float
    fade_count: int
    mean_duration_seconds: float | None
    valid_seconds: float

    @property
    def fading_time_percent(self) -> float:
        if self.valid_seconds == 0:
            return 0.0
        return 100.0 * self.fading_time_seconds / self.valid_seconds


@dataclass(frozen=True, eq=False)
class JointExceedanceTable:
    """Minutes both sites of each pair exceed each threshold simultaneously."""

    pairs: tuple  # of (site_a, site_b)
    thresholds_db: np.ndarray
    joint_minutes: np.ndarray  # shape (n_pairs, n_thresholds)

    def minutes(self, site_a: str, site_b: str, threshold_db: float) -> float:
        key = {site_a, site_b}
        for i, pair in enumerate(self.pairs):
            if set(pair) == key:
                j = int(np.flatnonzero(self.thresholds_db == threshold_db)[0])
                return float(self.joint_minutes[i, j])
        raise KeyError((site_a, site_b))


def _check_thresholds(thresholds) -> np.ndarray:
    th = np.asarray(thresholds, dtype=np.float64)
    if th.ndim != 1 or th.size == 0:
        raise StatisticError("thresholds must be a non-empty 1-D array")
    if (np.diff(th) <= 0).any():
        raise StatisticError("thresholds must be strictly ascending")
    if (th < 0).any():
        raise StatisticError("thresholds must be non-negative")
    return th


def exceedance(series: AttenuationSeries, thresholds) -> ExceedanceCurve:
    """CCDF of the series over its valid samples.

    fraction(th) = #(valid samples with A > th) / #(valid samples);
    minutes(th) = fraction(th) * valid time.
    """
    th = _check_thresholds(thresholds)
    n_valid = series.valid_count
    if n_valid == 0:
        raise StatisticError(f"{series.site_id}: no valid samples")
    vals = series.values[series.valid]
    counts = np.array([(vals > t).sum() for t in th], dtype=np.float64)
    frac = counts / n_valid
    valid_seconds = n_valid * series.grid.step_seconds
    # (count * step) / 60 keeps the fade-time cross-check exact in floats
    minutes = counts * series.grid.step_seconds / 60.0
    return ExceedanceCurve(site_id=series.site_id, thresholds_db=th,
                           exceedance_fraction=frac, exceedance_minutes=minutes,
                           valid_seconds=valid_seconds)


def fade_events(series: AttenuationSeries, threshold_db: float):
    """Maximal runs of valid samples exceeding the threshold.

    A validity gap terminates an event; events truncated by the window or a
    gap keep their observed duration. Returns (events, FadeSummary).
    """
    if threshold_db < 0:
        raise StatisticError("threshold must be non-negative")
    if series.valid_count == 0:
        raise StatisticError(f"{series.site_id}: no valid samples")
    exceed = series.valid & (series.values > threshold_db)
    padded = np.concatenate(([False], exceed, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    step = series.grid.step_seconds
    events = [
        FadeEvent(start_index=int(s), duration_seconds=float((e - s) * step),
                  threshold_db=float(threshold_db))
        for s, e in zip(starts, ends)
    ]
    fading_time = float(exceed.sum()) * step
    count = len(events)
    mean = fading_time / count if count else None
    summary = FadeSummary(site_id=series.site_id, threshold_db=float(threshold_db),
                          fading_time_seconds=fading_time, fade_count=count,
                          mean_duration_seconds=mean,
                          valid_seconds=series.valid_count * step)
    return events, summary


def fade_duration_distribution(events, duration_bins):
    """Fraction of fading time in events longer than each bin value.

    Normalized to the total fading time of the event list: the value at
    d=0 is 1 and the curve is non-increasing, reaching 0 beyond the
    longest event.
    """
    events = list(events)
    if not events:
        raise StatisticError("no fade events to bin")
    thresholds = {e.threshold_db for e in events}
    if len(thresholds) != 1:
        raise StatisticError("events must come from a single (series, threshold) pair")
    durations = np.array([e.duration_seconds for e in events])
    total = durations.sum()
    bins = np.asarray(duration_bins, dtype=np.float64)
    fractions = np.array([durations[durations > d].sum() / total for d in np.atleast_1d(bins)])
    return fractions if bins.ndim else float(fractions[0])


def joint_exceedance(sset: SeriesSet, thresholds) -> JointExceedanceTable:
    """Joint exceedance minutes for every unordered site pair of the set.

    A sample counts for a pair when both samples are valid and both exceed
    the threshold.
    """
    th = _check_thresholds(thresholds)
    if len(sset) < 2:
        raise StatisticError("joint exceedance needs at least two series")
    step = sset.grid.step_seconds
    ids = sset.site_ids
    pairs = []
    rows = []
    for i in range(len(ids)):
        si = sset.series(ids[i])
        for j in range(i + 1, len(ids)):
            sj = sset.series(ids[j])
            both_valid = si.valid & sj.valid
            row = [
                float((both_valid & (si.values > t) & (sj.values > t)).sum()) * step / 60.0
                for t in th
            ]
            pairs.append((ids[i], ids[j]))
            rows.append(row)
    return JointExceedanceTable(pairs=tuple(pairs), thresholds_db=th,
                                joint_minutes=np.array(rows))


def frequency_scale(series: AttenuationSeries, f1_ghz: float, f2_ghz: float,
                    allow_out_of_range: bool = False) -> AttenuationSeries:
    """Scale an attenuation series from carrier f1 to f2 (GHz).

    Long-term rain attenuation scaling of ITU-R P.618 (Annex 1, 2.2.1.3.1):

        A2 = A1 * (phi2/phi1) ** (1 - H)
        phi(f) = f^2 / (1 + 1e-4 * f^2)
        H = 1.12e-3 * (phi2/phi1)^0.5 * (phi1 * A1)^0.55

    Valid for 7..55 GHz; pass allow_out_of_range=True to scale anyway.
    Applied here to the full excess-attenuation series, an accepted
    approximation since rain dominates the deep fades that matter for
    switching. Invalid samples stay invalid; 0 dB maps to 0 dB.
    """
    lo, hi = FREQ_SCALING_RANGE_GHZ
    for f in (f1_ghz, f2_ghz):
        if not lo <= f <= hi and not allow_out_of_range:
            raise FrequencyDomainError(
                f"frequency {f} GHz outside scaling validity range [{lo}, {hi}] GHz"
            )
    phi1 = f1_ghz ** 2 / (1.0 + 1e-4 * f1_ghz ** 2)
    phi2 = f2_ghz ** 2 / (1.0 + 1e-4 * f2_ghz ** 2)
    ratio = phi2 / phi1
    a1 = np.where(series.valid, series.values, 0.0)
    h = 1.12e-3 * np.sqrt(ratio) * (phi1 * a1) ** 0.55
    scaled = a1 * ratio ** (1.0 - h)
    values = np.where(series.valid, scaled, series.values)
    return AttenuationSeries(site_id=series.site_id, grid=series.grid,
                             values=values, valid=series.valid)
