"""Attenuation time series: ingestion, harmonization and synthesis.

All series live on uniform time grids. Attenuation values are excess
attenuation in dB (relative to clear sky) and are clamped to >= 0 on
ingestion. Invalid samples (gaps, sentinel values, valid=0 rows) carry a
False validity flag and are excluded from the time base of every
downstream statistic.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from .errors import DataError, FormatError, SpanError, SpecError

logger = logging.getLogger(__name__)

__all__ = [
    "TimeGrid",
    "SiteMeta",
    "AttenuationSeries",
    "SeriesSet",
    "SiteSynthSpec",
    "SynthSpec",
    "load_series",
    "harmonize",
    "synthesize",
    "synthesize_events",
]


def as_step(value) -> Fraction:
    """Normalize a grid step (seconds) to an exact positive Fraction."""
    if isinstance(value, Fraction):
        step = value
    elif isinstance(value, int):
        step = Fraction(value)
    elif isinstance(value, float):
        # go through the decimal repr so 0.5 -> 1/2, not a 2**-53 monster
        step = Fraction(str(value))
    elif isinstance(value, str):
        step = Fraction(value)
    else:
        raise TypeError(f"cannot interpret step {value!r}")
    if step <= 0:
        raise DataError(f"grid step must be positive, got {step}")
    return step


@dataclass(frozen=True, slots=True)
class TimeGrid:
    """Uniform sampling grid: sample k is at start_epoch + k*step seconds UTC."""

    start_epoch: int
    step: Fraction
    count: int

    def __post_init__(self):
        object.__setattr__(self, "start_epoch", int(self.start_epoch))
        object.__setattr__(self, "step", as_step(self.step))
        object.__setattr__(self, "count", int(self.count))
        if self.count < 0:
            raise DataError("grid count must be non-negative")

    @property
    def step_seconds(self) -> float:
        return float(self.step)

    @property
    def span_seconds(self) -> Fraction:
        """Length of the grid in seconds (count * step)."""
        return self.step * self.count

    def first_instant(self) -> Fraction:
        return Fraction(self.start_epoch)

    def last_instant(self) -> Fraction:
        if self.count == 0:
            return Fraction(self.start_epoch)
        return self.start_epoch + (self.count - 1) * self.step

    def time_at(self, index: int) -> float:
        return float(self.start_epoch + index * self.step)

    def iso_at(self, index: int) -> str:
        t = self.start_epoch + index * self.step
        dt = datetime.fromtimestamp(float(t), tz=timezone.utc)
        if t.denominator == 1:
            return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True, slots=True)
class SiteMeta:
    """Static description of a measurement / gateway site."""

    site_id: str
    region_tag: str
    latitude: float
    longitude: float
    elevation_angle: float
    frequency_ghz: float

    def __post_init__(self):
        if not self.site_id:
            raise DataError("site_id must be non-empty")
        if not 0.0 < self.elevation_angle <= 90.0:
            raise DataError(f"{self.site_id}: elevation angle must be in (0, 90]")
        if self.frequency_ghz <= 0:
            raise DataError(f"{self.site_id}: frequency must be positive")
        if not -90.0 <= self.latitude <= 90.0:
            raise DataError(f"{self.site_id}: latitude out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise DataError(f"{self.site_id}: longitude out of range")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AttenuationSeries:
    """One site's excess-attenuation samples on a uniform grid.

    ``values`` holds dB excess attenuation, ``valid`` flags usable samples.
    Values at invalid samples are unspecified (typically 0 or NaN) and must
    never enter a statistic.
    """

    site_id: str
    grid: TimeGrid
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        valid = np.ascontiguousarray(self.valid, dtype=bool)
        if values.ndim != 1 or valid.ndim != 1:
            raise DataError("values and valid must be 1-D")
        if len(values) != len(valid) or len(values) != self.grid.count:
            raise DataError(
                f"{self.site_id}: series length {len(values)} does not match "
                f"grid count {self.grid.count}"
            )
        vv = values[valid]
        if vv.size and (not np.isfinite(vv).all() or (vv < 0).any()):
            raise DataError(f"{self.site_id}: valid samples must be finite and >= 0 dB")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "valid", _freeze(valid))

    def __len__(self) -> int:
        return self.grid.count

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())


@dataclass(frozen=True, eq=False)
class SeriesSet:
    """A collection of per-site series sharing one grid."""

    grid: TimeGrid
    members: tuple  # of (SiteMeta, AttenuationSeries)

    def __post_init__(self):
        members = tuple(self.members)
        ids = [m.site_id for m, _ in members]
        if len(set(ids)) != len(ids):
            raise DataError("site_ids in a SeriesSet must be unique")
        for meta, series in members:
            if meta.site_id != series.site_id:
                raise DataError(f"meta/series id mismatch: {meta.site_id} vs {series.site_id}")
            if series.grid != self.grid:
                raise DataError(f"{meta.site_id}: series grid differs from set grid")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def site_ids(self) -> tuple:
        return tuple(m.site_id for m, _ in self.members)

    def meta(self, site_id: str) -> SiteMeta:
        for m, _ in self.members:
            if m.site_id == site_id:
                return m
        raise KeyError(site_id)

    def series(self, site_id: str) -> AttenuationSeries:
        for m, s in self.members:
            if m.site_id == site_id:
                return s
        raise KeyError(site_id)

    def concurrent_valid_mask(self) -> np.ndarray:
        """Boolean mask of samples valid at every site."""
        mask = np.ones(self.grid.count, dtype=bool)
        for _, s in self.members:
            mask &= s.valid
        return mask

    @property
    def concurrent_validity_fraction(self) -> float:
        if self.grid.count == 0:
            return 0.0
        return float(self.concurrent_valid_mask().sum()) / self.grid.count


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

_HEADER = ("timestamp_utc", "attenuation_db", "valid")


def _parse_timestamp(text: str) -> Fraction:
    text = text.strip()
    try:
        return Fraction(text)  # integer or decimal epoch seconds
    except ValueError:
        pass
    try:
        iso = text.replace("Z", "+00:00")
        dt = datetime.fromisoformat(iso)
    except ValueError:
        raise DataError(f"unparsable timestamp {text!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    epoch = int(dt.timestamp())
    if dt.microsecond:
        return Fraction(epoch * 1_000_000 + dt.microsecond, 1_000_000)
    return Fraction(epoch)


def load_series(path, site: SiteMeta, step=None):
    """Load one site's CSV into an AttenuationSeries on the file's native grid.

    The file must carry the header ``timestamp_utc,attenuation_db,valid``.
    Rows missing from an otherwise uniform grid become invalid samples, as
    do rows with valid=0 or an empty/NaN attenuation. When ``step`` is not
    given it is inferred as the GCD of the timestamp differences.

    Returns (AttenuationSeries, TimeGrid).
    """
    try:
        fh = open(path, "r", newline="")
    except OSError as exc:
        raise DataError(f"cannot open series file {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file")
        if [h.strip().lower() for h in header] != list(_HEADER):
            raise FormatError(
                f"{path}: expected header {','.join(_HEADER)}, got {','.join(header)}"
            )
        times: list[Fraction] = []
        raw_vals: list[float] = []
        raw_valid: list[bool] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            t = _parse_timestamp(row[0])
            if times and t <= times[-1]:
                raise DataError(f"{path}:{lineno}: timestamps must be strictly increasing")
            flag_text = row[2].strip()
            if flag_text not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: valid flag must be 0 or 1")
            ok = flag_text == "1"
            value = math.nan
            if ok:
                text = row[1].strip()
                if not text or text.lower() == "nan":
                    ok = False
                else:
                    try:
                        value = float(text)
                    except ValueError:
                        raise DataError(f"{path}:{lineno}: bad attenuation {row[1]!r}")
                    if not math.isfinite(value):
                        ok = False
            times.append(t)
            raw_vals.append(value)
            raw_valid.append(ok)
    if not times:
        raise DataError(f"{path}: no data rows")

    if step is not None:
        native_step = as_step(step)
    elif len(times) == 1:
        native_step = Fraction(1)
    else:
        native_step = times[1] - times[0]
        for a, b in zip(times[1:], times[2:]):
            d = b - a
            native_step = Fraction(math.gcd(native_step.numerator * d.denominator,
                                            d.numerator * native_step.denominator),
                                   native_step.denominator * d.denominator)

    start = times[0]
    if start.denominator != 1:
        raise DataError(f"{path}: series must start on a whole epoch second, got {start}")
    span = times[-1] - start
    if span % native_step != 0:
        raise DataError(f"{path}: timestamps do not align with step {native_step}")
    count = int(span / native_step) + 1
    grid = TimeGrid(start_epoch=int(start), step=native_step, count=count)

    values = np.zeros(count, dtype=np.float64)
    valid = np.zeros(count, dtype=bool)
    clamped = 0
    for t, v, ok in zip(times, raw_vals, raw_valid):
        offset = (t - start) / native_step
        if offset.denominator != 1:
            raise DataError(f"{path}: timestamp {t} off the {native_step} s grid")
        k = int(offset)
        if ok and v < 0.0:
            v = 0.0
            clamped += 1
        values[k] = v if ok else 0.0
        valid[k] = ok
    if clamped:
        logger.info("%s: clamped %d negative samples to 0 dB", path, clamped)

    return AttenuationSeries(site_id=site.site_id, grid=grid, values=values, valid=valid), grid


# ---------------------------------------------------------------------------
# Harmonization
# ---------------------------------------------------------------------------

def _resample(series: AttenuationSeries, target: TimeGrid, downsample: str) -> AttenuationSeries:
    native = series.grid
    ns, ts = native.step, target.step
    # exact integer time arithmetic on a common denominator
    den = math.lcm(ns.denominator, ts.denominator)
    ns_i = ns.numerator * (den // ns.denominator)
    ts_i = ts.numerator * (den // ts.denominator)
    s0 = native.start_epoch * den
    t0 = target.start_epoch * den

    if ts >= ns:
        # bin mean / bin max: target bin k covers [t_k, t_k + ts)
        edges = t0 + np.arange(target.count + 1, dtype=np.int64) * ts_i
        lo = -(-(edges[:-1] - s0) // ns_i)  # ceil division
        hi = -(-(edges[1:] - s0) // ns_i)  # first native index of next bin
        lo = np.clip(lo, 0, native.count)
        hi = np.clip(hi, 0, native.count)
        cnt = np.concatenate(([0], np.cumsum(series.valid.astype(np.int64))))
        n_in_bin = cnt[hi] - cnt[lo]
        valid = n_in_bin > 0
        if downsample == "mean":
            sums = np.concatenate(([0.0], np.cumsum(series.values * series.valid)))
            values = (sums[hi] - sums[lo]) / np.maximum(n_in_bin, 1)
            # echo single-sample bins exactly; cumsum differences round
            ones = np.flatnonzero(n_in_bin == 1)
            if ones.size:
                valid_positions = np.flatnonzero(series.valid)
                src = valid_positions[cnt[lo[ones]]]
                values[ones] = series.values[src]
        elif downsample == "max":
            masked = np.where(series.valid, series.values, -np.inf)
            values = np.full(target.count, 0.0)
            for k in range(target.count):
                if valid[k]:
                    values[k] = masked[lo[k]:hi[k]].max()
        else:
            raise SpecError(f"unknown downsample policy {downsample!r}")
        values = np.where(valid, values, 0.0)
    else:
        # upsample: hold the covering native sample (at most one native step)
        t_instants = t0 + np.arange(target.count, dtype=np.int64) * ts_i
        j = (t_instants - s0) // ns_i
        inside = (j >= 0) & (j < native.count)
        j_safe = np.clip(j, 0, max(native.count - 1, 0))
        valid = inside & series.valid[j_safe]
        values = np.where(valid, series.values[j_safe], 0.0)

    return AttenuationSeries(site_id=series.site_id, grid=target,
                             values=values, valid=valid)


def harmonize(members, target_step, downsample: str = "mean") -> SeriesSet:
    """Bring heterogeneous-grid series onto one grid at ``target_step`` seconds.

    The output grid covers the intersection of the input spans and starts on
    a whole epoch second. Downsampling averages the valid native samples in
    each target bin (``downsample="max"`` selects max-hold instead); a bin
    with no valid native sample is invalid. Upsampling holds the previous
    valid sample for at most one native step.
    """
    members = list(members)
    if not members:
        raise SpanError("harmonize needs at least one series")
    ts = as_step(target_step)
    t0 = max(s.grid.first_instant() for _, s in members)
    t1 = min(s.grid.last_instant() for _, s in members)
    if t1 < t0:
        raise SpanError(f"input spans do not intersect ({float(t0)} > {float(t1)})")
    start = math.ceil(t0)
    count = int((t1 - start) // ts) + 1 if t1 >= start else 0
    if count <= 0:
        raise SpanError("input spans intersect but contain no grid-aligned instant")
    target = TimeGrid(start_epoch=start, step=ts, count=count)
    out = tuple((meta, _resample(series, target, downsample)) for meta, series in members)
    return SeriesSet(grid=target, members=out)


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class SiteSynthSpec:
    """Per-site fade-event statistics for the synthetic generator."""

    meta: SiteMeta
    rate_per_day: float
    duration_mu: float     # lognormal location, log-seconds
    duration_sigma: float  # lognormal scale
    peak_mu: float         # lognormal location, log-dB
    peak_sigma: float      # lognormal scale
    shape: str = "linear"

    def __post_init__(self):
        if self.rate_per_day < 0:
            raise SpecError(f"{self.meta.site_id}: fade rate must be >= 0")
        if self.duration_sigma < 0 or self.peak_sigma < 0:
            raise SpecError(f"{self.meta.site_id}: lognormal sigma must be >= 0")
        if self.shape != "linear":
            raise SpecError(f"{self.meta.site_id}: unsupported fade shape {self.shape!r}")


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Multi-site synthetic scenario: marginals plus event co-occurrence."""

    grid: TimeGrid
    sites: tuple  # of SiteSynthSpec
    correlation: np.ndarray | None = None

    def __post_init__(self):
        sites = tuple(self.sites)
        if not sites:
            raise SpecError("SynthSpec needs at least one site")
        ids = [s.meta.site_id for s in sites]
        if len(set(ids)) != len(ids):
            raise SpecError("synthetic site_ids must be unique")
        n = len(sites)
        corr = self.correlation
        if corr is None:
            corr = np.eye(n)
        corr = np.asarray(corr, dtype=np.float64)
        if corr.shape != (n, n):
            raise SpecError(f"correlation must be {n}x{n}, got {corr.shape}")
        if not np.allclose(corr, corr.T, atol=1e-12):
            raise SpecError("correlation matrix must be symmetric")
        if (corr < 0).any() or (corr > 1).any():
            raise SpecError("correlations must lie in [0, 1]")
        if not np.allclose(np.diag(corr), 1.0):
            raise SpecError("correlation diagonal must be 1")
        if np.linalg.eigvalsh(corr).min() < -1e-9:
            raise SpecError("correlation matrix must be positive semidefinite")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "correlation", _freeze(np.array(corr)))


def _correlation_groups(corr: np.ndarray):
    """Collapse sites linked by correlation exactly 1 into shared groups."""
    n = corr.shape[0]
    group = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if corr[i, j] == 1.0:
                g = group[j]
                tgt = group[i]
                group = [tgt if x == g else x for x in group]
    reps = sorted(set(group))
    remap = {g: k for k, g in enumerate(reps)}
    return [remap[g] for g in group], len(reps)


def _cholesky_psd(mat: np.ndarray) -> np.ndarray:
    """Deterministic lower-Cholesky factor tolerating PSD-singular input."""
    n = mat.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = mat[i, j] - float(np.dot(L[i, :j], L[j, :j]))
            if i == j:
                if s < -1e-10:
                    raise SpecError("correlation matrix is not positive semidefinite")
                L[i, j] = math.sqrt(max(s, 0.0))
            else:
                L[i, j] = s / L[j, j] if L[j, j] > 0.0 else 0.0
    return L


def _components(corr: np.ndarray):
    """Connected components of the positive-correlation graph."""
    n = corr.shape[0]
    comp = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if corr[i, j] > 0.0:
                a, b = comp[i], comp[j]
                if a != b:
                    comp = [a if x == b else x for x in comp]
    order = []
    for c in comp:
        if c not in order:
            order.append(c)
    return [[i for i in range(n) if comp[i] == c] for c in order]


def _mix(L: np.ndarray, u: np.ndarray) -> np.ndarray:
    """z = u @ L.T via explicit loops: independent of the BLAS build."""
    n_cells, n_groups = u.shape
    z = np.zeros((n_cells, n_groups))
    for g in range(n_groups):
        for h in range(g + 1):
            if L[g, h] != 0.0:
                z[:, g] += L[g, h] * u[:, h]
    return z


def synthesize_events(spec: SynthSpec, seed: int):
    """Draw the fade events for each site, before rasterization.

    Sites connected through the correlation matrix share one candidate-
    event pool: each pool cell carries latent Gaussian vectors for
    participation, duration and peak, correlated per the matrix, so fully
    correlated sites share events (including depth quantiles) while
    unconnected sites draw from independent pools. Returns a dict
    site_id -> list of (epoch_offset_s, duration_s, peak_db).
    """
    rng = np.random.default_rng(int(seed))
    span = float(spec.grid.span_seconds)
    out = {s.meta.site_id: [] for s in spec.sites}
    if span == 0.0:
        return out
    ndist = NormalDist()

    for members in _components(spec.correlation):
        sites = [spec.sites[i] for i in members]
        rates = np.array([s.rate_per_day for s in sites])
        # oversampled pool: participation stays strictly sub-unit so the
        # latent-Gaussian thresholding is active for every site
        lam = 2.0 * rates.max(initial=0.0)
        if lam == 0.0:
            continue
        corr = spec.correlation[np.ix_(members, members)]
        group_of, n_groups = _correlation_groups(corr)
        reps = [group_of.index(g) for g in range(n_groups)]
        L = _cholesky_psd(corr[np.ix_(reps, reps)])

        n_cells = int(rng.poisson(lam * span / 86400.0))
        epochs = rng.uniform(0.0, span, n_cells)
        z_part = _mix(L, rng.standard_normal((n_cells, n_groups)))
        z_dur = _mix(L, rng.standard_normal((n_cells, n_groups)))
        z_peak = _mix(L, rng.standard_normal((n_cells, n_groups)))

        for idx, site in enumerate(sites):
            p = site.rate_per_day / lam
            if p <= 0.0:
                continue
            g = group_of[idx]
            take = z_part[:, g] > ndist.inv_cdf(1.0 - p)
            durations = np.exp(site.duration_mu + site.duration_sigma * z_dur[:, g])
            peaks = np.exp(site.peak_mu + site.peak_sigma * z_peak[:, g])
            events = out[site.meta.site_id]
            for c in np.flatnonzero(take):
                events.append((float(epochs[c]), float(durations[c]), float(peaks[c])))
    return out


def synthesize(spec: SynthSpec, seed: int) -> SeriesSet:
    """Generate a SeriesSet of triangular fade events, deterministic per seed.

    Overlapping events combine by max so event peaks keep their drawn
    depth. All samples are valid.
    """
    events = synthesize_events(spec, seed)
    step = spec.grid.step_seconds
    n = spec.grid.count
    members = []
    for site in spec.sites:
        values = np.zeros(n, dtype=np.float64)
        for epoch, duration, peak in events[site.meta.site_id]:
            if duration <= 0.0:
                continue
            k0 = max(int(math.ceil(epoch / step)), 0)
            k1 = min(int(math.floor((epoch + duration) / step)), n - 1)
            if k1 < k0:
                continue
            t = np.arange(k0, k1 + 1, dtype=np.float64) * step
            ramp = peak * (1.0 - np.abs(2.0 * (t - epoch) / duration - 1.0))
            np.maximum(values[k0:k1 + 1], np.clip(ramp, 0.0, None),
                       out=values[k0:k1 + 1])
        series = AttenuationSeries(site_id=site.meta.site_id, grid=spec.grid,
                                   values=values, valid=np.ones(n, dtype=bool))
        members.append((site.meta, series))
    return SeriesSet(grid=spec.grid, members=tuple(members))
