"""Acceptance suite: one test per criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines. The
randomized criteria run on twenty frozen six-site sets (seeds 1000-1019,
1e6 one-second samples each); the full-scale criterion builds a year of
1 Hz data for six sites.
"""

import functools
import hashlib
import time
from itertools import combinations

import numpy as np
import pytest

from sgdemu import (
    ClusterPlan,
    GatewayConfig,
    SiteMeta,
    SiteSynthSpec,
    SynthSpec,
    TimeGrid,
    availability_count_oracle,
    emulate,
    enumerate_combinations,
    evaluate_cluster_plan,
    exceedance,
    fade_events,
    frequency_scale,
    joint_exceedance,
    sst_sweep,
    synthesize,
)
from conftest import make_network, make_series
from _synthsets import REGIONS, SITE_IDS, six_site_set

ACCEPTANCE_SEEDS = tuple(range(1000, 1020))
SAMPLES_PER_SET = 1_000_000


def ok(line):
    print(f"ACCEPTANCE {line}: PASS")


@functools.lru_cache(maxsize=None)
def get_set(seed):
    return six_site_set(seed, count=SAMPLES_PER_SET)


def network(fm=5.0, w=0.0, policy="uniform-random", seed=1, n_active=4):
    return make_network(list(SITE_IDS), n_active=n_active, fm=fm, w=w,
                        policy=policy, seed=seed)


def test_01_eq1_switching_outage_identity():
    # paper-table arithmetic cross-checks first
    assert round(782 * 2 / 60.0, 2) == 26.07
    assert 770 * 30 / 60.0 == 385.0
    for seed in ACCEPTANCE_SEEDS[:5]:
        sset = get_set(seed)
        for w in (0.0, 2.0, 30.0):
            t0 = time.perf_counter()
            r = emulate(sset, network(w=w, seed=seed))
            elapsed = time.perf_counter() - t0
            assert r.switching_outage_seconds == r.network_switches * r.w_eff_seconds
            assert r.w_eff_seconds == w
            assert elapsed < 1.0, f"emulation took {elapsed:.2f} s"
    ok("1 (Eq.-1 switching outage identity, exact; <1 s per run)")


def test_02_half_sum_identity():
    table_v = [338, 358, 203, 346, 126, 255]
    assert sum(table_v) == 1626 == 2 * 813
    for seed in ACCEPTANCE_SEEDS[:5]:
        sset = get_set(seed)
        for w in (0.0, 2.0):
            r = emulate(sset, network(w=w, seed=seed))
            assert sum(r.per_gw_switches.values()) == 2 * r.network_switches
    ok("2 (half-sum per-gateway switch identity, exact)")


def test_03_w0_oracle_equivalence():
    for seed in ACCEPTANCE_SEEDS:
        t0 = time.perf_counter()
        sset = get_set(seed)
        cfg = network(seed=seed)
        r = emulate(sset, cfg)
        oracle = availability_count_oracle(sset, cfg)
        elapsed = time.perf_counter() - t0
        assert r.availability_percent == oracle
        assert elapsed < 10.0, f"set {seed} took {elapsed:.2f} s"
    ok("3 (w=0 emulation equals per-sample count oracle on 20 sets, exact)")


def test_04_selection_policy_invariance():
    for seed in ACCEPTANCE_SEEDS:
        sset = get_set(seed)
        configs = [network(policy="first-in-order", seed=None),
                   network(policy="round-robin", seed=None)]
        configs += [network(policy="uniform-random", seed=s) for s in range(5)]
        avail = {emulate(sset, c).availability_percent for c in configs}
        assert len(avail) == 1
    ok("4 (availability invariant across selection policies, 7 variants x 20 sets)")


def test_05_pooling_dominance():
    # deep-margin regime: the sub-network comparison of the source study
    fm = 8.0
    for seed in ACCEPTANCE_SEEDS:
        sset = get_set(seed)
        full = emulate(sset, network(fm=fm, seed=seed))
        for first in combinations(range(6), 3):
            if 0 not in first:
                continue  # each unordered partition exactly once
            second = tuple(i for i in range(6) if i not in first)
            plan = ClusterPlan(sub_networks=(
                make_network([SITE_IDS[i] for i in first], n_active=2, fm=fm),
                make_network([SITE_IDS[i] for i in second], n_active=2, fm=fm)))
            pair = evaluate_cluster_plan(sset, plan)
            assert full.availability_percent >= pair.pair_availability_percent
    ok("5 (4+2 availability >= every (2+1)+(2+1) pair, 10 partitions x 20 sets)")


def test_06_sst_monotonicity():
    grid = [float(x) for x in np.linspace(3.0, 12.0, 10)]
    for seed in ACCEPTANCE_SEEDS:
        sset = get_set(seed)
        sweep = sst_sweep(sset, network(seed=seed), grid)
        assert (np.diff(sweep.availability_percent) >= 0).all()
    ok("6 (availability non-decreasing over 10-point SST grid x 20 sets)")


def test_07_frequency_scaling():
    pinned = 13.188715142810682  # closed-form value fixed before the build
    out = frequency_scale(make_series([10.0]), 40.0, 50.0)
    assert abs(out.values[0] - pinned) < 1e-6
    same = frequency_scale(make_series([0.0, 4.2, 11.0]), 40.0, 40.0)
    assert list(same.values) == [0.0, 4.2, 11.0]
    zero = frequency_scale(make_series([0.0]), 40.0, 50.0)
    assert zero.values[0] == 0.0
    ok("7 (frequency scaling matches pinned closed form to 1e-6 dB; identities exact)")


def test_08_fade_event_oracle():
    def naive(values, valid, threshold):
        events, run = [], 0
        for v, okflag in zip(values, valid):
            if okflag and v > threshold:
                run += 1
            else:
                if run:
                    events.append(run)
                run = 0
        if run:
            events.append(run)
        return events

    rng = np.random.default_rng(20180101)
    checked = 0
    while checked < 1000:
        n = int(rng.integers(1, 120))
        vals = rng.exponential(3.0, n)
        valid = rng.random(n) > 0.2
        if not valid.any():
            continue
        th = float(rng.uniform(0, 9))
        events, summary = fade_events(make_series(vals, valid=valid), th)
        expected = naive(vals, valid, th)
        assert [e.duration_seconds for e in events] == [float(x) for x in expected]
        assert summary.fade_count == len(expected)
        assert summary.fading_time_seconds == float(sum(expected))
        if expected:
            assert summary.mean_duration_seconds == sum(expected) / len(expected)
        checked += 1
    ok("8 (fade events match naive run-length scan on 1000 series, exact)")


def test_09_statistics_consistency():
    grid = np.linspace(0.5, 10.0, 20)
    for seed in ACCEPTANCE_SEEDS:
        sset = get_set(seed)
        for sid in SITE_IDS:
            series = sset.series(sid)
            curve = exceedance(series, grid)
            for k, th in enumerate(grid):
                _, summary = fade_events(series, float(th))
                assert curve.exceedance_minutes[k] == summary.fading_time_seconds / 60.0
    ok("9 (exceedance minutes equal fade time at 20 thresholds x 120 series, exact)")


def test_10_combination_enumeration():
    roster = [GatewayConfig(site_id=SITE_IDS[i], region_tag=REGIONS[i],
                            fade_margin_db=5.0, sst_db=5.0) for i in range(6)]
    subsets = enumerate_combinations(roster, 4, min_regions=3)
    assert len(subsets) == 12
    # every 4-subset of the 15 either misses one region pair or spans all 3
    assert len(list(combinations(roster, 4))) == 15
    ok("10 (6 gateways in 3 region pairs give 12 valid 4-subsets)")


def full_scale_pipeline():
    """One year of 1 Hz data for six sites: synthesis, stats, emulation."""
    year = 365 * 86400  # 31.536e6 samples
    grid = TimeGrid(start_epoch=1514764800, step=1, count=year)
    rng = np.random.default_rng(20180000)
    sites = []
    for i, region in enumerate(REGIONS):
        meta = SiteMeta(site_id=SITE_IDS[i], region_tag=region,
                        latitude=float(rng.uniform(35, 55)),
                        longitude=float(rng.uniform(-10, 25)),
                        elevation_angle=float(rng.uniform(25, 47)),
                        frequency_ghz=39.4)
        sites.append(SiteSynthSpec(
            meta=meta, rate_per_day=float(rng.uniform(12, 22)),
            duration_mu=4.0, duration_sigma=0.9,
            peak_mu=1.4, peak_sigma=0.6))
    corr = np.eye(6)
    for a, b in ((0, 1), (2, 3), (4, 5)):
        corr[a, b] = corr[b, a] = 0.25
    sset = synthesize(SynthSpec(grid=grid, sites=tuple(sites), correlation=corr),
                      seed=20180000)

    digest = hashlib.sha256()
    thresholds = np.linspace(1.0, 10.0, 10)
    for sid in SITE_IDS:
        curve = exceedance(sset.series(sid), thresholds)
        digest.update(curve.exceedance_minutes.tobytes())
        _, summary = fade_events(sset.series(sid), 5.0)
        digest.update(str((summary.fade_count, summary.fading_time_seconds)).encode())
    joint = joint_exceedance(sset, [5.0, 10.0])
    digest.update(joint.joint_minutes.tobytes())

    r = emulate(sset, network(seed=42))
    digest.update(str(r.availability_percent).encode())
    digest.update(str(r.network_switches).encode())
    digest.update(np.array([e.time_index for e in r.switch_events]).tobytes())
    digest.update(",".join(f"{e.from_gw}>{e.to_gw}" for e in r.switch_events).encode())
    digest.update(r.daily.switches.tobytes())
    digest.update(str(sorted(r.standby_margin_fraction.items())).encode())
    return digest.hexdigest(), r.network_switches


def test_11_determinism_and_performance():
    get_set.cache_clear()  # release the 20 cached sets before the big run
    t0 = time.perf_counter()
    digest1, switches1 = full_scale_pipeline()
    t1 = time.perf_counter() - t0
    t0 = time.perf_counter()
    digest2, _ = full_scale_pipeline()
    t2 = time.perf_counter() - t0
    assert digest1 == digest2
    assert switches1 > 0
    assert t1 < 60.0 and t2 < 60.0, f"runs took {t1:.1f} s / {t2:.1f} s"
    ok(f"11 (full-scale year run bit-reproducible; {max(t1, t2):.1f} s < 60 s, "
       f"{switches1} switches)")
