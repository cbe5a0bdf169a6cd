import logging
from dataclasses import replace

import numpy as np
import pytest

from sgdemu import (
    ConfigError,
    GatewayConfig,
    NetworkConfig,
    StatisticError,
    availability_count_oracle,
    availability_no_sgd,
    emulate,
    standby_margin_time,
)
from conftest import make_network, make_set
from _synthsets import SITE_IDS, six_site_set


def two_plus_one(w=0.0, policy="first-in-order", seed=None):
    return make_network(["a", "b", "c"], n_active=2, fm=5.0, w=w,
                        policy=policy, seed=seed)


def random_set(rng, n_sites=4, n=600, p_gap=0.0):
    vals = {}
    valid = {}
    sids = [chr(ord("a") + i) for i in range(n_sites)]
    for sid in sids:
        vals[sid] = rng.exponential(3.0, n)
        valid[sid] = rng.random(n) > p_gap if p_gap else np.ones(n, bool)
    return make_set(vals, valid=valid), sids


class TestHandTraces:
    def test_single_switch_no_outage(self):
        sset = make_set({"a": [0, 0, 6, 6, 0, 0, 0, 0, 0, 0],
                         "b": [0] * 10, "c": [0] * 10})
        r = emulate(sset, two_plus_one())
        assert r.network_switches == 1
        assert r.switch_events[0].time_index == 2
        assert (r.switch_events[0].from_gw, r.switch_events[0].to_gw) == ("a", "c")
        assert r.fade_outage_seconds == 0.0
        assert r.availability_percent == 100.0

    def test_no_eligible_standby_is_fade_outage(self):
        row = [0, 0, 6, 6, 6, 0, 0, 0, 0, 0]
        sset = make_set({"a": row, "b": row, "c": row})
        r = emulate(sset, two_plus_one())
        assert r.network_switches == 0
        assert r.fade_outage_seconds == 3.0
        assert r.availability_percent == 70.0
        assert r.network_fade_count == 1
        assert r.network_mean_fade_duration_seconds == 3.0

    def test_freeze_window_books_exactly_w(self):
        sset = make_set({"a": [0, 0, 6, 6, 0, 0, 0, 0, 0, 0],
                         "b": [0] * 10, "c": [0] * 10})
        r = emulate(sset, two_plus_one(w=2.0))
        assert r.network_switches == 1
        assert r.switching_outage_seconds == 2.0
        assert r.fade_outage_seconds == 0.0
        assert r.availability_percent == 80.0

    def test_fading_during_freeze_attributed_to_switching(self):
        # the second faded sample at t=3 falls inside the freeze window:
        # it must not also count as fade outage
        sset = make_set({"a": [0, 0, 6, 6, 0, 0, 0, 0, 0, 0],
                         "b": [0] * 10, "c": [0] * 10})
        r = emulate(sset, two_plus_one(w=2.0))
        assert r.fade_outage_seconds == 0.0
        assert r.switching_outage_seconds == r.network_switches * 2.0

    def test_simultaneous_triggers_extend_freeze(self):
        sset = make_set({
            "a": [6, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            "b": [6, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            "c": [0] * 10, "d": [0] * 10,
        })
        cfg = make_network(list("abcd"), n_active=2, fm=5.0, w=3.0)
        r = emulate(sset, cfg)
        assert r.network_switches == 2
        assert [e.time_index for e in r.switch_events] == [0, 0]
        assert r.switching_outage_seconds == 6.0  # 2 switches x 3 s

    def test_standby_must_be_below_its_own_sst(self):
        # standby c is itself faded when a triggers: no switch happens
        sset = make_set({"a": [0, 6, 0], "b": [0] * 3, "c": [0, 6, 0]})
        r = emulate(sset, two_plus_one())
        assert r.network_switches == 0
        assert r.fade_outage_seconds == 1.0

    def test_retrigger_after_freeze(self):
        # a stays faded past the freeze window; when the network thaws the
        # same gateway triggers again at the next decision sample
        sset = make_set({"a": [6, 6, 6, 6, 0, 0], "b": [0] * 6, "c": [0] * 6})
        cfg = make_network(["a", "b", "c"], n_active=2, fm=5.0, w=2.0)
        r = emulate(sset, cfg)
        # switch a->c at t=0 (freeze t=0,1); at t=2 a is standby, no
        # active exceeds, nothing more happens
        assert r.network_switches == 1
        assert r.availability_percent == pytest.approx(100.0 * 4 / 6)


class TestIdentities:
    @pytest.mark.parametrize("w", [0.0, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("policy,seed", [("first-in-order", None),
                                             ("round-robin", None),
                                             ("uniform-random", 99)])
    def test_eq1_and_half_sum(self, w, policy, seed):
        rng = np.random.default_rng(101)
        for trial in range(5):
            sset, sids = random_set(rng, n_sites=5, n=400, p_gap=0.05)
            cfg = make_network(sids, n_active=3, fm=4.0, w=w, policy=policy, seed=seed)
            r = emulate(sset, cfg)
            assert r.switching_outage_seconds == r.network_switches * r.w_eff_seconds
            assert sum(r.per_gw_switches.values()) == 2 * r.network_switches

    def test_w0_oracle_equivalence(self):
        rng = np.random.default_rng(103)
        for trial in range(10):
            sset, sids = random_set(rng, n_sites=5, n=500, p_gap=0.1)
            cfg = make_network(sids, n_active=3, fm=4.0, w=0.0)
            r = emulate(sset, cfg)
            assert r.availability_percent == availability_count_oracle(sset, cfg)

    def test_selection_policy_invariance_at_w0(self):
        rng = np.random.default_rng(107)
        sset, sids = random_set(rng, n_sites=6, n=2000)
        configs = [make_network(sids, n_active=4, fm=3.5, policy="first-in-order"),
                   make_network(sids, n_active=4, fm=3.5, policy="round-robin")]
        configs += [make_network(sids, n_active=4, fm=3.5, policy="uniform-random", seed=s)
                    for s in (1, 2, 3, 4, 5)]
        results = [emulate(sset, c) for c in configs]
        avail = {r.availability_percent for r in results}
        assert len(avail) == 1
        # ... while switch counts are allowed to differ between policies
        assert len({r.network_switches for r in results}) > 1

    def test_sst_monotone_at_w0(self):
        rng = np.random.default_rng(109)
        sset, sids = random_set(rng, n_sites=4, n=3000)
        prev = -1.0
        for sst in np.linspace(1.0, 10.0, 10):
            cfg = make_network(sids, n_active=3, fm=float(sst))
            r = emulate(sset, cfg)
            assert r.availability_percent >= prev
            prev = r.availability_percent

    def test_determinism(self):
        sset = six_site_set(404, count=50_000)
        cfg = make_network(list(SITE_IDS), n_active=4, fm=4.0, w=2.0,
                           policy="uniform-random", seed=77)
        a = emulate(sset, cfg)
        b = emulate(sset, cfg)
        assert a.switch_events == b.switch_events
        assert a.availability_percent == b.availability_percent
        assert a.standby_margin_fraction == b.standby_margin_fraction

    def test_daily_sums_match_totals(self):
        sset = six_site_set(405, count=300_000)  # ~3.5 days
        cfg = make_network(list(SITE_IDS), n_active=4, fm=4.0, w=2.0,
                           policy="uniform-random", seed=5)
        r = emulate(sset, cfg)
        d = r.daily
        assert int(d.valid_samples.sum()) == r.valid_samples
        assert int(d.switches.sum()) == r.network_switches
        assert float(d.fade_samples.sum()) * 1.0 == r.fade_outage_seconds
        assert (d.switching_outage_seconds.sum()
                == pytest.approx(r.switching_outage_seconds))
        # per-day availability consistent with per-day outage
        out = d.fade_outage_seconds + d.switching_outage_seconds
        assert np.allclose(d.availability_percent, 100.0 * (1 - out / d.valid_seconds))

    def test_day_boundary_attribution(self):
        # grid straddles a UTC midnight: 5 samples before, 5 after
        sset = make_set({"a": [0, 0, 6, 0, 0, 0, 0, 6, 0, 0], "b": [0] * 10,
                         "c": [6] * 10},
                        start=86400 - 5)
        cfg = two_plus_one()  # c standby but always faded -> a's fades are outage
        r = emulate(sset, cfg)
        assert list(r.daily.day_epochs) == [0, 86400]
        assert list(r.daily.valid_samples) == [5, 5]
        assert list(r.daily.fade_samples) == [1, 1]


class TestFreezeAccounting:
    def test_w_rounded_up_with_warning(self, caplog):
        sset = make_set({"a": [0, 6, 0, 0], "b": [0] * 4, "c": [0] * 4})
        cfg = two_plus_one(w=1.5)
        with caplog.at_level(logging.WARNING, logger="sgdemu.sgd_engine"):
            r = emulate(sset, cfg)
        assert r.w_samples == 2 and r.w_eff_seconds == 2.0
        assert r.switching_outage_seconds == 2.0
        assert any("rounded up" in rec.message for rec in caplog.records)

    def test_freeze_truncated_at_end_still_books_full_w(self):
        sset = make_set({"a": [0, 0, 0, 0, 6], "b": [0] * 5, "c": [0] * 5})
        r = emulate(sset, two_plus_one(w=5.0))
        assert r.network_switches == 1
        assert r.switching_outage_seconds == 5.0  # books w although the run ends
        assert r.availability_percent == 0.0

    def test_per_gateway_freeze_allows_concurrent_switches(self):
        sset = make_set({
            "a": [6, 0, 0, 0, 0, 0], "b": [0, 6, 0, 0, 0, 0],
            "c": [0] * 6, "d": [0] * 6,
        })
        base = make_network(list("abcd"), n_active=2, fm=5.0, w=3.0)
        network_mode = emulate(sset, base)
        gw_mode = emulate(sset, replace(base, freeze_scope="gateway"))
        # global freeze blocks b's trigger at t=1 (b is clear again by the
        # time the network thaws); per-gateway freeze lets b switch at t=1
        assert network_mode.network_switches == 1
        assert gw_mode.network_switches == 2
        assert gw_mode.switching_outage_seconds == 2 * 3.0

    def test_frozen_gateway_cannot_be_selected(self):
        # d switches in at t=0 and is frozen; when b triggers at t=1 only c
        # is eligible even though first-in-order would prefer d
        sset = make_set({
            "a": [6, 0, 0, 0, 0, 0], "b": [0, 6, 6, 6, 0, 0],
            "d": [0] * 6, "c": [0] * 6,
        })
        cfg = replace(make_network(["a", "b", "d", "c"], n_active=2, fm=5.0, w=3.0),
                      freeze_scope="gateway")
        r = emulate(sset, cfg)
        assert [(e.from_gw, e.to_gw) for e in r.switch_events] == [("a", "d"), ("b", "c")]


class TestStandbyMargin:
    def test_never_standby_reports_zero(self):
        sset = make_set({"a": [0] * 4, "b": [0] * 4, "c": [0] * 4})
        r = emulate(sset, two_plus_one())
        assert r.standby_margin_fraction["a"] == 0.0
        assert r.standby_margin_fraction["b"] == 0.0

    def test_standby_for_whole_quiet_run(self):
        sset = make_set({"a": [0] * 4, "b": [0] * 4, "c": [0] * 4})
        r = emulate(sset, two_plus_one())
        assert r.standby_margin_fraction["c"] == 1.0

    def test_replay_matches_inline_tally(self):
        rng = np.random.default_rng(31337)
        for trial in range(8):
            sset, sids = random_set(rng, n_sites=5, n=800, p_gap=0.05)
            cfg = make_network(sids, n_active=3, fm=4.0,
                               w=float(rng.integers(0, 3)),
                               policy="uniform-random", seed=trial)
            r = emulate(sset, cfg)
            replayed = standby_margin_time(r, sset, cfg)
            assert replayed == r.standby_margin_fraction

    def test_mismatched_config_rejected(self):
        sset = make_set({"a": [0] * 4, "b": [0] * 4, "c": [0] * 4})
        cfg = two_plus_one()
        r = emulate(sset, cfg)
        other = make_network(["b", "a", "c"], n_active=2, fm=5.0)
        with pytest.raises(ConfigError):
            standby_margin_time(r, sset, other)


class TestNoSgd:
    def test_all_zero_full_availability(self):
        sset = make_set({"a": [0] * 5, "b": [0] * 5})
        gws = [GatewayConfig(site_id=s, region_tag="r", fade_margin_db=5.0, sst_db=5.0)
               for s in "ab"]
        assert availability_no_sgd(sset, gws) == 100.0

    def test_union_of_outages(self):
        sset = make_set({"a": [6, 0], "b": [0, 6]})
        gws = [GatewayConfig(site_id=s, region_tag="r", fade_margin_db=5.0, sst_db=5.0)
               for s in "ab"]
        assert availability_no_sgd(sset, gws) == 0.0

    def test_counts_by_hand(self):
        sset = make_set({"a": [6, 0, 0, 0], "b": [0, 0, 6, 0]})
        gws = [GatewayConfig(site_id=s, region_tag="r", fade_margin_db=5.0, sst_db=5.0)
               for s in "ab"]
        assert availability_no_sgd(sset, gws) == 50.0


class TestValidation:
    def test_missing_series(self):
        sset = make_set({"a": [0] * 3, "b": [0] * 3})
        with pytest.raises(ConfigError, match="c"):
            emulate(sset, two_plus_one())

    def test_roster_size_mismatch(self):
        with pytest.raises(ConfigError):
            NetworkConfig(
                gateways=tuple(
                    GatewayConfig(site_id=s, region_tag="r", fade_margin_db=5, sst_db=5)
                    for s in "abc"),
                n_active=1, n_redundant=1)

    def test_sst_above_fm_rejected(self):
        with pytest.raises(ConfigError):
            GatewayConfig(site_id="a", region_tag="r", fade_margin_db=5.0, sst_db=6.0)
        with pytest.raises(ConfigError):
            GatewayConfig(site_id="a", region_tag="r", fade_margin_db=5.0, sst_db=0.0)

    def test_random_policy_needs_seed(self):
        gws = tuple(GatewayConfig(site_id=s, region_tag="r", fade_margin_db=5, sst_db=5)
                    for s in "abc")
        with pytest.raises(ConfigError):
            NetworkConfig(gateways=gws, n_active=2, n_redundant=1,
                          selection_policy="uniform-random")

    def test_initial_active_validation(self):
        gws = tuple(GatewayConfig(site_id=s, region_tag="r", fade_margin_db=5, sst_db=5)
                    for s in "abc")
        with pytest.raises(ConfigError):
            NetworkConfig(gateways=gws, n_active=2, n_redundant=1,
                          selection_policy="first-in-order", initial_active=("a",))
        with pytest.raises(ConfigError):
            NetworkConfig(gateways=gws, n_active=2, n_redundant=1,
                          selection_policy="first-in-order", initial_active=("a", "z"))
        cfg = NetworkConfig(gateways=gws, n_active=2, n_redundant=1,
                            selection_policy="first-in-order", initial_active=("b", "c"))
        assert cfg.initial_active_ids() == ("b", "c")

    def test_no_concurrent_valid_samples(self):
        sset = make_set({"a": [0.0], "b": [0.0], "c": [0.0]},
                        valid={"a": [True], "b": [False], "c": [True]})
        with pytest.raises(StatisticError):
            emulate(sset, two_plus_one())

    def test_explicit_initial_active_respected(self):
        sset = make_set({"a": [0] * 4, "b": [0] * 4, "c": [0] * 4})
        cfg = replace(two_plus_one(), initial_active=("b", "c"))
        r = emulate(sset, cfg)
        assert r.initial_active == ("b", "c")
        assert r.standby_margin_fraction["a"] == 1.0


class TestValidityGaps:
    def test_invalid_time_excluded_from_base(self):
        # sample 1 is invalid at site b: only 3 concurrently valid samples
        sset = make_set({"a": [0, 9, 6, 0], "b": [0, 0, 0, 0], "c": [6, 6, 6, 6]},
                        valid={"a": [True] * 4, "b": [True, False, True, True],
                               "c": [True] * 4})
        r = emulate(sset, two_plus_one())
        assert r.valid_samples == 3
        # a exceeds at t=2 (the faded t=1 sample is not concurrently valid);
        # c is never eligible, so t=2 is one fade-outage sample out of 3
        assert r.fade_outage_seconds == 1.0
        assert r.availability_percent == pytest.approx(100.0 * 2 / 3)

    def test_event_indices_on_original_grid(self):
        sset = make_set({"a": [0, 9, 6, 0], "b": [0] * 4, "c": [0] * 4},
                        valid={"a": [True] * 4, "b": [True, False, True, True],
                               "c": [True] * 4})
        r = emulate(sset, two_plus_one())
        assert [e.time_index for e in r.switch_events] == [2]

    def test_validity_gap_splits_network_fade(self):
        sset = make_set({"a": [6, 6, 6], "b": [6, 6, 6], "c": [6, 6, 6]},
                        valid={"a": [True, False, True], "b": [True] * 3,
                               "c": [True] * 3})
        r = emulate(sset, two_plus_one())
        assert r.network_fade_count == 2
        assert r.fade_outage_seconds == 2.0
