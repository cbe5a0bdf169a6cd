"""Pure-Python switching core, the fallback twin of the compiled kernel.

Implements exactly the same per-sample state machine as the Cython
extension and must produce bit-identical outputs. Stretches between
decision samples are skipped with vectorized scans, so it stays usable
on year-long inputs, just slower than the compiled core.

State machine, per concurrently-valid sample:
  1. frozen sample -> flagged frozen (switching outage), no decisions
  2. each active gateway above its SST switches with an eligible standby
     (standby at or below its own SST), chosen by the selection policy;
     triggers are processed in roster order, each consuming a standby
  3. with w == 0 the sample is re-evaluated after the swaps; with w > 0
     every switch freezes the network for w from this sample
  4. a non-frozen sample with an active gateway above its fade margin and
     no switch possible is fade outage
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_CHUNK = 1 << 16
_MASK64 = (1 << 64) - 1

POLICY_FIRST = 0
POLICY_RANDOM = 1
POLICY_ROUND_ROBIN = 2

FREEZE_NETWORK = 0
FREEZE_GATEWAY = 1


def _splitmix64(state: int):
    """One step of splitmix64; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class _Selector:
    """Standby selection shared by every policy; keeps the RNG/rotation state."""

    def __init__(self, policy: int, seed: int, n_gw: int):
        self.policy = policy
        self.state = int(seed) & _MASK64
        self.rr = 0
        self.n_gw = n_gw

    def pick(self, eligible):
        if self.policy == POLICY_FIRST:
            return eligible[0]
        if self.policy == POLICY_RANDOM:
            self.state, z = _splitmix64(self.state)
            return eligible[z % len(eligible)]
        # round-robin: first eligible gateway index scanning from the pointer
        for off in range(self.n_gw):
            g = (self.rr + off) % self.n_gw
            if g in eligible:
                self.rr = (g + 1) % self.n_gw
                return g
        raise AssertionError("eligible list empty")


def _decide(att, sst, fm, role, frozen_g, t, w_samples, freeze_scope,
            selector, ev_t, ev_from, ev_to):
    """Process one non-frozen decision sample. Returns number of switches."""
    n_gw = len(role)
    switches = 0
    while True:
        swapped = 0
        for g in range(n_gw):
            if not role[g] or att[g][t] <= sst[g]:
                continue
            if freeze_scope == FREEZE_GATEWAY and frozen_g[g] > t:
                continue
            eligible = [
                h for h in range(n_gw)
                if not role[h] and att[h][t] <= sst[h]
                and (freeze_scope == FREEZE_NETWORK or frozen_g[h] <= t)
            ]
            if not eligible:
                continue
            h = selector.pick(eligible)
            role[g] = 0
            role[h] = 1
            ev_t.append(t)
            ev_from.append(g)
            ev_to.append(h)
            switches += 1
            swapped += 1
            if w_samples > 0 and freeze_scope == FREEZE_GATEWAY:
                frozen_g[g] = t + w_samples
                frozen_g[h] = t + w_samples
        if w_samples > 0 or swapped == 0:
            return switches


def run_switching(att, sst, fm, n_active, w_samples, policy, seed,
                  initial_active, freeze_scope=FREEZE_NETWORK):
    """Run the switching state machine over compacted valid samples.

    att is a sequence of per-gateway contiguous float64 arrays of equal
    length, in roster order. Returns (switch_t, switch_from, switch_to,
    fade_flags, frozen_flags, margin_counts).
    """
    att = [np.ascontiguousarray(a, dtype=np.float64) for a in att]
    n_gw = len(att)
    n = len(att[0]) if n_gw else 0
    sst = np.asarray(sst, dtype=np.float64)
    fm = np.asarray(fm, dtype=np.float64)
    role = [int(x) for x in initial_active]

    fade = np.zeros(n, dtype=np.uint8)
    frozen = np.zeros(n, dtype=np.uint8)
    margin = np.zeros(n_gw, dtype=np.int64)
    ev_t: list[int] = []
    ev_from: list[int] = []
    ev_to: list[int] = []
    selector = _Selector(policy, seed, n_gw)
    frozen_g = [0] * n_gw

    if freeze_scope == FREEZE_GATEWAY:
        _run_per_gateway(att, sst, fm, role, frozen_g, n, w_samples,
                         selector, fade, frozen, margin, ev_t, ev_from, ev_to)
    else:
        _run_network(att, sst, fm, role, n, w_samples,
                     selector, fade, frozen, margin, ev_t, ev_from, ev_to)

    return (np.array(ev_t, dtype=np.int64),
            np.array(ev_from, dtype=np.int32),
            np.array(ev_to, dtype=np.int32),
            fade, frozen, margin)


def _tally_margin(att, sst, role, margin, lo, hi):
    if hi <= lo:
        return
    for g in range(len(role)):
        if not role[g]:
            margin[g] += int(np.count_nonzero(att[g][lo:hi] < sst[g]))


def _next_trigger(att, sst, actives, pos, n):
    """First index >= pos where any active gateway exceeds its SST, else n."""
    while pos < n:
        hi = min(pos + _CHUNK, n)
        trig = att[actives[0]][pos:hi] > sst[actives[0]]
        for a in actives[1:]:
            np.logical_or(trig, att[a][pos:hi] > sst[a], out=trig)
        k = int(np.argmax(trig))
        if trig[k]:
            return pos + k
        pos = hi
    return n


def _run_network(att, sst, fm, role, n, w_samples, selector,
                 fade, frozen, margin, ev_t, ev_from, ev_to):
    frozen_until = 0
    t = 0
    while t < n:
        if t < frozen_until:
            tf = min(frozen_until, n)
            _tally_margin(att, sst, role, margin, t, tf)
            frozen[t:tf] = 1
            t = tf
            continue
        actives = [g for g in range(len(role)) if role[g]]
        j = _next_trigger(att, sst, actives, t, n)
        _tally_margin(att, sst, role, margin, t, min(j + 1, n))
        if j >= n:
            break
        switches = _decide(att, sst, fm, role, None, j, w_samples,
                           FREEZE_NETWORK, selector, ev_t, ev_from, ev_to)
        if switches > 0 and w_samples > 0:
            frozen_until = j + switches * w_samples
            frozen[j] = 1
        elif any(role[g] and att[g][j] > fm[g] for g in range(len(role))):
            fade[j] = 1
        t = j + 1


def _run_per_gateway(att, sst, fm, role, frozen_g, n, w_samples, selector,
                     fade, frozen, margin, ev_t, ev_from, ev_to):
    # sensitivity variant: plain per-sample loop, no stretch skipping
    n_gw = len(role)
    for t in range(n):
        for g in range(n_gw):
            if not role[g] and att[g][t] < sst[g]:
                margin[g] += 1
        _decide(att, sst, fm, role, frozen_g, t, w_samples,
                FREEZE_GATEWAY, selector, ev_t, ev_from, ev_to)
        if any(frozen_g[h] > t for h in range(n_gw)):
            frozen[t] = 1
        elif any(role[g] and att[g][t] > fm[g] for g in range(n_gw)):
            fade[t] = 1
