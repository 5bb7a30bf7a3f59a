"""Jitted hot path for the 1D engine.

Mirrors ``lattice1d.run_python`` exactly: same splitmix64 draw sequence, same
(t, seq)-ordered heap, same guard and stopping rules, so both engines return
bit-identical results for a given config.  Equality over randomized small
configs is enforced in the test suite.

Flat-array state: cluster records live in parallel arrays with capacity 2k
(every merge allocates a fresh slot, so k initial clusters need at most 2k-1).
The event queue is a hand-rolled binary min-heap with lazy deletion; a popped
entry whose cluster is dead or whose generation is outdated is discarded.
"""
from __future__ import annotations

import numpy as np
from numba import njit, uint64

from .lattice1d import (Config1D, LogEntry, ObservationSeries, RunExtras,
                        TaggedClusterLog)

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0

# imeta slots
_STATUS, _CONTAM, _SATUR, _EMPTY, _NUMCOAL = 0, 1, 2, 3, 4
_NPART, _NEVENTS, _NSTALE, _NRIGHT, _NLEFT = 5, 6, 7, 8, 9
_TLCOUNT, _TAGGED, _NALLOC, _NLIVE, _TAGSIZE0, _COALSET = 10, 11, 12, 13, 14, 15

STATUS_OK = 0
STATUS_LOG_OVERFLOW = 1
STATUS_INVARIANT_VIOLATION = 2


@njit(cache=True)
def _next_double(st):
    st[0] = st[0] + uint64(_GOLDEN)
    z = st[0]
    z = (z ^ (z >> uint64(30))) * uint64(_MIX1)
    z = (z ^ (z >> uint64(27))) * uint64(_MIX2)
    z = z ^ (z >> uint64(31))
    return (z >> uint64(11)) * _INV_2_53


@njit(cache=True)
def _heap_push(ht, hseq, hcid, hgen, hn, t, seq, cid, gen):
    j = hn
    ht[j] = t
    hseq[j] = seq
    hcid[j] = cid
    hgen[j] = gen
    while j > 0:
        par = (j - 1) >> 1
        if ht[par] > ht[j] or (ht[par] == ht[j] and hseq[par] > hseq[j]):
            ht[par], ht[j] = ht[j], ht[par]
            hseq[par], hseq[j] = hseq[j], hseq[par]
            hcid[par], hcid[j] = hcid[j], hcid[par]
            hgen[par], hgen[j] = hgen[j], hgen[par]
            j = par
        else:
            break
    return hn + 1


@njit(cache=True)
def _heap_pop(ht, hseq, hcid, hgen, hn):
    t = ht[0]
    seq = hseq[0]
    cid = hcid[0]
    gen = hgen[0]
    hn -= 1
    ht[0] = ht[hn]
    hseq[0] = hseq[hn]
    hcid[0] = hcid[hn]
    hgen[0] = hgen[hn]
    j = 0
    while True:
        l = 2 * j + 1
        r = l + 1
        m = j
        if l < hn and (ht[l] < ht[m] or (ht[l] == ht[m] and hseq[l] < hseq[m])):
            m = l
        if r < hn and (ht[r] < ht[m] or (ht[r] == ht[m] and hseq[r] < hseq[m])):
            m = r
        if m == j:
            break
        ht[m], ht[j] = ht[j], ht[m]
        hseq[m], hseq[j] = hseq[j], hseq[m]
        hcid[m], hcid[j] = hcid[j], hcid[m]
        hgen[m], hgen[j] = hgen[j], hgen[m]
        j = m
    return t, seq, cid, gen, hn


@njit(cache=True)
def _rate_of(size, alpha, rate_cap):
    r = np.float64(size) ** (-alpha)
    if r > rate_cap:
        r = rate_cap
    return r


@njit(cache=True)
def _check_state(cl_left, cl_size, cl_rate, cl_prev, cl_next, cl_alive,
                 n_alloc, n_live, n_part, L, alpha, rate_cap):
    total = 0
    for i in range(n_alloc):
        if cl_alive[i] == 0:
            continue
        total += cl_size[i]
        if cl_size[i] < 1:
            return False
        expected = _rate_of(cl_size[i], alpha, rate_cap)
        if abs(cl_rate[i] - expected) > 1e-12 * expected:
            return False
        if n_live > 1:
            nxt = cl_next[i]
            if cl_alive[nxt] == 0 or cl_prev[nxt] != i:
                return False
            gap = (cl_left[nxt] - (cl_left[i] + cl_size[i])) % L
            if gap < 1:
                return False
    return total == n_part


@njit(cache=True)
def _run(L, alpha, p, t_max, obs_times, seed, guard_fraction, rate_cap,
         log_tagged, tl_cap, check_inv):
    imeta = np.zeros(16, np.int64)
    fmeta = np.zeros(2, np.float64)
    n_obs = obs_times.shape[0]
    oc0 = np.zeros(n_obs, np.int64)
    oncl = np.zeros(n_obs, np.int64)
    omax = np.zeros(n_obs, np.int64)
    oplo = np.zeros(n_obs, np.int64)
    ophi = np.zeros(n_obs, np.int64)
    tl_t = np.zeros(tl_cap, np.float64)
    tl_b = np.zeros(tl_cap, np.int64)
    tl_a = np.zeros(tl_cap, np.int64)
    tl_k = np.zeros(tl_cap, np.uint8)

    st = np.zeros(1, np.uint64)
    st[0] = uint64(seed)

    occ = np.zeros(L, np.uint8)
    n_occ = 0
    for i in range(L):
        if _next_double(st) < p:
            occ[i] = 1
            n_occ += 1
    imeta[_NPART] = n_occ

    if n_occ == 0:
        imeta[_EMPTY] = 1
        empty_spans = np.zeros(0, np.int64)
        empty_alive = np.zeros(0, np.uint8)
        for i in range(n_obs):
            ophi[i] = -1
        return (imeta, fmeta, oc0, oncl, omax, oplo, ophi, tl_t, tl_b, tl_a,
                tl_k, empty_spans, empty_spans, empty_alive)
    if n_occ == L:
        imeta[_SATUR] = 1
        imeta[_TAGSIZE0] = L
        imeta[_COALSET] = 1
        imeta[_NLIVE] = 1
        imeta[_NALLOC] = 1
        sat_plo = np.zeros(1, np.int64)
        sat_phi = np.full(1, L - 1, np.int64)
        sat_alive = np.ones(1, np.uint8)
        for i in range(n_obs):
            oc0[i] = L
            oncl[i] = 1
            omax[i] = L
            ophi[i] = L - 1
        return (imeta, fmeta, oc0, oncl, omax, oplo, ophi, tl_t, tl_b, tl_a,
                tl_k, sat_plo, sat_phi, sat_alive)

    # collect maximal runs, scanning from just past the first empty site so a
    # wraparound run is seen once
    e0 = 0
    for i in range(L):
        if occ[i] == 0:
            e0 = i
            break
    runs_left = np.zeros(L // 2 + 1, np.int64)
    runs_size = np.zeros(L // 2 + 1, np.int64)
    k = 0
    start = -1
    length = 0
    for i in range(e0 + 1, e0 + L + 1):
        s = i % L
        if occ[s] == 1:
            if start < 0:
                start = s
                length = 1
            else:
                length += 1
        elif start >= 0:
            runs_left[k] = start
            runs_size[k] = length
            k += 1
            start = -1

    # particle 0 = occupied site closest to 0 (ties toward +); indices grow
    # rightward around the ring
    anchor = -1
    for j in range(L // 2 + 1):
        if occ[j] == 1:
            anchor = j
            break
        if occ[(L - j) % L] == 1:
            anchor = L - j
            break
    pidx = np.full(L, -1, np.int64)
    idx = 0
    for i in range(anchor, anchor + L):
        s = i % L
        if occ[s] == 1:
            pidx[s] = idx
            idx += 1

    cap = 2 * k + 1
    cl_left = np.zeros(cap, np.int64)
    cl_size = np.zeros(cap, np.int64)
    cl_gen = np.zeros(cap, np.int64)
    cl_rate = np.zeros(cap, np.float64)
    cl_prev = np.zeros(cap, np.int64)
    cl_next = np.zeros(cap, np.int64)
    cl_plo = np.zeros(cap, np.int64)
    cl_phi = np.zeros(cap, np.int64)
    cl_alive = np.zeros(cap, np.uint8)

    tagged = -1
    max_size = 0
    for cid in range(k):
        left = runs_left[cid]
        size = runs_size[cid]
        cl_left[cid] = left
        cl_size[cid] = size
        cl_rate[cid] = _rate_of(size, alpha, rate_cap)
        cl_prev[cid] = (cid - 1) % k
        cl_next[cid] = (cid + 1) % k
        cl_plo[cid] = pidx[left]
        cl_phi[cid] = pidx[(left + size - 1) % L]
        cl_alive[cid] = 1
        if (anchor - left) % L < size:
            tagged = cid
        if size > max_size:
            max_size = size
    n_alloc = k
    n_live = k
    imeta[_TAGSIZE0] = cl_size[tagged]
    coal_set = 0
    coal_time = 0.0
    if k == 1:
        coal_set = 1
    guard_size = guard_fraction * L
    contaminated = 0
    if max_size > guard_size:
        contaminated = 1

    heap_cap = 2 * k + 4
    ht = np.zeros(heap_cap, np.float64)
    hseq = np.zeros(heap_cap, np.int64)
    hcid = np.zeros(heap_cap, np.int64)
    hgen = np.zeros(heap_cap, np.int64)
    hn = 0
    seq = 0
    for cid in range(k):
        u = _next_double(st)
        dt = -np.log(1.0 - u) / (2.0 * cl_rate[cid])
        hn = _heap_push(ht, hseq, hcid, hgen, hn, dt, seq, cid, 0)
        seq += 1

    now = 0.0
    numcoal = 0
    n_events = 0
    n_stale = 0
    n_right = 0
    n_left_moves = 0
    tl_count = 0
    status = STATUS_OK
    obs_i = 0

    while hn > 0 and n_live > 1 and contaminated == 0 and numcoal == 0:
        t_next = ht[0]
        if t_next > t_max:
            break
        while obs_i < n_obs and obs_times[obs_i] < t_next:
            oc0[obs_i] = cl_size[tagged]
            oncl[obs_i] = n_live
            omax[obs_i] = max_size
            oplo[obs_i] = cl_plo[tagged]
            ophi[obs_i] = cl_phi[tagged]
            obs_i += 1
        t, _sq, cid, gen, hn = _heap_pop(ht, hseq, hcid, hgen, hn)
        if cl_alive[cid] == 0 or cl_gen[cid] != gen:
            n_stale += 1
            continue

        now = t
        n_events += 1
        tagged_before = tagged == cid
        tagged_size_before = cl_size[tagged]
        tagged_was_neighbor = False

        merged = False
        partner = -1
        left_m = -1
        right_m = -1
        if _next_double(st) < 0.5:
            n_right += 1
            cl_left[cid] = (cl_left[cid] + 1) % L
            nb = cl_next[cid]
            if nb != cid:
                gap = (cl_left[nb] - (cl_left[cid] + cl_size[cid])) % L
                if gap == 0:
                    merged = True
                    left_m, right_m = cid, nb
                    partner = nb
        else:
            n_left_moves += 1
            cl_left[cid] = (cl_left[cid] - 1) % L
            pv = cl_prev[cid]
            if pv != cid:
                gap = (cl_left[cid] - (cl_left[pv] + cl_size[pv])) % L
                if gap == 0:
                    merged = True
                    left_m, right_m = pv, cid
                    partner = pv

        survivor = cid
        if merged:
            tagged_was_neighbor = tagged == partner
            new = n_alloc
            n_alloc += 1
            size = cl_size[left_m] + cl_size[right_m]
            cl_left[new] = cl_left[left_m]
            cl_size[new] = size
            g1 = cl_gen[left_m]
            g2 = cl_gen[right_m]
            cl_gen[new] = (g1 if g1 > g2 else g2) + 1
            cl_rate[new] = _rate_of(size, alpha, rate_cap)
            cl_plo[new] = cl_plo[left_m]
            cl_phi[new] = cl_phi[right_m]
            pa = cl_prev[left_m]
            nb2 = cl_next[right_m]
            if pa == right_m:  # two-cluster ring collapses to one
                cl_prev[new] = new
                cl_next[new] = new
            else:
                cl_prev[new] = pa
                cl_next[new] = nb2
                cl_next[pa] = new
                cl_prev[nb2] = new
            cl_alive[left_m] = 0
            cl_alive[right_m] = 0
            cl_alive[new] = 1
            n_live -= 1
            if tagged == left_m or tagged == right_m:
                tagged = new
            if size > max_size:
                max_size = size
                if size > guard_size:
                    contaminated = 1
            if n_live == 1 and coal_set == 0:
                coal_set = 1
                coal_time = now
            survivor = new

        if log_tagged and (tagged_before or tagged_was_neighbor):
            if tl_count >= tl_cap:
                status = STATUS_LOG_OVERFLOW
                break
            tl_t[tl_count] = now
            tl_b[tl_count] = tagged_size_before
            tl_a[tl_count] = cl_size[tagged]
            tl_k[tl_count] = 0 if tagged_before else 1
            tl_count += 1

        u2 = _next_double(st)
        dt = -np.log(1.0 - u2) / cl_rate[survivor]
        if dt < 1e-15 or now + dt == now:
            numcoal = 1
        hn = _heap_push(ht, hseq, hcid, hgen, hn, now + dt, seq,
                        survivor, cl_gen[survivor])
        seq += 1

        if check_inv:
            if not _check_state(cl_left, cl_size, cl_rate, cl_prev, cl_next,
                                cl_alive, n_alloc, n_live, n_occ, L, alpha,
                                rate_cap):
                status = STATUS_INVARIANT_VIOLATION
                break

    while obs_i < n_obs:
        oc0[obs_i] = cl_size[tagged]
        oncl[obs_i] = n_live
        omax[obs_i] = max_size
        oplo[obs_i] = cl_plo[tagged]
        ophi[obs_i] = cl_phi[tagged]
        obs_i += 1

    imeta[_STATUS] = status
    imeta[_CONTAM] = contaminated
    imeta[_NUMCOAL] = numcoal
    imeta[_NEVENTS] = n_events
    imeta[_NSTALE] = n_stale
    imeta[_NRIGHT] = n_right
    imeta[_NLEFT] = n_left_moves
    imeta[_TLCOUNT] = tl_count
    imeta[_TAGGED] = tagged
    imeta[_NALLOC] = n_alloc
    imeta[_NLIVE] = n_live
    imeta[_COALSET] = coal_set
    fmeta[0] = coal_time
    fmeta[1] = now
    return (imeta, fmeta, oc0, oncl, omax, oplo, ophi, tl_t, tl_b, tl_a, tl_k,
            cl_plo, cl_phi, cl_alive)


def run_kernel(
    config: Config1D, check_invariants: bool = False
) -> tuple[ObservationSeries, TaggedClusterLog | None, RunExtras]:
    """Run one replica on the jitted kernel; same contract as run_python."""
    obs = np.asarray(config.obs_times, dtype=np.float64)
    rate_cap = np.inf if config.rate_cap is None else float(config.rate_cap)
    tl_cap = 4096
    while True:
        out = _run(config.L, float(config.alpha), float(config.p),
                   float(config.t_max), obs, np.uint64(config.seed),
                   float(config.guard_fraction), rate_cap,
                   config.log_tagged_steps, tl_cap, check_invariants)
        imeta = out[0]
        if imeta[_STATUS] != STATUS_LOG_OVERFLOW:
            break
        tl_cap *= 4
    if imeta[_STATUS] == STATUS_INVARIANT_VIOLATION:
        raise AssertionError("kernel invariant violation")

    (imeta, fmeta, oc0, oncl, omax, oplo, ophi, tl_t, tl_b, tl_a, tl_k,
     _cl_plo, _cl_phi, _cl_alive) = out
    series = ObservationSeries(
        times=list(config.obs_times),
        c0_size=[int(v) for v in oc0],
        n_clusters=[int(v) for v in oncl],
        max_size=[int(v) for v in omax],
        contaminated=bool(imeta[_CONTAM]),
        saturated=bool(imeta[_SATUR]),
        empty=bool(imeta[_EMPTY]),
        numerically_coalesced=bool(imeta[_NUMCOAL]),
        coalescence_time=float(fmeta[0]) if imeta[_COALSET] else None,
    )
    log = None
    if config.log_tagged_steps:
        n = int(imeta[_TLCOUNT])
        log = TaggedClusterLog(initial_size=int(imeta[_TAGSIZE0]))
        log.entries = [
            LogEntry(t=float(tl_t[i]), size_before=int(tl_b[i]),
                     size_after=int(tl_a[i]),
                     kind="move" if tl_k[i] == 0 else "merge")
            for i in range(n)
        ]
    extras = RunExtras(
        n_events=int(imeta[_NEVENTS]),
        n_stale=int(imeta[_NSTALE]),
        n_moves_right=int(imeta[_NRIGHT]),
        n_moves_left=int(imeta[_NLEFT]),
        n_particles=int(imeta[_NPART]),
        tagged_spans=[(int(a), int(b)) for a, b in zip(oplo, ophi)],
        final_now=float(fmeta[1]),
    )
    return series, log, extras
