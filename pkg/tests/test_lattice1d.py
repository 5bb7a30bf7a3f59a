"""1D engine semantics: initialization, moves, merges, tagging, guard rules,
observation sampling, and the engine invariants on randomized small configs."""

import math

import pytest
from hypothesis import given, settings

from ccagg.errors import EmptyWorld, InvalidParams, NotAdjacent, QueueEmpty
from ccagg.lattice1d import (Config1D, World1D, init_world,
                             init_world_from_occupancy, merge_clusters, run,
                             run_full, step, tagged_cluster_size)
from ccagg.rng import Stream
from conftest import ScriptedStream, config_strategy, run_checked, \
    two_cluster_world

# frozen golden fixture: occupancy stream and cluster decomposition for
# L=64, p=1/2, seed=42 (enumerated once from the seeded stream)
GOLDEN_BITS = "0111101010110001111001001100000000011101011001110011111000011001"
GOLDEN_CLUSTERS = [(1, 4), (6, 1), (8, 1), (10, 2), (15, 4), (21, 1), (24, 2),
                   (35, 3), (39, 1), (41, 2), (45, 3), (50, 5), (59, 2),
                   (63, 1)]


def _cfg(**kw):
    base = dict(alpha=0.0, p=0.5, L=32, t_max=10.0, obs_times=(), seed=0)
    base.update(kw)
    return Config1D(**base)


# ------------------------------------------------------------- config


@pytest.mark.parametrize("kw", [
    dict(p=0.0), dict(p=1.5), dict(L=1), dict(t_max=-1.0),
    dict(t_max=math.inf), dict(guard_fraction=0.0), dict(guard_fraction=1.5),
    dict(rate_cap=0.0), dict(seed=-1), dict(seed=1 << 64),
    dict(obs_times=(3.0, 1.0)), dict(obs_times=(-1.0,)),
    dict(obs_times=(11.0,)),
])
def test_config_validation(kw):
    with pytest.raises(InvalidParams):
        _cfg(**kw)


def test_rate_of_with_and_without_cap():
    assert _cfg(alpha=1.0).rate_of(5) == pytest.approx(0.2, rel=1e-15)
    assert _cfg(alpha=-3.0).rate_of(20) == pytest.approx(8000.0, rel=1e-15)
    assert _cfg(alpha=-3.0, rate_cap=100.0).rate_of(20) == 100.0


# ------------------------------------------------------------- init


def test_init_wraparound_example():
    # occupancy 1,0,1,1,0,0,1,1 on L=8: clusters {6,7,0} and {2,3}
    occ = [True, False, True, True, False, False, True, True]
    w = init_world_from_occupancy(_cfg(L=8), occ, Stream(0))
    got = sorted((c.left, c.size) for c in w.clusters.values())
    assert got == [(2, 2), (6, 3)]
    tagged = w.clusters[w.tagged_id]
    assert (tagged.left, tagged.size) == (6, 3)  # contains site 0
    assert tagged_cluster_size(w) == 3
    assert w.total_particles == 5


def test_init_saturated():
    w = init_world_from_occupancy(_cfg(L=8, p=1.0), [True] * 8, Stream(0))
    assert w.saturated
    assert w.n_clusters == 1
    assert tagged_cluster_size(w) == 8
    assert not w.queue  # no events scheduled
    assert w.coalescence_time == 0.0


def test_init_saturated_via_p_one():
    series, _ = run(_cfg(L=16, p=1.0, obs_times=(0.0, 10.0)))
    assert series.saturated
    assert series.c0_size == [16, 16]
    assert series.n_clusters == [1, 1]


def test_init_empty_world():
    w = init_world_from_occupancy(_cfg(L=8), [False] * 8, Stream(0))
    assert w.n_clusters == 0
    with pytest.raises(EmptyWorld):
        tagged_cluster_size(w)
    with pytest.raises(QueueEmpty):
        step(w, Stream(0))


def test_init_golden_seeded_fixture():
    # independent enumeration of the seeded occupancy stream
    s = Stream(42)
    occ = [s.next_double() < 0.5 for _ in range(64)]
    assert "".join("1" if o else "0" for o in occ) == GOLDEN_BITS

    # independent run-finding on the frozen bits (linear scan + wrap fix)
    runs = []
    i = 0
    while i < 64:
        if occ[i]:
            j = i
            while j < 64 and occ[j]:
                j += 1
            runs.append((i, j - i))
            i = j
        else:
            i += 1
    if occ[0] and occ[63] and len(runs) > 1:
        first, last = runs[0], runs.pop()
        runs[0] = (last[0], last[1] + first[1])
    assert sorted(runs) == GOLDEN_CLUSTERS

    w = init_world_from_occupancy(_cfg(L=64), occ, Stream(1))
    assert sorted((c.left, c.size) for c in w.clusters.values()) == GOLDEN_CLUSTERS
    # sites 1 and 63 are both at distance 1 from the origin; the tie breaks
    # toward the positive side
    assert w.clusters[w.tagged_id].left == 1


def test_init_ring_order_and_gaps():
    w = init_world_from_occupancy(
        _cfg(L=16), [s in (0, 1, 5, 9, 10, 11, 14) for s in range(16)],
        Stream(0))
    assert w.n_clusters == 4
    for c in w.clusters.values():
        assert w.gap_after(c) >= 1
        assert w.clusters[c.next_id].prev_id == c.id
    w.assert_invariants()


def test_init_one_event_per_cluster():
    w = init_world_from_occupancy(
        _cfg(L=16), [s % 3 == 0 for s in range(16)], Stream(3))
    assert len(w.queue) == w.n_clusters
    assert {e.cluster_id for e in w.queue} == set(w.clusters)


# ------------------------------------------------------------- step / merge


def test_step_move_right_merges():
    world, stream, a, b = two_cluster_world()
    stream.doubles = [0.3, 0.9]  # direction < 0.5 -> right; then new clock
    report = step(world, stream)
    assert not report.stale and report.merged
    merged = world.clusters[report.survivor_id]
    assert (merged.left, merged.size) == (1, 5)
    assert world.n_clusters == 1
    assert world.tagged_id == merged.id
    assert world.coalescence_time == world.now


def test_step_move_left_no_merge():
    world, stream, a, b = two_cluster_world()
    stream.doubles = [0.7, 0.9]  # direction >= 0.5 -> left
    report = step(world, stream)
    assert not report.stale and not report.merged
    assert (world.clusters[a].left, world.clusters[a].size) == (31, 3)
    assert world.n_clusters == 2


def test_step_stale_event_is_noop():
    world, stream, a, b = two_cluster_world()
    world.push_event(0.0, a, gen=3)  # current gen is 0, so this is stale
    snapshot = {c: (cl.left, cl.size) for c, cl in world.clusters.items()}
    report = step(world, stream)
    assert report.stale
    assert world.now == 0.0
    assert {c: (cl.left, cl.size) for c, cl in world.clusters.items()} == snapshot


def test_step_queue_empty():
    w = World1D(_cfg())
    with pytest.raises(QueueEmpty):
        step(w, Stream(0))


def test_merge_arithmetic_and_rates():
    world, _, a, b = two_cluster_world(alpha=1.0)
    world.clusters[a].left = 1  # close the gap by hand
    merged = merge_clusters(world, a, b)
    assert merged.size == 5
    assert merged.rate == pytest.approx(1.0 / 5.0, rel=1e-12)
    assert merged.gen == 1
    assert merged.id not in (a, b)


def test_merge_rate_cap():
    occ = [True] * 10 + [False] + [True] * 10 + [False] * 11
    cfg = _cfg(L=32, alpha=-3.0)
    w = init_world_from_occupancy(cfg, occ, Stream(0))
    ids = {w.clusters[c].left: c for c in w.clusters}
    w.clusters[ids[0]].left = 1  # close the gap
    merged = merge_clusters(w, ids[0], ids[11])
    assert merged.size == 20
    assert merged.rate == pytest.approx(8000.0, rel=1e-12)

    cfg2 = _cfg(L=32, alpha=-3.0, rate_cap=100.0)
    w2 = init_world_from_occupancy(cfg2, occ, Stream(0))
    ids2 = {w2.clusters[c].left: c for c in w2.clusters}
    w2.clusters[ids2[0]].left = 1
    assert merge_clusters(w2, ids2[0], ids2[11]).rate == 100.0


def test_merge_not_adjacent():
    world, _, a, b = two_cluster_world()
    with pytest.raises(NotAdjacent):
        merge_clusters(world, a, b)  # gap is 1, not 0


def test_merge_tagged_size_jump_equals_partner():
    world, stream, a, b = two_cluster_world()
    before = tagged_cluster_size(world)
    partner = world.clusters[b].size
    stream.doubles = [0.3, 0.9]  # force the merging right-move
    step(world, stream)
    assert tagged_cluster_size(world) == before + partner


def test_merge_guard_contamination():
    # sizes 13 + 13 on L=100 with guard 0.25: merged size 26 > 25
    occ = [s < 13 or 14 <= s < 27 for s in range(100)]
    w = init_world_from_occupancy(_cfg(L=100, p=0.5), occ, Stream(0))
    ids = {w.clusters[c].left: c for c in w.clusters}
    w.clusters[ids[0]].left = 1
    merge_clusters(w, ids[0], ids[14])
    assert w.contaminated
    assert w.max_size == 26


# ------------------------------------------------------------- run


def test_run_t_max_zero():
    cfg = _cfg(L=64, t_max=0.0, obs_times=(0.0,), seed=9)
    series, _ = run(cfg)
    w = init_world(cfg, Stream(9))
    assert series.c0_size == [tagged_cluster_size(w)]
    assert series.n_clusters == [w.n_clusters]


def test_run_empty_series_marker():
    # seed chosen so that all four Bernoulli(0.01) draws miss
    cfg = _cfg(L=4, p=0.01, t_max=5.0, obs_times=(1.0, 5.0), seed=2)
    series, _ = run(cfg)
    assert series.empty
    assert series.c0_size == [0, 0]
    assert series.n_clusters == [0, 0]


def test_run_observation_times_bracket_events():
    cfg = _cfg(L=128, t_max=20.0, obs_times=(0.0, 5.0, 10.0, 20.0), seed=4)
    series, _ = run(cfg)
    assert len(series.times) == 4
    assert series.times == [0.0, 5.0, 10.0, 20.0]
    assert all(s >= 1 for s in series.c0_size)


def test_run_monotone_tagged_series():
    for seed in range(5):
        series, _ = run(_cfg(L=256, t_max=40.0,
                             obs_times=tuple(float(t) for t in range(0, 41, 5)),
                             seed=seed))
        if not series.empty:
            assert all(b >= a for a, b in
                       zip(series.c0_size, series.c0_size[1:]))


def test_run_determinism_bit_for_bit():
    cfg = _cfg(L=512, t_max=50.0, obs_times=(10.0, 50.0), seed=77)
    assert run(cfg) == run(cfg)
    assert run(cfg, engine="python") == run(cfg, engine="kernel")


def test_run_tagged_log_records_growth():
    cfg = _cfg(L=256, t_max=30.0, obs_times=(30.0,), seed=11,
               log_tagged_steps=True)
    series, log = run(cfg)
    assert log is not None and log.initial_size >= 1
    moves = [e for e in log.entries if e.kind == "move"]
    merges = [e for e in log.entries if e.kind == "merge"]
    assert moves, "tagged cluster never stepped"
    assert all(e.size_after > e.size_before for e in merges)
    # the log replays the c0 growth seen by the series
    final = log.entries[-1].size_after if log.entries else log.initial_size
    assert final == series.c0_size[-1]


def test_run_numerically_coalesced_blowup():
    # alpha = -8 with a size-100 cluster gives rate 1e16; clock gaps underflow
    occ = [s < 100 or s == 102 for s in range(128)]
    cfg = _cfg(L=128, alpha=-8.0, t_max=1e6, guard_fraction=1.0)
    w = init_world_from_occupancy(cfg, occ, Stream(5))
    s = Stream(6)
    for _ in range(200):
        if w.numerically_coalesced or w.n_clusters == 1:
            break
        step(w, s)
    assert w.numerically_coalesced or w.n_clusters == 1


def test_run_direction_balance():
    cfg = _cfg(L=8192, t_max=2500.0, obs_times=(), seed=123)
    _, _, extras = run_full(cfg)
    n = extras.n_moves_right + extras.n_moves_left
    assert n >= 100_000
    bias = abs(extras.n_moves_right - extras.n_moves_left) / n
    assert bias <= 4.0 / math.sqrt(n)


def test_run_stale_events_happen_and_stay_silent():
    cfg = _cfg(L=512, t_max=60.0, obs_times=(60.0,), seed=8)
    series, _, extras = run_full(cfg)
    assert extras.n_stale > 0  # merges orphan partner clocks
    assert sum(series.c0_size) >= 1


def test_run_full_coalescence_on_small_torus():
    cfg = _cfg(L=16, t_max=1e6, obs_times=(), seed=31, guard_fraction=1.0)
    series, _ = run(cfg)
    if not series.empty:
        assert series.coalescence_time is not None
        assert series.coalescence_time >= 0.0


# ------------------------------------------------------------- properties


@given(config_strategy())
@settings(max_examples=60, deadline=None)
def test_property_invariants_and_engine_equality(cfg):
    run_checked(cfg)


@given(config_strategy(max_L=64))
@settings(max_examples=30, deadline=None)
def test_property_conservation(cfg):
    series, _, extras = run_full(cfg, engine="python", check_invariants=True)
    if not series.empty and series.times:
        assert all(c <= extras.n_particles for c in series.c0_size)
        assert all(m <= extras.n_particles for m in series.max_size)
