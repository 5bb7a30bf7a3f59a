"""d>=2 engine: component initialization, blocked-move merging, translation,
and the seeded golden fixtures."""

import pytest
from scipy.stats import binomtest

from ccagg.errors import InvalidParams, NotBlocked
from ccagg.latticed import (ConfigD, attempt_move, candidate_block_edges,
                            init_world_d, init_world_d_from_occupancy, run_d)
from ccagg.rng import Stream
from conftest import ScriptedStream

# frozen golden fixture: 8x8, p=0.3, seed=7 -> components as sorted site tuples
GOLDEN_8X8_COMPONENTS = [
    (1,), (5,), (8,), (10,), (21,), (26,), (31, 38, 39), (33,),
    (36, 43, 44, 52, 53), (55,),
]
# frozen golden regression: 64x64, p=0.1, alpha=1, seed=42,
# cluster counts at t = 1, 10, 100, 1000
GOLDEN_64_TRACE = [307, 216, 62, 14]


def _cfg(**kw):
    base = dict(d=2, alpha=1.0, p=0.3, L=8, t_max=10.0, obs_times=(), seed=0)
    base.update(kw)
    return ConfigD(**base)


def _world_from_coords(coords, **kw):
    cfg = _cfg(**kw)
    occ = [False] * (cfg.L**cfg.d)
    w_probe = None
    from ccagg.latticed import WorldD

    w_probe = WorldD(cfg)
    for c in coords:
        occ[w_probe.site_of(c)] = True
    return init_world_d_from_occupancy(cfg, occ, Stream(0)), cfg


# ------------------------------------------------------------- config


@pytest.mark.parametrize("kw", [
    dict(d=1), dict(L=1), dict(p=0.0), dict(p=1.2), dict(t_max=-1.0),
    dict(rate_cap=-1.0), dict(obs_times=(5.0, 1.0)), dict(obs_times=(11.0,)),
])
def test_configd_validation(kw):
    with pytest.raises(InvalidParams):
        _cfg(**kw)


def test_configd_memory_budget():
    with pytest.raises(InvalidParams):
        _cfg(L=64, max_sites=1000)


# ------------------------------------------------------------- init


def test_init_two_components_with_edges():
    w, _ = _world_from_coords([(0, 0), (0, 1), (5, 5)])
    comps = sorted(tuple(sorted(c.sites)) for c in w.clusters.values())
    by_size = sorted((c.size, len(c.internal_edges))
                     for c in w.clusters.values())
    assert len(comps) == 2
    assert by_size == [(1, 0), (2, 1)]
    w.assert_consistent()


def test_init_saturated():
    cfg = _cfg(p=1.0, L=4)
    w = init_world_d(cfg, Stream(0))
    assert w.saturated
    assert w.n_clusters == 1
    assert next(iter(w.clusters.values())).size == 16
    assert not w.queue


def test_init_golden_components():
    cfg = _cfg(L=8, p=0.3, seed=7)
    w = init_world_d(cfg, Stream(7))
    comps = sorted(tuple(sorted(c.sites)) for c in w.clusters.values())
    assert comps == GOLDEN_8X8_COMPONENTS

    # reference flood fill over the independently enumerated occupancy
    s = Stream(7)
    occ = {i for i in range(64) if s.next_double() < 0.3}
    seen, ref = set(), []
    for start in sorted(occ):
        if start in seen:
            continue
        comp, frontier = {start}, [start]
        while frontier:
            u = frontier.pop()
            x, y = u % 8, u // 8
            for v in (((x + 1) % 8) + 8 * y, ((x - 1) % 8) + 8 * y,
                      x + 8 * ((y + 1) % 8), x + 8 * ((y - 1) % 8)):
                if v in occ and v not in comp:
                    comp.add(v)
                    frontier.append(v)
        seen |= comp
        ref.append(tuple(sorted(comp)))
    assert sorted(ref) == GOLDEN_8X8_COMPONENTS


def test_initial_edges_connect_components():
    cfg = _cfg(L=8, p=0.4, seed=3)
    w = init_world_d(cfg, Stream(3))
    for c in w.clusters.values():
        # every internal edge joins two sites of the same cluster
        for u, v in c.internal_edges:
            assert u in c.sites and v in c.sites
        # connectivity via the recorded edges
        if c.size > 1:
            adj = {s: set() for s in c.sites}
            for u, v in c.internal_edges:
                adj[u].add(v)
                adj[v].add(u)
            comp, frontier = {min(c.sites)}, [min(c.sites)]
            while frontier:
                u = frontier.pop()
                for v in adj[u]:
                    if v not in comp:
                        comp.add(v)
                        frontier.append(v)
            assert comp == c.sites


# ------------------------------------------------------------- blocked moves
#
# Adjacent occupied sites coalesce at initialization, so two clusters can only
# sit at lattice distance 1 after a translation brought them there; the
# constructions below move clusters into place with scripted directions
# (u < 1/4 -> +x, [1/4, 1/2) -> -x, [1/2, 3/4) -> +y, else -y).

PLUS_X, MINUS_X, PLUS_Y, MINUS_Y = 0.01, 0.26, 0.51, 0.76


def _adjacent_pair(w):
    """[(0,0)] and [(2,0)] with the left cluster moved to (1,0)."""
    mover = w.occupancy[w.site_of((0, 0))]
    attempt_move(w, mover, ScriptedStream([PLUS_X]))
    return mover, w.occupancy[w.site_of((2, 0))]


def test_candidate_edges_single_blocker():
    w, _ = _world_from_coords([(0, 0), (2, 0)])
    mover, blocker = _adjacent_pair(w)
    cands = candidate_block_edges(w, mover, (1, 0))
    assert cands == [(((1, 0), (2, 0)), blocker)]


def _column_with_two_blockers():
    """Mover column {(0,0),(0,1)}; distinct single-site blockers at (1,0)
    and (1,1), walked into place from (2,0) and (1,3)."""
    w, _ = _world_from_coords([(0, 0), (0, 1), (2, 0), (1, 3)])
    c = w.occupancy[w.site_of((2, 0))]
    attempt_move(w, c, ScriptedStream([MINUS_X]))  # (2,0) -> (1,0)
    d = w.occupancy[w.site_of((1, 3))]
    attempt_move(w, d, ScriptedStream([MINUS_Y]))  # (1,3) -> (1,2)
    attempt_move(w, d, ScriptedStream([MINUS_Y]))  # (1,2) -> (1,1)
    mover = w.occupancy[w.site_of((0, 0))]
    assert w.n_clusters == 3
    return w, mover, c, d


def test_candidate_edges_two_blockers():
    w, mover, c, d = _column_with_two_blockers()
    cands = candidate_block_edges(w, mover, (1, 0))
    assert cands == [(((0, 0), (1, 0)), c), (((0, 1), (1, 1)), d)]


def test_candidate_edges_multisite_mover():
    # mover {(0,0),(1,0)} moving +x against a blocker walked to (2,0)
    w, _ = _world_from_coords([(0, 0), (1, 0), (3, 0)])
    blocker = w.occupancy[w.site_of((3, 0))]
    attempt_move(w, blocker, ScriptedStream([MINUS_X]))  # (3,0) -> (2,0)
    mover = w.occupancy[w.site_of((0, 0))]
    assert w.clusters[mover].size == 2
    cands = candidate_block_edges(w, mover, (1, 0))
    assert cands == [(((1, 0), (2, 0)), blocker)]


def test_candidate_edges_not_blocked():
    w, _ = _world_from_coords([(0, 0), (4, 4)])
    mover = w.occupancy[w.site_of((0, 0))]
    with pytest.raises(NotBlocked):
        candidate_block_edges(w, mover, (1, 0))


def test_attempt_move_vacant_translates():
    w, _ = _world_from_coords([(2, 2)])
    mover = w.occupancy[w.site_of((2, 2))]
    report = attempt_move(w, mover, ScriptedStream([PLUS_X]))
    assert report.moved and report.merged_with is None
    assert w.clusters[mover].sites == {w.site_of((3, 2))}
    w.assert_consistent()


def test_attempt_move_blocked_merges_without_moving():
    w, _ = _world_from_coords([(0, 0), (2, 0)])
    mover, blocker = _adjacent_pair(w)  # mover now at (1,0)
    report = attempt_move(w, mover, ScriptedStream([PLUS_X, 0.5]))
    assert not report.moved and report.merged_with == blocker
    merged = w.clusters[report.survivor_id]
    # positions unchanged, one new open edge recorded
    assert merged.sites == {w.site_of((1, 0)), w.site_of((2, 0))}
    assert merged.internal_edges == {tuple(sorted(
        (w.site_of((1, 0)), w.site_of((2, 0)))))}
    w.assert_consistent()


def test_attempt_move_uniform_edge_choice():
    # frozen two-blocker state; the chosen contact edge must be uniform
    picks = []
    for trial in range(10_000):
        w, mover, c, d = _column_with_two_blockers()
        stream = ScriptedStream([PLUS_X], fallback_seed=trial)
        report = attempt_move(w, mover, stream)
        assert not report.moved
        picks.append(report.merged_with)
    k = sum(1 for x in picks if x == picks[0])
    assert len(set(picks)) == 2
    assert binomtest(k, len(picks), 0.5).pvalue > 0.001


def test_merge_commutative_in_effect():
    w1, _ = _world_from_coords([(0, 0), (2, 0)])
    m1, b1 = _adjacent_pair(w1)
    attempt_move(w1, m1, ScriptedStream([PLUS_X, 0.5]))  # left initiates
    w2, _ = _world_from_coords([(0, 0), (2, 0)])
    m2, b2 = _adjacent_pair(w2)
    attempt_move(w2, b2, ScriptedStream([MINUS_X, 0.5]))  # right initiates
    sites1 = next(iter(w1.clusters.values())).sites
    sites2 = next(iter(w2.clusters.values())).sites
    assert sites1 == sites2 == {w1.site_of((1, 0)), w1.site_of((2, 0))}


def test_translation_moves_every_site_by_e():
    w, _ = _world_from_coords([(1, 1), (2, 1), (2, 2)])
    mover = w.occupancy[w.site_of((1, 1))]
    before = {w.coords_of(s) for s in w.clusters[mover].sites}
    attempt_move(w, mover, ScriptedStream([0.30]))  # axis 0, sign -1
    after = {w.coords_of(s) for s in w.clusters[mover].sites}
    assert after == {((x - 1) % 8, y) for x, y in before}


def test_wrapping_translation():
    w, _ = _world_from_coords([(7, 3)])
    mover = w.occupancy[w.site_of((7, 3))]
    attempt_move(w, mover, ScriptedStream([0.01]))  # +x wraps to x=0
    assert w.clusters[mover].sites == {w.site_of((0, 3))}


# ------------------------------------------------------------- run


def test_run_t_max_zero_snapshot_is_initial():
    cfg = _cfg(L=8, p=0.3, seed=7, t_max=0.0, obs_times=(0.0,))
    series, snaps = run_d(cfg, snapshots=True)
    w = init_world_d(cfg, Stream(7))
    assert len(snaps) == 1
    assert {c for c, _ in snaps[0]} == {w.coords_of(s) for s in w.occupancy}
    assert series.n_clusters == [w.n_clusters]


def test_run_conserves_mass():
    cfg = _cfg(L=16, p=0.2, seed=5, t_max=50.0, obs_times=(0.0, 10.0, 50.0))
    series, _ = run_d(cfg)
    totals = [sum(sz) for sz in series.sizes]
    assert len(set(totals)) == 1


def test_run_cluster_count_nonincreasing():
    cfg = _cfg(L=16, p=0.3, seed=9, t_max=100.0,
               obs_times=(0.0, 1.0, 10.0, 100.0))
    series, _ = run_d(cfg)
    assert all(b <= a for a, b in zip(series.n_clusters, series.n_clusters[1:]))


def test_run_golden_64_trace():
    cfg = ConfigD(d=2, alpha=1.0, p=0.1, L=64, t_max=1000.0,
                  obs_times=(1.0, 10.0, 100.0, 1000.0), seed=42)
    series, _ = run_d(cfg)
    assert series.n_clusters == GOLDEN_64_TRACE


def test_run_determinism():
    cfg = _cfg(L=12, p=0.25, seed=15, t_max=30.0, obs_times=(10.0, 30.0))
    a = run_d(cfg, snapshots=True)
    b = run_d(cfg, snapshots=True)
    assert a == b
