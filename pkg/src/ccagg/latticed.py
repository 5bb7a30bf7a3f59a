"""Aggregation dynamics on a d-dimensional torus (d >= 2), for qualitative
exploration and snapshot export.

A cluster attempting a move picks one of the 2d axis directions uniformly.
If every translated site is vacant (or belongs to the mover itself) the whole
cluster translates; otherwise it stays put, one of the lattice edges between
mover sites and blocking sites in the move direction is chosen uniformly, and
the mover merges with the blocker at the far end of that edge.

Sites are encoded as integers sum_i x_i * L**i; clusters keep their absolute
site sets plus the open edges recorded at initialization and at merges (the
edges are export/visualization payload only, dynamics depend on site sets).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import InvalidParams, NotBlocked, QueueEmpty
from .lattice1d import TIME_EPS
from .rng import Stream


@dataclass(frozen=True)
class ConfigD:
    d: int
    alpha: float
    p: float
    L: int  # side length per axis
    t_max: float
    obs_times: tuple[float, ...] = ()
    seed: int = 0
    rate_cap: Optional[float] = None
    max_sites: int = 1 << 22

    def __post_init__(self):
        if self.d < 2:
            raise InvalidParams(f"d must be >= 2, got {self.d}")
        if self.L < 2:
            raise InvalidParams(f"L must be >= 2, got {self.L}")
        if self.L**self.d > self.max_sites:
            raise InvalidParams(
                f"L**d = {self.L**self.d} exceeds the memory budget {self.max_sites}"
            )
        if not 0.0 < self.p <= 1.0:
            raise InvalidParams(f"p must lie in (0,1], got {self.p}")
        if self.t_max < 0.0 or not math.isfinite(self.t_max):
            raise InvalidParams(f"t_max must be finite and >= 0, got {self.t_max}")
        if self.rate_cap is not None and self.rate_cap <= 0.0:
            raise InvalidParams(f"rate_cap must be positive, got {self.rate_cap}")
        ts = tuple(float(t) for t in self.obs_times)
        if any(t < 0.0 for t in ts) or any(b < a for a, b in zip(ts, ts[1:])):
            raise InvalidParams("obs_times must be nonnegative and sorted")
        if any(t > self.t_max for t in ts):
            raise InvalidParams("obs_times must not exceed t_max")
        object.__setattr__(self, "obs_times", ts)

    def rate_of(self, size: int) -> float:
        r = float(size) ** (-self.alpha)
        if self.rate_cap is not None:
            r = min(r, self.rate_cap)
        return r


@dataclass
class ClusterD:
    id: int
    gen: int
    rate: float
    sites: set[int]
    internal_edges: set[tuple[int, int]]

    @property
    def size(self) -> int:
        return len(self.sites)


class EventD(NamedTuple):
    t: float
    seq: int
    cluster_id: int
    gen: int


class MoveReport(NamedTuple):
    t: float
    cluster_id: int
    direction: tuple[int, ...]
    moved: bool
    merged_with: Optional[int]
    survivor_id: int


@dataclass
class SeriesD:
    times: list[float]
    n_clusters: list[int]
    sizes: list[list[int]]  # sorted descending per observation time
    saturated: bool = False
    empty: bool = False
    numerically_coalesced: bool = False


Snapshot = list[tuple[tuple[int, ...], int]]  # (coords, cluster_id) per occupied site


class WorldD:
    def __init__(self, config: ConfigD):
        self.config = config
        self.occupancy: dict[int, int] = {}
        self.clusters: dict[int, ClusterD] = {}
        self.queue: list[EventD] = []
        self.now = 0.0
        self.saturated = False
        self.numerically_coalesced = False
        self.n_seq = 0
        self.n_alloc = 0
        self.strides = tuple(config.L**a for a in range(config.d))

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def coords_of(self, site: int) -> tuple[int, ...]:
        L = self.config.L
        return tuple((site // s) % L for s in self.strides)

    def site_of(self, coords: tuple[int, ...]) -> int:
        L = self.config.L
        return sum((c % L) * s for c, s in zip(coords, self.strides))

    def shift(self, site: int, axis: int, sign: int) -> int:
        L = self.config.L
        x = (site // self.strides[axis]) % L
        return site + (((x + sign) % L) - x) * self.strides[axis]

    def push_event(self, t: float, cluster_id: int, gen: int) -> None:
        heapq.heappush(self.queue, EventD(t, self.n_seq, cluster_id, gen))
        self.n_seq += 1

    def assert_consistent(self) -> None:
        seen: set[int] = set()
        for c in self.clusters.values():
            assert c.sites, f"cluster {c.id} has no sites"
            assert not (c.sites & seen), "clusters share a site"
            seen |= c.sites
            for s in c.sites:
                assert self.occupancy.get(s) == c.id, "occupancy out of sync"
        assert seen == set(self.occupancy)


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def init_world_d(config: ConfigD, stream: Stream) -> WorldD:
    """Bernoulli(p) occupancy; clusters are nearest-neighbour components and
    start with every lattice edge between co-cluster neighbours open."""
    n_sites = config.L**config.d
    occupied = [stream.next_double() < config.p for _ in range(n_sites)]
    return init_world_d_from_occupancy(config, occupied, stream)


def init_world_d_from_occupancy(
    config: ConfigD, occupied: list[bool], stream: Stream
) -> WorldD:
    """Build a world from a fixed occupancy vector (site-index order)."""
    world = WorldD(config)
    n_sites = config.L**config.d
    if len(occupied) != n_sites:
        raise InvalidParams("occupancy length must equal L**d")
    n_occ = sum(occupied)
    if n_occ == 0:
        return world
    world.saturated = n_occ == n_sites

    assigned: dict[int, int] = {}
    cid = 0
    for s0 in range(n_sites):
        if not occupied[s0] or s0 in assigned:
            continue
        comp = [s0]
        assigned[s0] = cid
        i = 0
        while i < len(comp):
            u = comp[i]
            i += 1
            for axis in range(config.d):
                for sign in (1, -1):
                    v = world.shift(u, axis, sign)
                    if occupied[v] and v not in assigned:
                        assigned[v] = cid
                        comp.append(v)
        sites = set(comp)
        edges = set()
        for u in sites:
            for axis in range(config.d):
                v = world.shift(u, axis, 1)
                if v in sites and v != u:
                    edges.add(_edge(u, v))
        world.clusters[cid] = ClusterD(id=cid, gen=0,
                                       rate=config.rate_of(len(sites)),
                                       sites=sites, internal_edges=edges)
        cid += 1
    world.occupancy = assigned
    world.n_alloc = cid

    if not world.saturated:
        for c in range(cid):
            world.push_event(stream.next_exp(world.clusters[c].rate), c, 0)
    return world


def candidate_block_edges(
    world: WorldD, mover: int, direction: tuple[int, ...]
) -> list[tuple[tuple[tuple[int, ...], tuple[int, ...]], int]]:
    """All lattice edges {u, u+e} from mover sites into blocking clusters,
    as ((coords_u, coords_v), blocker_id), ordered by site index."""
    axis, sign = _axis_sign(world.config.d, direction)
    c = world.clusters[mover]
    out = []
    for u in sorted(c.sites):
        v = world.shift(u, axis, sign)
        blocker = world.occupancy.get(v)
        if blocker is not None and blocker != mover:
            out.append(((world.coords_of(u), world.coords_of(v)), blocker))
    if not out:
        raise NotBlocked("translated footprint is fully vacant")
    return out


def _axis_sign(d: int, direction: tuple[int, ...]) -> tuple[int, int]:
    if len(direction) != d or sum(abs(x) for x in direction) != 1:
        raise InvalidParams(f"direction must be a unit axis vector, got {direction}")
    axis = next(i for i, x in enumerate(direction) if x != 0)
    return axis, direction[axis]


def _merge_d(world: WorldD, a: int, b: int,
             new_edge: Optional[tuple[int, int]]) -> ClusterD:
    ca, cb = world.clusters[a], world.clusters[b]
    new_id = world.n_alloc
    world.n_alloc += 1
    sites = ca.sites | cb.sites
    edges = ca.internal_edges | cb.internal_edges
    if new_edge is not None:
        edges.add(new_edge)
    merged = ClusterD(id=new_id, gen=max(ca.gen, cb.gen) + 1,
                      rate=world.config.rate_of(len(sites)),
                      sites=sites, internal_edges=edges)
    del world.clusters[a]
    del world.clusters[b]
    world.clusters[new_id] = merged
    for s in sites:
        world.occupancy[s] = new_id
    return merged


def attempt_move(world: WorldD, mover: int, stream: Stream) -> MoveReport:
    """One move attempt: translate if the destination footprint is free,
    otherwise merge with the blocker across a uniformly chosen contact edge."""
    c = world.clusters[mover]
    d = world.config.d
    u = stream.next_double()
    k = min(int(u * 2 * d), 2 * d - 1)
    axis, sign = k // 2, (1 if k % 2 == 0 else -1)
    direction = tuple(sign if i == axis else 0 for i in range(d))

    blocked = False
    for s in c.sites:
        v = world.shift(s, axis, sign)
        owner = world.occupancy.get(v)
        if owner is not None and owner != mover:
            blocked = True
            break

    if not blocked:
        new_sites = {world.shift(s, axis, sign) for s in c.sites}
        new_edges = {_edge(world.shift(p, axis, sign), world.shift(q, axis, sign))
                     for p, q in c.internal_edges}
        for s in c.sites:
            del world.occupancy[s]
        for s in new_sites:
            world.occupancy[s] = mover
        c.sites = new_sites
        c.internal_edges = new_edges
        return MoveReport(world.now, mover, direction, moved=True,
                          merged_with=None, survivor_id=mover)

    cands = []
    for s in sorted(c.sites):
        v = world.shift(s, axis, sign)
        owner = world.occupancy.get(v)
        if owner is not None and owner != mover:
            cands.append((s, v, owner))
    pick = min(int(stream.next_double() * len(cands)), len(cands) - 1)
    s, v, blocker = cands[pick]
    merged = _merge_d(world, mover, blocker, _edge(s, v))
    return MoveReport(world.now, mover, direction, moved=False,
                      merged_with=blocker, survivor_id=merged.id)


def step_d(world: WorldD, stream: Stream) -> Optional[MoveReport]:
    """Pop one event; returns None when the popped event was stale."""
    if not world.queue:
        raise QueueEmpty("no pending events")
    ev = heapq.heappop(world.queue)
    c = world.clusters.get(ev.cluster_id)
    if c is None or c.gen != ev.gen:
        return None
    world.now = ev.t
    report = attempt_move(world, ev.cluster_id, stream)
    survivor = world.clusters[report.survivor_id]
    dt = stream.next_exp(survivor.rate)
    if dt < TIME_EPS or world.now + dt == world.now:
        world.numerically_coalesced = True
    world.push_event(world.now + dt, survivor.id, survivor.gen)
    return report


def _snapshot(world: WorldD) -> Snapshot:
    return [(world.coords_of(s), cid)
            for s, cid in sorted(world.occupancy.items())]


def run_d(
    config: ConfigD, stream: Optional[Stream] = None, snapshots: bool = False
) -> tuple[SeriesD, list[Snapshot]]:
    """Event loop over the torus; observables sampled like the 1D engine."""
    if stream is None:
        stream = Stream(config.seed)
    world = init_world_d(config, stream)
    series = SeriesD(times=list(config.obs_times), n_clusters=[], sizes=[],
                     saturated=world.saturated,
                     empty=not world.clusters)
    snaps: list[Snapshot] = []

    def record():
        series.n_clusters.append(world.n_clusters)
        series.sizes.append(sorted((c.size for c in world.clusters.values()),
                                   reverse=True))
        if snapshots:
            snaps.append(_snapshot(world))

    obs_i = 0
    n_obs = len(config.obs_times)
    while (world.queue and world.n_clusters > 1
           and not world.numerically_coalesced):
        t_next = world.queue[0].t
        if t_next > config.t_max:
            break
        while obs_i < n_obs and config.obs_times[obs_i] < t_next:
            record()
            obs_i += 1
        step_d(world, stream)
    while obs_i < n_obs:
        record()
        obs_i += 1

    series.numerically_coalesced = world.numerically_coalesced
    return series, snaps
