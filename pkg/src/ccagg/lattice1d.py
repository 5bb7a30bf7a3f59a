"""Event-driven simulation of coalescing cluster aggregation on a 1D torus.

Occupied sites coalesce into interval clusters; each cluster carries an
independent exponential clock per hop direction at rate size**(-alpha), so
its total move intensity is 2*size**(-alpha) and each ring is a uniformly
left or right hop (the superposition of the two directional channels).  A
hop that closes the gap to the ring neighbour merges the two clusters
permanently.  The "tagged" cluster is the one containing the time-0 particle
closest to site 0 (ties resolved toward positive sites).

The per-direction reading of the clock rate is what makes the alpha=0
scaling limit come out with its published constants: the gap between two
tagged particles then jumps at total rate 4, i.e. variance 4t, which is the
normalization the limit CDF is derived under.  Reading the clock as the
total move rate instead would rescale time by 2 and shrink all sizes at
fixed t by sqrt(2).

This module is the readable reference engine: plain dicts, a lazy-deletion
heap, and optional invariant checking after every event.  ``run`` dispatches
to the jitted kernel in ``_kernel1d`` by default; both engines consume the
identical splitmix64 draw sequence and are pinned together by equality tests.

Shared draw order per replica stream:
  1. one uniform per site (occupancy),
  2. one Exp(2*rate) per initial cluster, in ring order from the first run
     after the lowest-index empty site,
  3. per processed (non-stale) event: one uniform for the direction
     (u < 0.5 means +1), then one Exp(2*rate) for the surviving cluster.
Stale events consume no draws.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import EmptyWorld, InvalidParams, NotAdjacent, QueueEmpty
from .rng import Stream

# A replica stops advancing once clock increments underflow this threshold
# (blow-up regime: rates explode and float time freezes).
TIME_EPS = 1e-15


@dataclass(frozen=True)
class Config1D:
    """Parameters of a single 1D replica."""

    alpha: float
    p: float
    L: int
    t_max: float
    obs_times: tuple[float, ...] = ()
    seed: int = 0
    guard_fraction: float = 0.25
    rate_cap: Optional[float] = None
    log_tagged_steps: bool = False

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise InvalidParams(f"p must lie in (0,1], got {self.p}")
        if self.L < 2:
            raise InvalidParams(f"L must be >= 2, got {self.L}")
        if self.t_max < 0.0 or not math.isfinite(self.t_max):
            raise InvalidParams(f"t_max must be finite and >= 0, got {self.t_max}")
        if not 0.0 < self.guard_fraction <= 1.0:
            raise InvalidParams(
                f"guard_fraction must lie in (0,1], got {self.guard_fraction}"
            )
        if self.rate_cap is not None and self.rate_cap <= 0.0:
            raise InvalidParams(f"rate_cap must be positive, got {self.rate_cap}")
        if not 0 <= self.seed < 1 << 64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")
        ts = tuple(float(t) for t in self.obs_times)
        if any(t < 0.0 for t in ts):
            raise InvalidParams("obs_times must be nonnegative")
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise InvalidParams("obs_times must be sorted ascending")
        if any(t > self.t_max for t in ts):
            raise InvalidParams("obs_times must not exceed t_max")
        object.__setattr__(self, "obs_times", ts)

    def rate_of(self, size: int) -> float:
        r = float(size) ** (-self.alpha)
        if self.rate_cap is not None:
            r = min(r, self.rate_cap)
        return r


@dataclass
class Cluster1D:
    """An occupied interval [left, left+size) mod L.

    rate is the per-direction clock rate min(size**-alpha, rate_cap); the
    cluster's total move intensity is 2*rate.
    """

    id: int
    gen: int
    left: int
    size: int
    rate: float
    prev_id: int  # ring neighbour to the left
    next_id: int  # ring neighbour to the right
    # contiguous particle-index range [plo, phi] mod n_particles
    plo: int
    phi: int


class Event(NamedTuple):
    """Heap entry; ordered by (t, seq).  seq makes the order total."""

    t: float
    seq: int
    cluster_id: int
    gen: int


class StepReport(NamedTuple):
    t: float
    cluster_id: int
    stale: bool
    merged: bool
    survivor_id: int


@dataclass
class LogEntry:
    t: float
    size_before: int
    size_after: int
    kind: str  # "move": tagged's own clock ring; "merge": passive absorption


@dataclass
class TaggedClusterLog:
    """Every event touching the tagged cluster, for step-time statistics."""

    initial_size: int
    entries: list[LogEntry] = field(default_factory=list)


@dataclass
class ObservationSeries:
    """Per-replica observables sampled at the configured observation times."""

    times: list[float]
    c0_size: list[int]
    n_clusters: list[int]
    max_size: list[int]
    contaminated: bool = False
    saturated: bool = False
    empty: bool = False
    numerically_coalesced: bool = False
    coalescence_time: Optional[float] = None


@dataclass
class RunExtras:
    """Engine-internal observables used by statistics and tests."""

    n_events: int
    n_stale: int
    n_moves_right: int
    n_moves_left: int
    n_particles: int
    tagged_spans: list[tuple[int, int]]  # (plo, phi) at each obs time
    final_now: float


class World1D:
    """Mutable simulation state: ring-ordered clusters plus the event queue."""

    def __init__(self, config: Config1D):
        self.config = config
        self.clusters: dict[int, Cluster1D] = {}
        self.queue: list[Event] = []
        self.now = 0.0
        self.tagged_id: Optional[int] = None
        self.total_particles = 0
        self.saturated = False
        self.contaminated = False
        self.numerically_coalesced = False
        self.coalescence_time: Optional[float] = None
        self.max_size = 0
        self.n_seq = 0
        self.n_alloc = 0
        self.n_events = 0
        self.n_stale = 0
        self.n_moves_right = 0
        self.n_moves_left = 0
        self.tagged_log: Optional[TaggedClusterLog] = None
        self.check_invariants = False
        # guard threshold precomputed once; contaminated when size exceeds it
        self.guard_size = config.guard_fraction * config.L

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def gap_after(self, c: Cluster1D) -> int:
        """Empty sites between c and its right ring neighbour (torus arithmetic)."""
        nxt = self.clusters[c.next_id]
        return (nxt.left - (c.left + c.size)) % self.config.L

    def push_event(self, t: float, cluster_id: int, gen: int) -> None:
        heapq.heappush(self.queue, Event(t, self.n_seq, cluster_id, gen))
        self.n_seq += 1

    def assert_invariants(self) -> None:
        L = self.config.L
        total = 0
        live_events = {e.cluster_id for e in self.queue
                       if e.cluster_id in self.clusters
                       and e.gen == self.clusters[e.cluster_id].gen}
        for c in self.clusters.values():
            total += c.size
            assert c.size >= 1, f"cluster {c.id} has size {c.size}"
            expected = self.config.rate_of(c.size)
            assert abs(c.rate - expected) <= 1e-12 * expected, (
                f"cluster {c.id} rate {c.rate} != {expected}")
            if len(self.clusters) > 1:
                gap = self.gap_after(c)
                assert gap >= 1, f"gap {gap} after cluster {c.id}"
                assert self.clusters[c.next_id].prev_id == c.id, "broken ring link"
        assert total == self.total_particles, (
            f"mass {total} != initial {self.total_particles}")
        assert total <= L
        if self.queue and not (self.saturated or self.numerically_coalesced):
            assert live_events == set(self.clusters), (
                "live clusters and live events disagree")


def init_world_from_occupancy(
    config: Config1D, occupancy: list[bool], stream: Stream
) -> World1D:
    """Build a world from a fixed occupancy vector and schedule initial clocks."""
    L = config.L
    if len(occupancy) != L:
        raise InvalidParams("occupancy length must equal L")
    world = World1D(config)
    if config.log_tagged_steps:
        world.tagged_log = TaggedClusterLog(initial_size=0)
    n_occ = sum(occupancy)
    world.total_particles = n_occ
    if n_occ == 0:
        return world  # zero clusters; callers observe the empty marker
    if n_occ == L:
        world.saturated = True
        c = Cluster1D(id=0, gen=0, left=0, size=L, rate=config.rate_of(L),
                      prev_id=0, next_id=0, plo=0, phi=L - 1)
        world.clusters[0] = c
        world.tagged_id = 0
        world.n_alloc = 1
        world.max_size = L
        world.coalescence_time = 0.0
        if world.tagged_log is not None:
            world.tagged_log.initial_size = L
        return world

    # runs of occupied sites, scanning from just after the first empty site so
    # that a wraparound run is collected once
    e0 = occupancy.index(False)
    runs: list[tuple[int, int]] = []  # (left, size)
    start = -1
    for i in range(e0 + 1, e0 + L + 1):
        s = i % L
        if occupancy[s]:
            if start < 0:
                start = s
                length = 1
            else:
                length += 1
        elif start >= 0:
            runs.append((start, length))
            start = -1

    # particle index 0 is the occupied site closest to 0, ties toward +;
    # indices increase to the right around the ring
    anchor = -1
    for k in range(L // 2 + 1):
        if occupancy[k]:
            anchor = k
            break
        if occupancy[(L - k) % L]:
            anchor = L - k
            break
    pidx: dict[int, int] = {}
    idx = 0
    for i in range(anchor, anchor + L):
        s = i % L
        if occupancy[s]:
            pidx[s] = idx
            idx += 1

    k = len(runs)
    for cid, (left, size) in enumerate(runs):
        world.clusters[cid] = Cluster1D(
            id=cid, gen=0, left=left, size=size, rate=config.rate_of(size),
            prev_id=(cid - 1) % k, next_id=(cid + 1) % k,
            plo=pidx[left], phi=pidx[(left + size - 1) % L],
        )
        if (anchor - left) % L < size:
            world.tagged_id = cid
        world.max_size = max(world.max_size, size)
    world.n_alloc = k
    if world.max_size > world.guard_size:
        world.contaminated = True
    if k == 1:
        world.coalescence_time = 0.0
    if world.tagged_log is not None:
        world.tagged_log.initial_size = world.clusters[world.tagged_id].size

    for cid in range(k):
        world.push_event(stream.next_exp(2.0 * world.clusters[cid].rate),
                         cid, 0)
    return world


def init_world(config: Config1D, stream: Stream) -> World1D:
    """Sample Bernoulli(p) occupancy and build the initial cluster ring."""
    occupancy = [stream.next_double() < config.p for _ in range(config.L)]
    return init_world_from_occupancy(config, occupancy, stream)


def merge_clusters(world: World1D, a: int, b: int) -> Cluster1D:
    """Replace touching clusters a and b by their union (fresh id, bumped gen).

    The caller is responsible for scheduling the merged cluster's clock; the
    pending events of a and b become stale by construction.
    """
    ca, cb = world.clusters[a], world.clusters[b]
    if ca.next_id == b and world.gap_after(ca) == 0:
        left_c, right_c = ca, cb
    elif cb.next_id == a and world.gap_after(cb) == 0:
        left_c, right_c = cb, ca
    else:
        raise NotAdjacent(f"clusters {a} and {b} are not touching")

    new_id = world.n_alloc
    world.n_alloc += 1
    size = left_c.size + right_c.size
    merged = Cluster1D(
        id=new_id, gen=max(ca.gen, cb.gen) + 1, left=left_c.left, size=size,
        rate=world.config.rate_of(size),
        prev_id=left_c.prev_id, next_id=right_c.next_id,
        plo=left_c.plo, phi=right_c.phi,
    )
    if left_c.prev_id == right_c.id:  # two-cluster ring collapses to one
        merged.prev_id = new_id
        merged.next_id = new_id
    del world.clusters[a]
    del world.clusters[b]
    world.clusters[new_id] = merged
    if merged.prev_id != new_id:
        world.clusters[merged.prev_id].next_id = new_id
        world.clusters[merged.next_id].prev_id = new_id
    if world.tagged_id in (a, b):
        world.tagged_id = new_id
    if size > world.max_size:
        world.max_size = size
        if size > world.guard_size:
            world.contaminated = True
    if len(world.clusters) == 1 and world.coalescence_time is None:
        world.coalescence_time = world.now
    return merged


def step(world: World1D, stream: Stream) -> StepReport:
    """Pop and process one event; stale events are consumed without effect."""
    if not world.queue:
        raise QueueEmpty("no pending events")
    ev = heapq.heappop(world.queue)
    c = world.clusters.get(ev.cluster_id)
    if c is None or c.gen != ev.gen:
        world.n_stale += 1
        return StepReport(ev.t, ev.cluster_id, stale=True, merged=False,
                          survivor_id=ev.cluster_id)

    world.now = ev.t
    world.n_events += 1
    L = world.config.L
    tagged_before = (world.tagged_id == c.id)
    tagged_size_before = (
        world.clusters[world.tagged_id].size if world.tagged_id is not None else 0
    )
    tagged_was_neighbor = False

    if stream.next_double() < 0.5:
        direction = 1
        world.n_moves_right += 1
    else:
        direction = -1
        world.n_moves_left += 1

    merged = False
    survivor = c
    if direction == 1:
        c.left = (c.left + 1) % L
        if c.next_id != c.id and world.gap_after(c) == 0:
            tagged_was_neighbor = (world.tagged_id == c.next_id)
            survivor = merge_clusters(world, c.id, c.next_id)
            merged = True
    else:
        c.left = (c.left - 1) % L
        if c.prev_id != c.id:
            prev = world.clusters[c.prev_id]
            if world.gap_after(prev) == 0:
                tagged_was_neighbor = (world.tagged_id == c.prev_id)
                survivor = merge_clusters(world, prev.id, c.id)
                merged = True

    if world.tagged_log is not None and (tagged_before or tagged_was_neighbor):
        size_after = world.clusters[world.tagged_id].size
        world.tagged_log.entries.append(LogEntry(
            t=world.now,
            size_before=tagged_size_before,
            size_after=size_after,
            kind="move" if tagged_before else "merge",
        ))

    dt = stream.next_exp(2.0 * survivor.rate)
    if dt < TIME_EPS or world.now + dt == world.now:
        world.numerically_coalesced = True
    world.push_event(world.now + dt, survivor.id, survivor.gen)

    if world.check_invariants:
        world.assert_invariants()
    return StepReport(ev.t, ev.cluster_id, stale=False, merged=merged,
                      survivor_id=survivor.id)


def tagged_cluster_size(world: World1D) -> int:
    """Current size of the cluster containing the time-0 particle nearest 0."""
    if world.tagged_id is None:
        raise EmptyWorld("world has no clusters")
    return world.clusters[world.tagged_id].size


def _record_obs(world: World1D, series: ObservationSeries,
                extras: RunExtras) -> None:
    if world.tagged_id is None:
        series.c0_size.append(0)
        series.n_clusters.append(0)
        series.max_size.append(0)
        extras.tagged_spans.append((0, -1))
    else:
        tagged = world.clusters[world.tagged_id]
        series.c0_size.append(tagged.size)
        series.n_clusters.append(world.n_clusters)
        series.max_size.append(world.max_size)
        extras.tagged_spans.append((tagged.plo, tagged.phi))


def run_python(
    config: Config1D,
    stream: Optional[Stream] = None,
    check_invariants: bool = False,
) -> tuple[ObservationSeries, Optional[TaggedClusterLog], RunExtras]:
    """Reference-engine run: returns (series, tagged log or None, extras)."""
    if stream is None:
        stream = Stream(config.seed)
    world = init_world(config, stream)
    world.check_invariants = check_invariants

    series = ObservationSeries(times=list(config.obs_times), c0_size=[],
                               n_clusters=[], max_size=[])
    extras = RunExtras(n_events=0, n_stale=0, n_moves_right=0, n_moves_left=0,
                       n_particles=world.total_particles, tagged_spans=[],
                       final_now=0.0)
    series.saturated = world.saturated
    series.empty = world.total_particles == 0

    obs_i = 0
    n_obs = len(config.obs_times)
    if not series.empty and not series.saturated:
        while (world.queue and world.n_clusters > 1
               and not world.contaminated and not world.numerically_coalesced):
            t_next = world.queue[0].t
            if t_next > config.t_max:
                break
            while obs_i < n_obs and config.obs_times[obs_i] < t_next:
                _record_obs(world, series, extras)
                obs_i += 1
            step(world, stream)
    while obs_i < n_obs:
        _record_obs(world, series, extras)
        obs_i += 1

    series.contaminated = world.contaminated
    series.numerically_coalesced = world.numerically_coalesced
    series.coalescence_time = world.coalescence_time
    extras.n_events = world.n_events
    extras.n_stale = world.n_stale
    extras.n_moves_right = world.n_moves_right
    extras.n_moves_left = world.n_moves_left
    extras.final_now = world.now
    return series, world.tagged_log, extras


def run_full(
    config: Config1D,
    engine: str = "kernel",
    check_invariants: bool = False,
) -> tuple[ObservationSeries, Optional[TaggedClusterLog], RunExtras]:
    """Run a replica on the chosen engine ("kernel" or "python")."""
    if engine == "python":
        return run_python(config, check_invariants=check_invariants)
    if engine == "kernel":
        from . import _kernel1d

        return _kernel1d.run_kernel(config, check_invariants=check_invariants)
    raise InvalidParams(f"unknown engine {engine!r}")


def run(
    config: Config1D,
    engine: str = "kernel",
) -> tuple[ObservationSeries, Optional[TaggedClusterLog]]:
    """Simulate one replica; see Config1D for the parameters."""
    series, log, _ = run_full(config, engine=engine)
    return series, log
