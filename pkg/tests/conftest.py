"""Shared fixtures and helpers: scripted random streams, small-config
hypothesis strategies, and the invariant battery used by both the unit tests
and the acceptance suite."""

import math

from hypothesis import strategies as st

from ccagg.lattice1d import Config1D, init_world_from_occupancy, run_full
from ccagg.rng import Stream


class ScriptedStream:
    """Stream stub emitting a fixed script of uniforms, then a fallback Stream."""

    def __init__(self, doubles, fallback_seed=0):
        self.doubles = list(doubles)
        self.fallback = Stream(fallback_seed)

    def next_double(self):
        if self.doubles:
            return self.doubles.pop(0)
        return self.fallback.next_double()

    def next_exp(self, rate):
        return -math.log(1.0 - self.next_double()) / rate


def two_cluster_world(alpha=0.0, L=32, rate_cap=None, guard_fraction=0.25,
                      clock_us=(0.5, 0.1), log_tagged=False):
    """A=[0..2] (id 1, tagged), B=[4..5] (id 0); A's clock fires first.

    Cluster ids follow creation order, which scans from the first empty site,
    so B gets id 0 and A id 1.  clock_us are the uniforms for (B, A).
    """
    occ = [False] * L
    for s in (0, 1, 2, 4, 5):
        occ[s] = True
    cfg = Config1D(alpha=alpha, p=0.5, L=L, t_max=1e6, obs_times=(),
                   seed=0, rate_cap=rate_cap, guard_fraction=guard_fraction,
                   log_tagged_steps=log_tagged)
    stream = ScriptedStream(list(clock_us))
    world = init_world_from_occupancy(cfg, occ, stream)
    ids = {world.clusters[c].left: c for c in world.clusters}
    return world, stream, ids[0], ids[4]  # (world, stream, A, B)


def config_strategy(max_L=256, alphas=(-1.5, -1.0, 0.0, 0.5, 1.0)):
    return st.builds(
        Config1D,
        alpha=st.sampled_from(alphas),
        p=st.floats(min_value=0.05, max_value=1.0),
        L=st.integers(min_value=2, max_value=max_L),
        t_max=st.floats(min_value=0.0, max_value=30.0),
        obs_times=st.just(()),
        seed=st.integers(min_value=0, max_value=(1 << 64) - 1),
        guard_fraction=st.floats(min_value=0.1, max_value=1.0),
    )


def run_checked(cfg: Config1D):
    """Run both engines with per-event invariant checking; assert equality.

    The python engine asserts the gap, conservation, rate, ring-link and
    one-live-event-per-cluster invariants after every event; the kernel
    re-checks gap/conservation/rates internally.  Returns the python series.
    """
    obs = tuple(sorted({0.0, cfg.t_max / 3, cfg.t_max}))
    cfg = Config1D(alpha=cfg.alpha, p=cfg.p, L=cfg.L, t_max=cfg.t_max,
                   obs_times=obs, seed=cfg.seed,
                   guard_fraction=cfg.guard_fraction, rate_cap=cfg.rate_cap,
                   log_tagged_steps=True)
    s_py, log_py, ex_py = run_full(cfg, engine="python", check_invariants=True)
    s_kn, log_kn, ex_kn = run_full(cfg, engine="kernel", check_invariants=True)
    assert s_py == s_kn, f"series diverge for {cfg}"
    assert log_py == log_kn, f"tagged logs diverge for {cfg}"
    assert ex_py == ex_kn, f"extras diverge for {cfg}"
    # tagged size never shrinks
    assert all(b >= a for a, b in zip(s_py.c0_size, s_py.c0_size[1:]))
    # cluster count never grows
    assert all(b <= a for a, b in zip(s_py.n_clusters, s_py.n_clusters[1:]))
    if log_py is not None and log_py.entries:
        ts = [e.t for e in log_py.entries]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        assert all(e.size_after >= e.size_before for e in log_py.entries)
    return s_py
