"""Statistics that turn simulation output into verdicts.

Covers: KS goodness-of-fit against closed-form CDFs, log-log power-law
slope extraction, the time-change transform that maps tagged-cluster step
times onto a unit-rate Poisson process, a direct Monte-Carlo oracle for the
two-particle connection probability that bypasses the engine entirely, and
the finite-torus coalescence-time scan used as the blow-up signature.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy.special import kolmogi
from scipy.stats import kstwo

from . import lattice1d
from .errors import (DegenerateInput, EmptySample, InvalidParams,
                     NonMonotoneLog)
from .lattice1d import Config1D, TaggedClusterLog
from .rng import kernel_next_double


@dataclass(frozen=True)
class Ecdf:
    """Empirical CDF over a sorted sample."""

    samples: tuple[float, ...]
    n: int

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "Ecdf":
        if len(samples) == 0:
            raise EmptySample("cannot build an ECDF from zero samples")
        return cls(samples=tuple(sorted(float(x) for x in samples)),
                   n=len(samples))


def ks_distance(ecdf: Ecdf, cdf: Callable[[float], float]) -> float:
    """sup_x |ECDF(x) - cdf(x)|, evaluated at the sample points."""
    n = ecdf.n
    d = 0.0
    for i, x in enumerate(ecdf.samples, start=1):
        fx = cdf(x)
        d = max(d, i / n - fx, fx - (i - 1) / n)
    return d


def exp1_ks(samples: Sequence[float]) -> float:
    """KS distance of the samples against the unit-rate exponential CDF."""
    ecdf = Ecdf.from_samples(samples)
    if ecdf.samples[0] < 0.0:
        raise InvalidParams("exponential samples must be nonnegative")
    return ks_distance(ecdf, lambda x: 1.0 - math.exp(-x))


def ks_critical_value(n: int, significance: float) -> float:
    """Two-sided KS critical value: exact for n < 100, asymptotic above."""
    if n < 1:
        raise EmptySample("need at least one sample")
    if not 0.0 < significance < 1.0:
        raise InvalidParams("significance must lie in (0,1)")
    if n < 100:
        return float(kstwo.ppf(1.0 - significance, n))
    return float(kolmogi(significance)) / math.sqrt(n)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float  # natural-log intercept
    r2: float


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Least-squares line through (log t, log y)."""
    if len(points) < 3:
        raise DegenerateInput(f"need >= 3 points, got {len(points)}")
    if any(t <= 0.0 or y <= 0.0 for t, y in points):
        raise DegenerateInput("power-law fit needs strictly positive coordinates")
    lt = np.log([t for t, _ in points])
    ly = np.log([y for _, y in points])
    if np.all(lt == lt[0]):
        raise DegenerateInput("all abscissae equal")
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(slope=float(slope), intercept=float(intercept),
                       r2=min(max(r2, 0.0), 1.0))


def time_change_intervals(log: TaggedClusterLog, alpha: float) -> list[float]:
    """Transform tagged-cluster step times into unit-rate arrival gaps.

    For each interval between the tagged cluster's own steps, integrates
    size(s)**(-alpha) ds piecewise; passive merges change the size mid-interval
    and split the integrand.  The outputs are Exp(1) i.i.d. when the engine's
    clocks behave.
    """
    out: list[float] = []
    size = log.initial_size
    if size < 1:
        raise InvalidParams("tagged log has no initial cluster")
    prev_t = 0.0
    acc = 0.0
    for e in log.entries:
        if e.t <= prev_t:
            raise NonMonotoneLog(f"log times not strictly increasing at t={e.t}")
        acc += float(size) ** (-alpha) * (e.t - prev_t)
        prev_t = e.t
        if e.kind == "move":
            out.append(acc)
            acc = 0.0
        size = e.size_after
    return out


@dataclass(frozen=True)
class ProbabilityEstimate:
    p_hat: float
    stderr: float
    n: int


@njit(cache=True)
def _oracle_trials(m, p, t, replicas, seed):
    st = np.zeros(1, np.uint64)
    st[0] = np.uint64(seed)
    log_q = np.log(1.0 - p)
    hits = 0
    for _ in range(replicas):
        # initial separation: sum of m geometric(p) gaps minus m
        d = 0
        for _ in range(m):
            u = kernel_next_double(st)
            g = int(np.floor(np.log(1.0 - u) / log_q)) + 1
            d += g - 1
        if d <= 0:
            hits += 1
            continue
        # rate-2 symmetric walk until absorbed at <= 0 or time runs out
        tau = 0.0
        while True:
            u = kernel_next_double(st)
            tau += -np.log(1.0 - u) / 2.0
            if tau > t:
                break
            if kernel_next_double(st) < 0.5:
                d -= 1
            else:
                d += 1
            if d <= 0:
                hits += 1
                break
    return hits


def difference_walk_oracle(
    m: int, p: float, t: float, replicas: int, seed: int
) -> ProbabilityEstimate:
    """Engine-free estimate of P(particles 0 and m share a cluster by time t).

    The gap count between the two tagged particles performs a rate-2 symmetric
    walk started from a sum of m geometric(p) gaps minus m, absorbed at 0;
    absorption means connection.  Valid for homogeneous cluster speed.
    """
    if m < 1 or replicas < 1:
        raise InvalidParams("need m >= 1 and replicas >= 1")
    if not 0.0 < p < 1.0:
        raise InvalidParams(f"p must lie in (0,1), got {p}")
    if t < 0.0:
        raise InvalidParams("t must be nonnegative")
    hits = int(_oracle_trials(m, float(p), float(t), replicas, seed))
    p_hat = hits / replicas
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / replicas) / replicas)
    return ProbabilityEstimate(p_hat=p_hat, stderr=stderr, n=replicas)


def _span_contains(plo: int, phi: int, m: int, n_particles: int) -> bool:
    return (m - plo) % n_particles <= (phi - plo) % n_particles


def engine_connection_estimate(
    m: int, p: float, t: float, replicas: int, L: int, master_seed: int
) -> ProbabilityEstimate:
    """Full-engine estimate of the same connection probability (alpha = 0).

    Measures whether particles 1 and 1+m share a cluster at time t.  The
    probe pair starts at particle 1, not particle 0: the anchor particle is
    conditioned on being the closest occupied site to the origin, which skews
    its own rightward gap (when the anchor lands on the negative side, the
    whole arc through the origin is forcibly empty).  The gaps beyond
    particle 1 are unconditioned i.i.d. geometric, matching the oracle's
    convention.  Calls the kernel directly; at 10^4+ replicas of a small
    world the Python wrapper would dominate the runtime.
    """
    from . import _kernel1d
    from .ensemble import derive_replica_seed

    if m < 1 or replicas < 1:
        raise InvalidParams("need m >= 1 and replicas >= 1")
    if not 0.0 < p <= 1.0:
        raise InvalidParams(f"p must lie in (0,1], got {p}")
    obs = np.array([t], dtype=np.float64)
    lo, hi = 1, 1 + m
    hits = 0
    for i in range(replicas):
        seed = derive_replica_seed(master_seed, i)
        out = _kernel1d._run(L, 0.0, p, float(t), obs, np.uint64(seed),
                             0.25, np.inf, False, 1, False)
        imeta, cl_plo, cl_phi, cl_alive = out[0], out[11], out[12], out[13]
        n_part = int(imeta[_kernel1d._NPART])
        if imeta[_kernel1d._EMPTY] or n_part <= hi:
            continue
        if imeta[_kernel1d._SATUR]:
            hits += 1
            continue
        n_alloc = int(imeta[_kernel1d._NALLOC])
        for c in range(n_alloc):
            if cl_alive[c] and _span_contains(int(cl_plo[c]), int(cl_phi[c]),
                                              lo, n_part):
                if _span_contains(int(cl_plo[c]), int(cl_phi[c]), hi, n_part):
                    hits += 1
                break
    p_hat = hits / replicas
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / replicas) / replicas)
    return ProbabilityEstimate(p_hat=p_hat, stderr=stderr, n=replicas)


def coalescence_times(
    alpha: float, L: int, replicas: int, master_seed: int, p: float = 0.5
) -> list[float]:
    """Full-coalescence times (single cluster remaining) over replicas.

    Replicas that stop because clock increments underflow count as coalesced
    at their stop time.  Empty replicas are skipped.
    """
    from .ensemble import derive_replica_seed

    out: list[float] = []
    for i in range(replicas):
        cfg = Config1D(alpha=alpha, p=p, L=L, t_max=1e18, obs_times=(),
                       seed=derive_replica_seed(master_seed, i),
                       guard_fraction=1.0)
        series, _, extras = lattice1d.run_full(cfg)
        if series.empty:
            continue
        if series.coalescence_time is not None:
            out.append(series.coalescence_time)
        elif series.numerically_coalesced:
            out.append(extras.final_now)
    return out


def coalescence_scaling(
    alpha: float, sizes: Sequence[int], replicas: int, master_seed: int,
    p: float = 0.5,
) -> list[tuple[int, float]]:
    """Median full-coalescence time for each torus size."""
    from .ensemble import derive_replica_seed

    if any(L < 4 for L in sizes):
        raise InvalidParams("torus sizes must be >= 4")
    out = []
    for j, L in enumerate(sizes):
        times = coalescence_times(alpha, L, replicas,
                                  derive_replica_seed(master_seed, j), p=p)
        if not times:
            raise EmptySample(f"no coalesced replicas at L={L}")
        out.append((L, statistics.median(times)))
    return out
