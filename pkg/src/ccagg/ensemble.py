"""Replica orchestration: deterministic seeding, optional process parallelism,
CSV persistence with a JSON summary sidecar.

Every replica draws from its own splitmix64 stream whose seed is a pure
function of (master_seed, replica_index), so results are byte-identical
whatever the parallelism level.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import lattice1d
from .errors import InvalidParams, SchemaMismatch
from .lattice1d import Config1D, ObservationSeries
from .rng import splitmix64

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

CSV_HEADER = "replica,seed,t,c0_size,n_clusters,max_size,contaminated,saturated"


def derive_replica_seed(master_seed: int, replica_index: int) -> int:
    """Stateless per-replica seed: the (i+1)'th output of the master stream.

    The splitmix64 finalizer is a bijection and the pre-mix states are
    distinct for distinct indices, so derived seeds never collide.
    """
    if not 0 <= master_seed < 1 << 64:
        raise InvalidParams("master_seed must be a 64-bit unsigned integer")
    if replica_index < 0:
        raise InvalidParams("replica_index must be nonnegative")
    state = (master_seed + replica_index * _GOLDEN) & _MASK64
    return splitmix64(state)[1]


@dataclass(frozen=True)
class EnsembleConfig:
    base: Config1D
    replicas: int
    master_seed: int
    parallelism: int = 1
    output_path: Optional[str] = None

    def __post_init__(self):
        if self.replicas < 1:
            raise InvalidParams(f"replicas must be >= 1, got {self.replicas}")
        if self.parallelism < 1:
            raise InvalidParams(f"parallelism must be >= 1, got {self.parallelism}")
        if not 0 <= self.master_seed < 1 << 64:
            raise InvalidParams("master_seed must be a 64-bit unsigned integer")


@dataclass
class EnsembleResult:
    series: list[ObservationSeries]
    seeds: list[int]
    config_digest: str
    errors: list[Optional[str]] = field(default_factory=list)

    @property
    def n_contaminated(self) -> int:
        return sum(s.contaminated for s in self.series)

    @property
    def n_saturated(self) -> int:
        return sum(s.saturated for s in self.series)

    @property
    def n_empty(self) -> int:
        return sum(s.empty for s in self.series)

    def counts(self) -> dict[str, int]:
        return {
            "replicas": len(self.series),
            "contaminated": self.n_contaminated,
            "saturated": self.n_saturated,
            "empty": self.n_empty,
            "errors": sum(e is not None for e in self.errors),
        }


def config_digest(config: EnsembleConfig) -> str:
    """Stable hash over everything that determines the output bytes.

    parallelism and output_path are execution details, not part of the
    result identity, and are excluded.
    """
    base = config.base
    payload = {
        "alpha": base.alpha,
        "p": base.p,
        "L": base.L,
        "t_max": base.t_max,
        "obs_times": list(base.obs_times),
        "seed": base.seed,
        "guard_fraction": base.guard_fraction,
        "rate_cap": base.rate_cap,
        "log_tagged_steps": base.log_tagged_steps,
        "replicas": config.replicas,
        "master_seed": config.master_seed,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _replica_config(base: Config1D, seed: int) -> Config1D:
    return Config1D(alpha=base.alpha, p=base.p, L=base.L, t_max=base.t_max,
                    obs_times=base.obs_times, seed=seed,
                    guard_fraction=base.guard_fraction,
                    rate_cap=base.rate_cap,
                    log_tagged_steps=base.log_tagged_steps)


def _run_one(cfg: Config1D) -> ObservationSeries:
    series, _ = lattice1d.run(cfg)
    return series


def run_ensemble(config: EnsembleConfig) -> EnsembleResult:
    """Execute all replicas (ordered by index) on derived seeds."""
    seeds = [derive_replica_seed(config.master_seed, i)
             for i in range(config.replicas)]
    cfgs = [_replica_config(config.base, s) for s in seeds]
    series: list[ObservationSeries] = []
    errors: list[Optional[str]] = []
    if config.parallelism == 1:
        for cfg in cfgs:
            try:
                series.append(_run_one(cfg))
                errors.append(None)
            except Exception as exc:  # record, never abort the ensemble
                series.append(ObservationSeries(
                    times=list(cfg.obs_times), c0_size=[], n_clusters=[],
                    max_size=[], empty=True))
                errors.append(f"{type(exc).__name__}: {exc}")
    else:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [pool.submit(_run_one, cfg) for cfg in cfgs]
            for cfg, fut in zip(cfgs, futures):
                try:
                    series.append(fut.result())
                    errors.append(None)
                except Exception as exc:
                    series.append(ObservationSeries(
                        times=list(cfg.obs_times), c0_size=[], n_clusters=[],
                        max_size=[], empty=True))
                    errors.append(f"{type(exc).__name__}: {exc}")
    return EnsembleResult(series=series, seeds=seeds,
                          config_digest=config_digest(config), errors=errors)


def write_csv(result: EnsembleResult, path: str,
              config: Optional[EnsembleConfig] = None) -> None:
    """Write the ensemble CSV plus a JSON summary sidecar (<stem>.summary.json)."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    lines = [CSV_HEADER]
    for r, (series, seed) in enumerate(zip(result.series, result.seeds)):
        cont = int(series.contaminated)
        sat = int(series.saturated)
        for j, t in enumerate(series.times):
            lines.append(
                f"{r},{seed},{t!r},{series.c0_size[j]},{series.n_clusters[j]},"
                f"{series.max_size[j]},{cont},{sat}"
            )
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

    sidecar = {
        "digest": result.config_digest,
        "counts": result.counts(),
        "seeds": result.seeds,
    }
    if config is not None:
        base = config.base
        sidecar["config"] = {
            "alpha": base.alpha, "p": base.p, "L": base.L,
            "t_max": base.t_max, "obs_times": list(base.obs_times),
            "guard_fraction": base.guard_fraction, "rate_cap": base.rate_cap,
            "replicas": config.replicas, "master_seed": config.master_seed,
        }
    with open(_sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def _sidecar_path(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + ".summary.json"


def read_csv(path: str) -> EnsembleResult:
    """Read an ensemble CSV back; lossless for all schema columns."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            missing = set(CSV_HEADER.split(",")) - set(header.split(","))
            raise SchemaMismatch(
                f"expected columns {CSV_HEADER!r}"
                + (f"; missing {sorted(missing)}" if missing else f"; got {header!r}")
            )
        rows = [line.rstrip("\n").split(",") for line in f if line.strip()]

    series: list[ObservationSeries] = []
    seeds: list[int] = []
    current: Optional[int] = None
    for row in rows:
        if len(row) != 8:
            raise SchemaMismatch(f"row has {len(row)} fields, expected 8")
        r = int(row[0])
        if r != current:
            series.append(ObservationSeries(times=[], c0_size=[],
                                            n_clusters=[], max_size=[]))
            seeds.append(int(row[1]))
            current = r
        s = series[-1]
        s.times.append(float(row[2]))
        s.c0_size.append(int(row[3]))
        s.n_clusters.append(int(row[4]))
        s.max_size.append(int(row[5]))
        s.contaminated = bool(int(row[6]))
        s.saturated = bool(int(row[7]))
    for s in series:
        s.empty = bool(s.n_clusters) and all(n == 0 for n in s.n_clusters)

    digest = ""
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar, "r", encoding="utf-8") as f:
            digest = json.load(f).get("digest", "")
    return EnsembleResult(series=series, seeds=seeds, config_digest=digest,
                          errors=[None] * len(series))
