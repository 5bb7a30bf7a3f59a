"""Cluster aggregation on lattice tori: event-driven simulation plus the
statistical machinery that checks its scaling behaviour."""

from .ensemble import (EnsembleConfig, EnsembleResult, derive_replica_seed,
                       read_csv, run_ensemble, write_csv)
from .lattice1d import (Config1D, ObservationSeries, TaggedClusterLog, World1D,
                        init_world, merge_clusters, run, run_full, step,
                        tagged_cluster_size)
from .latticed import ConfigD, WorldD, attempt_move, candidate_block_edges, \
    init_world_d, run_d
from .rng import Stream
from .theory import (LimitLawParams, gamma_sequence, growth_exponent,
                     limit_cdf, limit_mean, limit_pdf, limit_ppf)

__all__ = [
    "Config1D", "ConfigD", "EnsembleConfig", "EnsembleResult",
    "LimitLawParams", "ObservationSeries", "Stream", "TaggedClusterLog",
    "World1D", "WorldD", "attempt_move", "candidate_block_edges",
    "derive_replica_seed", "gamma_sequence", "growth_exponent", "init_world",
    "init_world_d", "limit_cdf", "limit_mean", "limit_pdf", "limit_ppf",
    "merge_clusters", "read_csv", "run", "run_d", "run_ensemble", "run_full",
    "step", "tagged_cluster_size", "write_csv",
]
__version__ = "0.1.0"
