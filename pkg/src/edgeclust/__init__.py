"""Clustering of linear-network edges from point events, with hot-spot extraction."""

__version__ = "0.1.0"

from .aggregation import Dataset, EdgeSummary, aggregate
from .errors import ConfigError, DomainError, SnapError, UsageError
from .geometry import (
    Edge,
    EventPattern,
    LinearNetwork,
    Point2,
    Region,
    bounding_region,
    snap_events,
)
from .gibbs import SamplerConfig, SamplerState, Trace, TraceRecord, init_state, run, sweep
from .model import (
    FixedValue,
    GammaPrior,
    Hyperparams,
    Partition,
    eppf_logprob,
    expected_num_groups,
    penalty_w,
    predictive_weights,
    shifted_poisson_logpmf,
)
from .posterior import (
    HotspotSelection,
    PartitionEstimate,
    modal_partition,
    num_groups_posterior,
    num_groups_posterior_restricted,
    rand_index,
    restrict,
)
from .synth import ClusterSpec, Scenario, make_grid_network, simulate_events

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "SnapError",
    "UsageError",
    "Point2",
    "Edge",
    "LinearNetwork",
    "Region",
    "EventPattern",
    "bounding_region",
    "snap_events",
    "EdgeSummary",
    "Dataset",
    "aggregate",
    "GammaPrior",
    "FixedValue",
    "Hyperparams",
    "Partition",
    "penalty_w",
    "shifted_poisson_logpmf",
    "eppf_logprob",
    "predictive_weights",
    "expected_num_groups",
    "SamplerConfig",
    "SamplerState",
    "Trace",
    "TraceRecord",
    "init_state",
    "sweep",
    "run",
    "PartitionEstimate",
    "HotspotSelection",
    "modal_partition",
    "restrict",
    "num_groups_posterior",
    "num_groups_posterior_restricted",
    "rand_index",
    "ClusterSpec",
    "Scenario",
    "make_grid_network",
    "simulate_events",
]
