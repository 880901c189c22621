"""faasim: deterministic discrete-event simulation of serverless workflows.

Models function chains behind a gateway, container cold starts and idle
suspension, and caching strategies (none, external, in-container), and
reports per-request latency records plus summary statistics.  Same config
and seed always reproduce byte-identical results.
"""

from .caching import (
    BackendAccess,
    CacheOutcome,
    ExternalCache,
    InternalCache,
    NoCache,
    ReadResult,
    SyncWrite,
    WriteBehind,
    WriteResult,
    synthesize_key_stream,
)
from .config import ConfigError, config_to_doc, load_config, parse_config
from .engine import (
    Event,
    EventKind,
    ExperimentConfig,
    ExperimentResult,
    FixedInterval,
    PoissonArrivals,
    RequestRecord,
    RequestType,
    SimStreams,
    Trace,
    generate_arrivals,
    run_experiment,
    simulate_request,
)
from .latency import (
    CalibrationError,
    ChainCalibration,
    Constant,
    Empirical,
    LatencyDistribution,
    LogNormal,
    NormalTruncated,
    RngStream,
    Uniform,
    chain_mean_ms,
    distribution_from_config,
    distribution_to_config,
    fit_chain,
)
from .lifecycle import (
    ContainerPolicy,
    ContainerSession,
    SessionNotWarmError,
    SessionState,
    TimeRegressionError,
)
from .metrics import (
    ComparisonReport,
    EmptyMetricsError,
    FiveNumberSummary,
    MetricsReport,
    compare,
    nearest_rank,
    summarize,
)
from .presets import PRESET_NAMES, build_preset
from .workflow import (
    Component,
    ComponentKind,
    CriticalPath,
    Edge,
    InvalidGraphError,
    WorkflowGraph,
    critical_path,
    validate_graph,
)

__version__ = "0.1.0"
