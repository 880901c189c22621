"""Built-in experiment presets for the calibrated desk-scale scenarios.

All presets share one calibration: a warm single-function chain averages 50 ms
end to end, a five-function chain averages 430 ms, and each function computes
for about 5 ms.  Fitting the chain latency model to those endpoints puts the
function-to-function hop at 90 ms and the database access at 45 ms.
Stochastic presets draw every latency from a truncated normal whose standard
deviation is 20% of the mean.  Requests arrive once per second, which keeps
containers warm after the first request; presets exclude that first cold
request from their statistics by default.
"""

from __future__ import annotations

from .caching import BackendAccess
from .engine import ExperimentConfig, FixedInterval
from .latency import ChainCalibration, Constant, NormalTruncated
from .workflow import Component, ComponentKind, Edge, WorkflowGraph

__all__ = [
    "DEFAULT_CALIBRATION",
    "PER_FUNCTION_COMPUTE_MS",
    "PER_HOP_DELAY_MS",
    "DB_ACCESS_MS",
    "SERVERLESS_TO_VM_DB_RATIO",
    "CACHE_DB_ACCESS_MS",
    "EXTERNAL_CACHE_ACCESS_MS",
    "SPREAD_FRACTION",
    "PRESET_NAMES",
    "build_preset",
]

DEFAULT_CALIBRATION = ChainCalibration(
    length_a=1, mean_a_ms=50.0, length_b=5, mean_b_ms=430.0, per_function_compute_ms=5.0
)
PER_FUNCTION_COMPUTE_MS = DEFAULT_CALIBRATION.per_function_compute_ms
PER_HOP_DELAY_MS = DEFAULT_CALIBRATION.per_hop_delay_ms()
DB_ACCESS_MS = DEFAULT_CALIBRATION.implied_db_access_ms()

# Running the same database workload from an always-on VM client is about
# 14x faster than the serverless path, so the VM preset scales the database
# access delay down by this factor.
SERVERLESS_TO_VM_DB_RATIO = 14.0

# The cache comparison uses a slower database so the internal cache's saving
# at a 0.9 hit ratio lands at 45 ms.
CACHE_DB_ACCESS_MS = 50.0
EXTERNAL_CACHE_ACCESS_MS = 10.0
CACHE_HIT_RATIO_TARGET = 0.9

SPREAD_FRACTION = 0.2
ARRIVAL_INTERVAL_MS = 1000.0

PRESET_NAMES = (
    "chain-1",
    "chain-2",
    "chain-3",
    "chain-4",
    "chain-5",
    "simple-db-serverless",
    "simple-db-vm",
    "cache-compare",
)

_DEFAULT_REQUESTS = 1000
_CACHE_COMPARE_REQUESTS = 10_000


def _spread(mean_ms: float) -> NormalTruncated:
    return NormalTruncated(mean_ms, SPREAD_FRACTION * mean_ms)


def _chain_graph(length, compute, hop, db_edge) -> WorkflowGraph:
    components = [Component("gateway", ComponentKind.GATEWAY, Constant(0.0))]
    components += [
        Component(f"f{i}", ComponentKind.FUNCTION, compute) for i in range(1, length + 1)
    ]
    components.append(Component("db", ComponentKind.DATABASE, Constant(0.0)))
    edges = [Edge("gateway", "f1", Constant(0.0))]
    edges += [Edge(f"f{i}", f"f{i + 1}", hop) for i in range(1, length)]
    edges.append(Edge(f"f{length}", "db", db_edge))
    return WorkflowGraph(tuple(components), tuple(edges))


def _chain_config(length, seed, n_requests, exclude_cold) -> ExperimentConfig:
    db = _spread(DB_ACCESS_MS)
    graph = _chain_graph(
        length,
        compute=_spread(PER_FUNCTION_COMPUTE_MS),
        hop=_spread(PER_HOP_DELAY_MS),
        db_edge=db,
    )
    return ExperimentConfig(
        name=f"chain-{length}",
        graph=graph,
        workload=FixedInterval(ARRIVAL_INTERVAL_MS, n_requests),
        backend=BackendAccess(db),
        seed=seed,
        exclude_cold=exclude_cold,
    )


def _simple_db_config(name, db_mean_ms, seed, n_requests, exclude_cold) -> ExperimentConfig:
    # Function compute and all hops are zero, so the recorded latency is the
    # database access time alone and report means compare as access-time ratios.
    db = NormalTruncated(db_mean_ms, SPREAD_FRACTION * db_mean_ms)
    graph = _chain_graph(1, compute=Constant(0.0), hop=Constant(0.0), db_edge=db)
    return ExperimentConfig(
        name=name,
        graph=graph,
        workload=FixedInterval(ARRIVAL_INTERVAL_MS, n_requests),
        backend=BackendAccess(db),
        seed=seed,
        exclude_cold=exclude_cold,
    )


def _cache_compare_configs(seed, n_requests, exclude_cold) -> tuple[ExperimentConfig, ...]:
    db = _spread(CACHE_DB_ACCESS_MS)
    graph = _chain_graph(
        1, compute=_spread(PER_FUNCTION_COMPUTE_MS), hop=Constant(0.0), db_edge=db
    )
    shared = dict(
        graph=graph,
        workload=FixedInterval(ARRIVAL_INTERVAL_MS, n_requests),
        backend=BackendAccess(db),
        hit_ratio_target=CACHE_HIT_RATIO_TARGET,
        key_space=n_requests,
        seed=seed,
        exclude_cold=exclude_cold,
    )
    return (
        ExperimentConfig(name="cache-compare-none", cache="none", **shared),
        ExperimentConfig(
            name="cache-compare-external",
            cache="external",
            external_access_delay=_spread(EXTERNAL_CACHE_ACCESS_MS),
            **shared,
        ),
        ExperimentConfig(name="cache-compare-internal", cache="internal", **shared),
    )


def build_preset(
    name: str,
    seed: int = 1,
    n_requests: int | None = None,
    exclude_cold: bool | None = None,
) -> tuple[ExperimentConfig, ...]:
    """Build the named preset; returns one config per experiment it runs.

    Most presets are a single experiment; cache-compare returns three configs
    (no cache, external, internal) sharing the same seed and key stream.
    """
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset '{name}'; available: {', '.join(PRESET_NAMES)}")
    excl = True if exclude_cold is None else exclude_cold
    if name.startswith("chain-"):
        length = int(name.split("-", 1)[1])
        return (_chain_config(length, seed, n_requests or _DEFAULT_REQUESTS, excl),)
    if name == "simple-db-serverless":
        return (_simple_db_config(name, DB_ACCESS_MS, seed, n_requests or _DEFAULT_REQUESTS, excl),)
    if name == "simple-db-vm":
        return (
            _simple_db_config(
                name,
                DB_ACCESS_MS / SERVERLESS_TO_VM_DB_RATIO,
                seed,
                n_requests or _DEFAULT_REQUESTS,
                excl,
            ),
        )
    return _cache_compare_configs(seed, n_requests or _CACHE_COMPARE_REQUESTS, excl)
