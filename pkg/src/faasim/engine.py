"""Discrete-event simulation core: workloads, the event loop, request latency.

One experiment is one single-threaded virtual-time loop.  Arrival events drive
requests along the workflow's critical path; deferred database writes complete
as separate events off the response path.  Every random draw comes from a
purpose-specific stream derived from the master seed, so reconfiguring one
distribution never perturbs the draws of any other purpose.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Mapping

from .caching import (
    BackendAccess,
    CacheOutcome,
    CacheStrategy,
    ExternalCache,
    InternalCache,
    NoCache,
    SyncWrite,
    WriteBehind,
    WritePolicy,
    synthesize_key_stream,
)
from .latency import LatencyDistribution, RngStream
from .lifecycle import ContainerPolicy, ContainerSession
from .metrics import MetricsReport, summarize
from .workflow import ComponentKind, CriticalPath, WorkflowGraph, critical_path

__all__ = [
    "STREAM_ARRIVALS",
    "STREAM_COMPUTE",
    "STREAM_HOPS",
    "STREAM_DB",
    "STREAM_CACHE",
    "STREAM_KEYS",
    "STREAM_COLD_START",
    "STREAM_WRITE",
    "SimStreams",
    "FixedInterval",
    "PoissonArrivals",
    "Trace",
    "Workload",
    "generate_arrivals",
    "RequestType",
    "RequestRecord",
    "EventKind",
    "Event",
    "ExperimentConfig",
    "ExperimentResult",
    "simulate_request",
    "run_experiment",
]

# Stream ids are part of the reproducibility contract: fixed per purpose so a
# seed always means the same draws, whatever the configuration toggles.
STREAM_ARRIVALS = 0
STREAM_COMPUTE = 1
STREAM_HOPS = 2
STREAM_DB = 3
STREAM_CACHE = 4
STREAM_KEYS = 5
STREAM_COLD_START = 6
STREAM_WRITE = 7


@dataclass(frozen=True)
class SimStreams:
    """One independent stream per sampling purpose."""

    arrivals: RngStream
    compute: RngStream
    hops: RngStream
    db: RngStream
    cache: RngStream
    keys: RngStream
    cold_start: RngStream
    write: RngStream

    @classmethod
    def from_seed(cls, seed: int) -> "SimStreams":
        return cls(
            arrivals=RngStream(seed, STREAM_ARRIVALS),
            compute=RngStream(seed, STREAM_COMPUTE),
            hops=RngStream(seed, STREAM_HOPS),
            db=RngStream(seed, STREAM_DB),
            cache=RngStream(seed, STREAM_CACHE),
            keys=RngStream(seed, STREAM_KEYS),
            cold_start=RngStream(seed, STREAM_COLD_START),
            write=RngStream(seed, STREAM_WRITE),
        )


def _check_positive(name: str, value) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite number > 0")


@dataclass(frozen=True)
class FixedInterval:
    """Arrivals at k * interval_ms for k = 0 .. n_requests - 1."""

    interval_ms: float
    n_requests: int

    def __post_init__(self):
        _check_positive("interval_ms", self.interval_ms)
        if not isinstance(self.n_requests, int) or self.n_requests < 1:
            raise ValueError("n_requests must be an integer >= 1")


@dataclass(frozen=True)
class PoissonArrivals:
    """Exponential inter-arrival gaps at `rate_per_s` requests per second."""

    rate_per_s: float
    n_requests: int

    def __post_init__(self):
        _check_positive("rate_per_s", self.rate_per_s)
        if not isinstance(self.n_requests, int) or self.n_requests < 1:
            raise ValueError("n_requests must be an integer >= 1")


@dataclass(frozen=True)
class Trace:
    """Explicit arrival times in milliseconds; must be strictly increasing."""

    arrival_times_ms: tuple[float, ...]
    n_requests: int

    def __post_init__(self):
        times = tuple(float(t) for t in self.arrival_times_ms)
        object.__setattr__(self, "arrival_times_ms", times)
        if not isinstance(self.n_requests, int) or self.n_requests < 1:
            raise ValueError("n_requests must be an integer >= 1")
        if len(times) < self.n_requests:
            raise ValueError(
                f"trace has {len(times)} arrival times but n_requests is {self.n_requests}"
            )
        last = None
        for t in times:
            if not math.isfinite(t) or t < 0:
                raise ValueError("arrival times must be finite and >= 0")
            if last is not None and t <= last:
                raise ValueError("arrival times must be strictly increasing")
            last = t


Workload = FixedInterval | PoissonArrivals | Trace


def generate_arrivals(workload: Workload, rng: RngStream) -> list[float]:
    """Materialize the workload's arrival times, strictly increasing."""
    if isinstance(workload, FixedInterval):
        return [k * workload.interval_ms for k in range(workload.n_requests)]
    if isinstance(workload, PoissonArrivals):
        scale = 1000.0 / workload.rate_per_s
        t = 0.0
        out = []
        for _ in range(workload.n_requests):
            # an exponential draw can be exactly 0; the floor keeps times strictly increasing
            t += max(rng.exponential(scale), 1e-9)
            out.append(t)
        return out
    if isinstance(workload, Trace):
        return list(workload.arrival_times_ms[: workload.n_requests])
    raise TypeError(f"unknown workload type: {type(workload).__name__}")


class RequestType(Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class RequestRecord:
    request_id: int
    arrival_ms: float
    latency_ms: float
    cold_start: bool
    cache_outcome: CacheOutcome
    path: tuple[str, ...]


class EventKind(IntEnum):
    # Arrivals sort before deferred completions at equal timestamps.
    ARRIVAL = 0
    DEFERRED_WRITE_COMPLETE = 1


@dataclass(frozen=True, order=True)
class Event:
    """Queue entry; ordering is (time, kind, request_id)."""

    time_ms: float
    kind: EventKind
    request_id: int


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment; together with the seed it fixes every draw."""

    name: str
    graph: WorkflowGraph
    workload: Workload
    backend: BackendAccess
    request_type: RequestType = RequestType.READ
    cache: str = "none"
    external_access_delay: LatencyDistribution | None = None
    internal_hit_latency_ms: float = 0.0
    write_policy: str = "sync"
    write_preprocess: LatencyDistribution | None = None
    hit_ratio_target: float = 0.0
    key_space: int | None = None
    seed: int = 1
    exclude_cold: bool = False
    containers: ContainerPolicy = ContainerPolicy()
    container_overrides: Mapping[str, ContainerPolicy] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "container_overrides", dict(self.container_overrides))
        if self.cache not in ("none", "external", "internal"):
            raise ValueError("cache must be one of: none, external, internal")
        if self.cache == "external" and self.external_access_delay is None:
            raise ValueError("cache 'external' requires external_access_delay")
        if self.write_policy not in ("sync", "write_behind"):
            raise ValueError("write_policy must be one of: sync, write_behind")
        if self.write_policy == "write_behind" and self.write_preprocess is None:
            raise ValueError("write_policy 'write_behind' requires write_preprocess")
        if not 0.0 <= self.hit_ratio_target <= 1.0:
            raise ValueError("hit_ratio_target must be in [0, 1]")
        if self.key_space is not None and self.key_space < 1:
            raise ValueError("key_space must be >= 1")
        if self.internal_hit_latency_ms < 0:
            raise ValueError("internal_hit_latency_ms must be >= 0")

    @property
    def n_requests(self) -> int:
        return self.workload.n_requests

    def with_overrides(
        self,
        seed: int | None = None,
        n_requests: int | None = None,
        exclude_cold: bool | None = None,
    ) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if n_requests is not None:
            cfg = replace(cfg, workload=replace(cfg.workload, n_requests=n_requests))
        if exclude_cold is not None:
            cfg = replace(cfg, exclude_cold=exclude_cold)
        return cfg


def build_cache_strategy(config: ExperimentConfig) -> CacheStrategy:
    if config.cache == "external":
        return ExternalCache(config.external_access_delay)
    if config.cache == "internal":
        return InternalCache(config.internal_hit_latency_ms)
    return NoCache()


def build_write_policy(config: ExperimentConfig) -> WritePolicy:
    if config.write_policy == "write_behind":
        return WriteBehind(config.write_preprocess)
    return SyncWrite()


def build_sessions(config: ExperimentConfig) -> dict[str, ContainerSession]:
    sessions = {}
    for c in config.graph.components:
        if c.kind is ComponentKind.FUNCTION:
            policy = config.container_overrides.get(c.id, config.containers)
            sessions[c.id] = ContainerSession(c.id, policy)
    return sessions


def simulate_request(
    graph: WorkflowGraph,
    sessions: Mapping[str, ContainerSession],
    strategy: CacheStrategy,
    policy: WritePolicy,
    backend: BackendAccess,
    request_type: RequestType,
    key: str | None,
    request_id: int,
    now_ms: float,
    streams: SimStreams,
    path: CriticalPath | None = None,
) -> tuple[RequestRecord, float | None]:
    """Walk one request along the critical path and return its record.

    Latency sums each function's startup penalty and sampled compute plus each
    edge's sampled delay.  When the path terminates at a database, that final
    edge is replaced by the cache-read or write-policy contribution.  The
    second return value is the duration of the deferred database write when
    the write policy defers, else None.
    """
    if path is None:
        path = critical_path(graph)
    comp = graph.component_map
    edge_map = graph.edge_map
    ids = path.component_ids

    latency = 0.0
    cold = False
    for cid in ids:
        c = comp[cid]
        if c.kind is ComponentKind.FUNCTION:
            penalty, was_cold = sessions[cid].on_request(now_ms, streams.cold_start)
            latency += penalty
            cold = cold or was_cold
        latency += c.compute.sample(streams.compute)

    terminal_db = len(ids) >= 2 and comp[ids[-1]].kind is ComponentKind.DATABASE
    outcome = CacheOutcome.NOT_APPLICABLE
    deferred_ms = None
    for caller, callee in zip(ids, ids[1:]):
        if terminal_db and callee == ids[-1]:
            if request_type is RequestType.READ:
                result = strategy.read(
                    sessions.get(caller), backend, key, streams.cache, streams.db
                )
                latency += result.latency_ms
                outcome = result.outcome
            else:
                written = policy.write(backend, streams.db, streams.write)
                latency += written.latency_ms
                if written.deferred:
                    deferred_ms = backend.db_access_delay.sample(streams.db)
        else:
            latency += edge_map[(caller, callee)].network_delay.sample(streams.hops)

    record = RequestRecord(request_id, now_ms, latency, cold, outcome, ids)
    return record, deferred_ms


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    path: CriticalPath
    records: tuple[RequestRecord, ...]
    report: MetricsReport
    deferred_completions: tuple[tuple[int, float], ...]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one experiment to completion; fully determined by config and seed."""
    path = critical_path(config.graph)
    comp = config.graph.component_map
    terminal_db = (
        len(path.component_ids) >= 2
        and comp[path.component_ids[-1]].kind is ComponentKind.DATABASE
    )
    if (
        config.cache == "internal"
        and config.request_type is RequestType.READ
        and terminal_db
        and comp[path.component_ids[-2]].kind is not ComponentKind.FUNCTION
    ):
        raise ValueError("internal cache requires the database to be called by a function")

    streams = SimStreams.from_seed(config.seed)
    arrivals = generate_arrivals(config.workload, streams.arrivals)
    if config.request_type is RequestType.READ:
        key_space = config.key_space if config.key_space is not None else len(arrivals)
        keys: list[str | None] = list(
            synthesize_key_stream(config.hit_ratio_target, len(arrivals), key_space, streams.keys)
        )
    else:
        keys = [None] * len(arrivals)

    strategy = build_cache_strategy(config)
    policy = build_write_policy(config)
    sessions = build_sessions(config)

    queue = [Event(t, EventKind.ARRIVAL, rid) for rid, t in enumerate(arrivals)]
    heapq.heapify(queue)
    records: list[RequestRecord] = []
    completions: list[tuple[int, float]] = []
    outstanding = 0
    outstanding_max = 0
    last_time = float("-inf")
    while queue:
        event = heapq.heappop(queue)
        assert event.time_ms >= last_time, "virtual clock ran backwards"
        last_time = event.time_ms
        if event.kind is EventKind.ARRIVAL:
            record, deferred_ms = simulate_request(
                config.graph,
                sessions,
                strategy,
                policy,
                config.backend,
                config.request_type,
                keys[event.request_id],
                event.request_id,
                event.time_ms,
                streams,
                path=path,
            )
            records.append(record)
            if deferred_ms is not None:
                outstanding += 1
                outstanding_max = max(outstanding_max, outstanding)
                heapq.heappush(
                    queue,
                    Event(
                        event.time_ms + record.latency_ms + deferred_ms,
                        EventKind.DEFERRED_WRITE_COMPLETE,
                        event.request_id,
                    ),
                )
        else:
            outstanding -= 1
            completions.append((event.request_id, event.time_ms))

    report = summarize(
        records,
        exclude_cold=config.exclude_cold,
        deferred_writes_outstanding_max=outstanding_max,
    )
    return ExperimentResult(config, path, tuple(records), report, tuple(completions))
