import math
import statistics

import pytest

from faasim.caching import BackendAccess, CacheOutcome, NoCache, SyncWrite
from faasim.engine import (
    Event,
    EventKind,
    ExperimentConfig,
    FixedInterval,
    PoissonArrivals,
    RequestType,
    SimStreams,
    Trace,
    generate_arrivals,
    run_experiment,
    simulate_request,
)
from faasim.latency import Constant, NormalTruncated, RngStream
from faasim.lifecycle import ContainerPolicy, ContainerSession
from faasim.workflow import Component, ComponentKind, Edge, WorkflowGraph

G = ComponentKind.GATEWAY
F = ComponentKind.FUNCTION
D = ComponentKind.DATABASE

NO_COLD = ContainerPolicy(idle_timeout_ms=300_000.0, cold_start_delay=Constant(0.0))


def chain_graph(length, compute, hop, db_edge):
    comps = [Component("gateway", G)]
    comps += [Component(f"f{i}", F, compute) for i in range(1, length + 1)]
    comps.append(Component("db", D))
    edges = [Edge("gateway", "f1")]
    edges += [Edge(f"f{i}", f"f{i+1}", hop) for i in range(1, length)]
    edges.append(Edge(f"f{length}", "db", db_edge))
    return WorkflowGraph(tuple(comps), tuple(edges))


def deterministic_chain(length):
    return chain_graph(length, Constant(5.0), Constant(90.0), Constant(45.0))


def chain_config(length, **overrides):
    base = dict(
        name=f"test-chain-{length}",
        graph=deterministic_chain(length),
        workload=FixedInterval(1000.0, 100),
        backend=BackendAccess(Constant(45.0)),
        containers=NO_COLD,
        seed=1,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# --- workloads ---


def test_fixed_interval_arrivals():
    times = generate_arrivals(FixedInterval(1000.0, 3), RngStream(1, 0))
    assert times == [0.0, 1000.0, 2000.0]


def test_trace_arrivals_verbatim():
    times = generate_arrivals(Trace((5.0, 7.0, 9.0), 3), RngStream(1, 0))
    assert times == [5.0, 7.0, 9.0]


def test_trace_validation():
    with pytest.raises(ValueError):
        Trace((5.0, 7.0), 3)  # shorter than n_requests
    with pytest.raises(ValueError):
        Trace((5.0, 5.0, 9.0), 3)  # not strictly increasing
    with pytest.raises(ValueError):
        Trace((-1.0, 7.0), 2)


def test_poisson_mean_gap():
    times = generate_arrivals(PoissonArrivals(10.0, 100_000), RngStream(1, 0))
    gaps = [b - a for a, b in zip([0.0] + times, times)]
    mean_gap = sum(gaps) / len(gaps)
    assert abs(mean_gap - 100.0) < 1.0  # 10 req/s -> 100ms gaps
    assert all(g > 0 for g in gaps)


def test_poisson_reproducible():
    a = generate_arrivals(PoissonArrivals(10.0, 50), RngStream(42, 0))
    b = generate_arrivals(PoissonArrivals(10.0, 50), RngStream(42, 0))
    assert a == b


# --- single request walk ---


def walk_once(graph, cold_delay=Constant(0.0), request_type=RequestType.READ):
    sessions = {
        c.id: ContainerSession(c.id, ContainerPolicy(300_000.0, cold_delay))
        for c in graph.components
        if c.kind is F
    }
    return simulate_request(
        graph,
        sessions,
        NoCache(),
        SyncWrite(),
        BackendAccess(Constant(45.0)),
        request_type,
        "k",
        0,
        0.0,
        SimStreams.from_seed(1),
    )


def test_single_function_chain_latency():
    record, deferred = walk_once(deterministic_chain(1))
    assert record.latency_ms == 50.0
    assert record.cold_start is True  # first request; the penalty happens to be 0
    assert record.cache_outcome is CacheOutcome.MISS
    assert deferred is None


def test_five_function_chain_latency():
    record, _ = walk_once(deterministic_chain(5))
    # 5 computes + 4 hops + database access
    assert record.latency_ms == 5 * 5.0 + 4 * 90.0 + 45.0
    assert record.path == ("gateway", "f1", "f2", "f3", "f4", "f5", "db")


def test_cold_start_penalty_added():
    record, _ = walk_once(deterministic_chain(1), cold_delay=Constant(200.0))
    assert record.latency_ms == 250.0
    assert record.cold_start is True


# --- full experiments ---


def test_deterministic_chain_all_requests_equal():
    result = run_experiment(chain_config(1))
    assert len(result.records) == 100
    assert all(r.latency_ms == 50.0 for r in result.records)
    assert result.records[0].cold_start is True
    assert all(not r.cold_start for r in result.records[1:])
    assert result.report.mean_ms == 50.0
    assert result.report.cold_start_count == 1


def test_deterministic_chain_lengths_are_affine():
    means = [run_experiment(chain_config(n)).report.mean_ms for n in range(1, 6)]
    assert means == [50.0, 145.0, 240.0, 335.0, 430.0]


def test_same_seed_same_records():
    a = run_experiment(chain_config(3, backend=BackendAccess(NormalTruncated(45.0, 9.0))))
    b = run_experiment(chain_config(3, backend=BackendAccess(NormalTruncated(45.0, 9.0))))
    assert a.records == b.records
    assert a.report == b.report


def test_different_seed_different_records():
    cfg = chain_config(1, backend=BackendAccess(NormalTruncated(45.0, 9.0)))
    ra = run_experiment(cfg)
    rb = run_experiment(cfg.with_overrides(seed=2))
    assert ra.records != rb.records


def test_stochastic_chain_means_increase_with_length():
    means = []
    for n in range(1, 6):
        graph = chain_graph(
            n, NormalTruncated(5.0, 1.0), NormalTruncated(90.0, 18.0), NormalTruncated(45.0, 9.0)
        )
        means.append(run_experiment(chain_config(n, graph=graph)).report.mean_ms)
    assert all(a < b for a, b in zip(means, means[1:]))


def test_arrival_times_do_not_shift_latency_draws():
    # same seed, different arrival schedule: per-request latencies must match
    # because arrivals and latency sampling use separate streams (containers
    # stay warm under both schedules)
    graph = chain_graph(
        2, NormalTruncated(5.0, 1.0), NormalTruncated(90.0, 18.0), NormalTruncated(45.0, 9.0)
    )
    base = chain_config(2, graph=graph, workload=FixedInterval(1000.0, 50))
    shifted = chain_config(
        2, graph=graph, workload=Trace(tuple(3.0 + 7.0 * i for i in range(50)), 50)
    )
    ra, rb = run_experiment(base), run_experiment(shifted)
    assert [r.latency_ms for r in ra.records] == [r.latency_ms for r in rb.records]
    assert [r.arrival_ms for r in ra.records] != [r.arrival_ms for r in rb.records]


def test_internal_cache_repeat_key_experiment():
    cfg = chain_config(1, cache="internal", hit_ratio_target=1.0)
    result = run_experiment(cfg)
    outcomes = [r.cache_outcome for r in result.records]
    assert outcomes[0] is CacheOutcome.MISS
    assert all(o is CacheOutcome.HIT for o in outcomes[1:])
    # a hit skips the database access entirely
    assert result.records[1].latency_ms == 5.0
    assert result.report.hit_ratio == pytest.approx(99 / 100)


def test_internal_cache_saving_deterministic_exact():
    # saving equals measured hit ratio times the db mean, with zero tolerance
    # when every distribution is constant.  n = 256 keeps hits/n dyadic so the
    # float arithmetic on both sides is exact.
    def cfg(**overrides):
        return chain_config(
            1,
            workload=FixedInterval(1000.0, 256),
            backend=BackendAccess(Constant(50.0)),
            **overrides,
        )

    none_run = run_experiment(cfg())
    internal = run_experiment(cfg(cache="internal", hit_ratio_target=1.0))
    saving = none_run.report.mean_ms - internal.report.mean_ms
    assert internal.report.hit_ratio == 255 / 256
    assert saving == internal.report.hit_ratio * 50.0


def test_internal_cache_saving_stochastic_within_three_se():
    db = NormalTruncated(50.0, 10.0)
    graph = chain_graph(1, NormalTruncated(5.0, 1.0), Constant(0.0), db)

    def cfg(**overrides):
        return ExperimentConfig(
            name="saving",
            graph=graph,
            workload=FixedInterval(1000.0, 2000),
            backend=BackendAccess(db),
            containers=NO_COLD,
            seed=7,
            **overrides,
        )

    none_run = run_experiment(cfg())
    internal = run_experiment(cfg(cache="internal", hit_ratio_target=0.9))
    saving = none_run.report.mean_ms - internal.report.mean_ms
    expected = internal.report.hit_ratio * db.mean()
    n = len(none_run.records)
    se = math.sqrt(
        statistics.variance(r.latency_ms for r in none_run.records) / n
        + statistics.variance(r.latency_ms for r in internal.records) / n
    )
    assert abs(saving - expected) <= 3 * se


def test_internal_cache_requires_function_caller():
    graph = WorkflowGraph(
        (Component("gateway", G), Component("db", D)),
        (Edge("gateway", "db", Constant(45.0)),),
    )
    cfg = ExperimentConfig(
        name="bad",
        graph=graph,
        workload=FixedInterval(1000.0, 10),
        backend=BackendAccess(Constant(45.0)),
        cache="internal",
    )
    with pytest.raises(ValueError):
        run_experiment(cfg)


def test_write_behind_response_ignores_database_delay():
    def cfg(db_ms):
        return chain_config(
            1,
            request_type=RequestType.WRITE,
            write_policy="write_behind",
            write_preprocess=Constant(2.0),
            backend=BackendAccess(Constant(db_ms)),
        )

    rs, rf = run_experiment(cfg(400.0)), run_experiment(cfg(40.0))
    assert rs.records == rf.records
    assert all(r.latency_ms == 7.0 for r in rs.records)  # compute 5 + preprocess 2
    assert all(r.cache_outcome is CacheOutcome.NOT_APPLICABLE for r in rs.records)
    assert rs.report.hit_ratio is None
    # the deferred completions DO depend on the database delay
    assert rs.deferred_completions != rf.deferred_completions
    assert len(rs.deferred_completions) == 100


def test_sync_write_pays_database_delay():
    cfg = chain_config(
        1, request_type=RequestType.WRITE, write_policy="sync", backend=BackendAccess(Constant(40.0))
    )
    result = run_experiment(cfg)
    assert all(r.latency_ms == 45.0 for r in result.records)  # compute 5 + database write 40
    assert result.deferred_completions == ()


def test_deferred_completion_time():
    cfg = chain_config(
        1,
        request_type=RequestType.WRITE,
        write_policy="write_behind",
        write_preprocess=Constant(2.0),
        backend=BackendAccess(Constant(40.0)),
        workload=FixedInterval(1000.0, 2),
    )
    result = run_experiment(cfg)
    # completion = arrival + response latency + deferred database write
    assert result.deferred_completions[0] == (0, 0.0 + 7.0 + 40.0)
    assert result.deferred_completions[1] == (1, 1000.0 + 7.0 + 40.0)
    assert result.report.deferred_writes_outstanding_max == 1


def test_outstanding_deferred_writes_accumulate_under_load():
    # 10ms arrival gaps with 500ms deferred writes leave many writes in flight
    cfg = chain_config(
        1,
        request_type=RequestType.WRITE,
        write_policy="write_behind",
        write_preprocess=Constant(2.0),
        backend=BackendAccess(Constant(500.0)),
        workload=FixedInterval(10.0, 100),
    )
    result = run_experiment(cfg)
    assert result.report.deferred_writes_outstanding_max > 1
    assert len(result.deferred_completions) == 100


def test_event_ordering():
    arrival = Event(10.0, EventKind.ARRIVAL, 2)
    deferred = Event(10.0, EventKind.DEFERRED_WRITE_COMPLETE, 1)
    assert sorted([deferred, arrival]) == [arrival, deferred]


def test_config_validation():
    with pytest.raises(ValueError):
        chain_config(1, cache="external")  # missing access delay
    with pytest.raises(ValueError):
        chain_config(1, write_policy="write_behind")  # missing preprocess
    with pytest.raises(ValueError):
        chain_config(1, hit_ratio_target=1.5)
    with pytest.raises(ValueError):
        chain_config(1, cache="bogus")


def test_with_overrides():
    cfg = chain_config(1)
    changed = cfg.with_overrides(seed=9, n_requests=7, exclude_cold=True)
    assert changed.seed == 9
    assert changed.n_requests == 7
    assert changed.exclude_cold is True
    # the original is untouched
    assert (cfg.seed, cfg.n_requests, cfg.exclude_cold) == (1, 100, False)
