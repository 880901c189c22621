import random

import pytest

from faasim.latency import Constant, RngStream, Uniform
from faasim.lifecycle import (
    ContainerPolicy,
    ContainerSession,
    SessionNotWarmError,
    SessionState,
    TimeRegressionError,
)

COLD_200 = ContainerPolicy(idle_timeout_ms=1000.0, cold_start_delay=Constant(200.0))


def rng():
    return RngStream(1, 6)


def test_first_request_is_cold():
    s = ContainerSession("f1", COLD_200)
    assert s.state is SessionState.NEVER_STARTED
    penalty, cold = s.on_request(0.0, rng())
    assert (penalty, cold) == (200.0, True)
    assert s.state is SessionState.WARM
    assert s.cold_start_count == 1


def test_warm_within_timeout():
    s = ContainerSession("f1", COLD_200)
    s.on_request(0.0, rng())
    penalty, cold = s.on_request(500.0, rng())
    assert (penalty, cold) == (0.0, False)
    assert s.cold_start_count == 1


def test_gap_equal_to_timeout_stays_warm():
    s = ContainerSession("f1", COLD_200)
    s.on_request(0.0, rng())
    _, cold = s.on_request(1000.0, rng())
    assert cold is False


def test_gap_beyond_timeout_restarts_cold():
    s = ContainerSession("f1", COLD_200)
    s.on_request(0.0, rng())
    penalty, cold = s.on_request(1000.1, rng())
    assert (penalty, cold) == (200.0, True)
    assert s.cold_start_count == 2


def test_zero_delay_cold_start_still_flagged():
    s = ContainerSession("f1", ContainerPolicy(1000.0, Constant(0.0)))
    penalty, cold = s.on_request(0.0, rng())
    assert penalty == 0.0
    assert cold is True


def test_time_regression_rejected():
    s = ContainerSession("f1", COLD_200)
    s.on_request(100.0, rng())
    with pytest.raises(TimeRegressionError):
        s.on_request(99.0, rng())


def test_store_lives_within_session():
    s = ContainerSession("f1", COLD_200)
    s.on_request(0.0, rng())
    assert s.store_get("k") is None
    s.store_put("k", "v")
    assert s.store_contains("k")
    s.on_request(500.0, rng())
    assert s.store_get("k") == "v"


def test_store_cleared_by_suspension():
    s = ContainerSession("f1", COLD_200)
    s.on_request(0.0, rng())
    s.store_put("k", "v")
    s.on_request(5000.0, rng())  # past the 1000ms timeout
    assert s.store_get("k") is None
    assert s.store_size == 0


def test_store_requires_warm_session():
    s = ContainerSession("f1", COLD_200)
    with pytest.raises(SessionNotWarmError):
        s.store_get("k")
    with pytest.raises(SessionNotWarmError):
        s.store_put("k", "v")


def test_fixed_gap_cold_start_counts():
    # gap below timeout: one cold start total; gap above: one per request
    warm = ContainerSession("f1", COLD_200)
    for i in range(50):
        warm.on_request(i * 1000.0, rng())
    assert warm.cold_start_count == 1

    cold = ContainerSession("f1", COLD_200)
    for i in range(50):
        cold.on_request(i * 1001.0, rng())
    assert cold.cold_start_count == 50


def test_sampled_cold_start_delay():
    s = ContainerSession("f1", ContainerPolicy(1000.0, Uniform(100.0, 300.0)))
    penalty, _ = s.on_request(0.0, rng())
    assert 100.0 <= penalty <= 300.0


def test_store_never_survives_a_cold_start():
    py_rng = random.Random(99)
    draws = rng()
    s = ContainerSession("f1", COLD_200)
    now = 0.0
    stored: set[str] = set()
    for i in range(500):
        gap = py_rng.choice([1.0, 500.0, 1000.0, 1000.5, 4000.0])
        now += gap
        _, cold = s.on_request(now, draws)
        if cold:
            assert s.store_size == 0
            for key in stored:
                assert not s.store_contains(key)
            stored.clear()
        else:
            for key in stored:
                assert s.store_contains(key)
        if py_rng.random() < 0.5:
            key = f"k{i}"
            s.store_put(key, i)
            stored.add(key)
