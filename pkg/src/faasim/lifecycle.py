"""Per-function container sessions: cold starts, warm serving, idle suspension.

A session models the container that backs one function.  The first request,
and any request after an idle gap longer than the timeout, pays the cold-start
delay and begins a fresh session; everything in the session's in-memory store
is discarded.  Requests landing within the timeout are served warm at zero
startup cost and share the store.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .latency import Constant, LatencyDistribution, RngStream

__all__ = [
    "DEFAULT_IDLE_TIMEOUT_MS",
    "DEFAULT_COLD_START_DELAY",
    "SessionState",
    "TimeRegressionError",
    "SessionNotWarmError",
    "ContainerPolicy",
    "ContainerSession",
]

DEFAULT_IDLE_TIMEOUT_MS = 300_000.0
DEFAULT_COLD_START_DELAY = Constant(200.0)


class SessionState(Enum):
    NEVER_STARTED = "never_started"
    WARM = "warm"
    SUSPENDED = "suspended"


class TimeRegressionError(ValueError):
    """A request carried a timestamp earlier than one the session already served."""


class SessionNotWarmError(RuntimeError):
    """Session store touched outside a warm session; on_request must run first."""


@dataclass(frozen=True)
class ContainerPolicy:
    """Idle timeout and cold-start cost applied to a function's container."""

    idle_timeout_ms: float = DEFAULT_IDLE_TIMEOUT_MS
    cold_start_delay: LatencyDistribution = DEFAULT_COLD_START_DELAY

    def __post_init__(self):
        t = self.idle_timeout_ms
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t) or t < 0:
            raise ValueError("idle_timeout_ms must be a finite number >= 0")


class ContainerSession:
    """Mutable container state for one function, owned by the simulation loop."""

    def __init__(self, function_id: str, policy: ContainerPolicy | None = None):
        self.function_id = function_id
        self.policy = policy if policy is not None else ContainerPolicy()
        self.state = SessionState.NEVER_STARTED
        self.last_request_time_ms: float | None = None
        self.cold_start_count = 0
        self._store: dict[str, tuple[object, float]] = {}

    def __repr__(self):
        return (
            f"ContainerSession({self.function_id!r}, state={self.state.value}, "
            f"cold_starts={self.cold_start_count})"
        )

    def on_request(self, now_ms: float, rng: RngStream) -> tuple[float, bool]:
        """Serve a request arriving at `now_ms`.

        Returns (startup_penalty_ms, cold_started).  A zero-delay cold start
        still reports cold_started=True so request records stay accurate.
        Suspension is evaluated lazily here: a warm session whose idle gap
        exceeded the timeout was suspended in the interim and restarts cold,
        losing its store.
        """
        if self.state is SessionState.WARM:
            if now_ms < self.last_request_time_ms:
                raise TimeRegressionError(
                    f"{self.function_id}: request at {now_ms}ms precedes "
                    f"last request at {self.last_request_time_ms}ms"
                )
            if now_ms - self.last_request_time_ms > self.policy.idle_timeout_ms:
                self.state = SessionState.SUSPENDED
                self._store.clear()

        if self.state is not SessionState.WARM:
            penalty = self.policy.cold_start_delay.sample(rng)
            self._store.clear()
            self.state = SessionState.WARM
            self.last_request_time_ms = now_ms
            self.cold_start_count += 1
            return penalty, True

        self.last_request_time_ms = now_ms
        return 0.0, False

    def store_put(self, key: str, value) -> None:
        self._require_warm()
        self._store[key] = (value, self.last_request_time_ms)

    def store_get(self, key: str):
        """Value stored under `key` in the current warm session, else None."""
        self._require_warm()
        entry = self._store.get(key)
        return None if entry is None else entry[0]

    def store_contains(self, key: str) -> bool:
        self._require_warm()
        return key in self._store

    @property
    def store_size(self) -> int:
        return len(self._store)

    def _require_warm(self) -> None:
        if self.state is not SessionState.WARM:
            raise SessionNotWarmError(
                f"{self.function_id}: store access while {self.state.value}"
            )
