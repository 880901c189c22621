"""Cache read strategies, write policies, and synthesized key streams.

Reads take one of three paths: no cache (every read is a database access), an
external network-attached cache (one round trip per access, read-through on
miss, contents survive container suspensions), or an internal in-container
cache (hits are free, contents live and die with the warm session).  Writes
either update the database synchronously on the response path or run
write-behind: the response pays only a preprocessing cost and the durable
write completes later, off the response path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .latency import LatencyDistribution, RngStream
from .lifecycle import ContainerSession, SessionNotWarmError

__all__ = [
    "CacheOutcome",
    "BackendAccess",
    "ReadResult",
    "WriteResult",
    "NoCache",
    "ExternalCache",
    "InternalCache",
    "SyncWrite",
    "WriteBehind",
    "CacheStrategy",
    "WritePolicy",
    "synthesize_key_stream",
]


class CacheOutcome(Enum):
    HIT = "hit"
    MISS = "miss"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class BackendAccess:
    """Database access model: network plus service time for one operation."""

    db_access_delay: LatencyDistribution


@dataclass(frozen=True)
class ReadResult:
    latency_ms: float
    outcome: CacheOutcome


@dataclass(frozen=True)
class WriteResult:
    latency_ms: float
    deferred: bool


@dataclass(frozen=True)
class NoCache:
    """Every read goes straight to the database."""

    def read(
        self,
        session: ContainerSession | None,
        backend: BackendAccess,
        key: str,
        cache_rng: RngStream,
        db_rng: RngStream,
    ) -> ReadResult:
        return ReadResult(backend.db_access_delay.sample(db_rng), CacheOutcome.MISS)


class ExternalCache:
    """Network-attached read-through cache; contents outlive cold starts.

    Every access, hit or miss, pays one sampled cache round trip; a miss adds
    the database access and populates the cache.
    """

    def __init__(self, access_delay: LatencyDistribution):
        self.access_delay = access_delay
        self._store: dict[str, str] = {}

    def read(self, session, backend, key, cache_rng, db_rng) -> ReadResult:
        latency = self.access_delay.sample(cache_rng)
        if key in self._store:
            return ReadResult(latency, CacheOutcome.HIT)
        latency += backend.db_access_delay.sample(db_rng)
        self._store[key] = key
        return ReadResult(latency, CacheOutcome.MISS)

    def __contains__(self, key: str) -> bool:
        return key in self._store

    @property
    def size(self) -> int:
        return len(self._store)


class InternalCache:
    """In-container cache backed by the calling function's session store.

    Hits cost `hit_latency_ms` (zero by default: an in-process lookup).
    Misses pay the database access and populate the session store, so the
    cache empties whenever the container cold-starts.
    """

    def __init__(self, hit_latency_ms: float = 0.0):
        if hit_latency_ms < 0:
            raise ValueError("hit_latency_ms must be >= 0")
        self.hit_latency_ms = hit_latency_ms

    def read(self, session, backend, key, cache_rng, db_rng) -> ReadResult:
        if session is None:
            raise SessionNotWarmError(
                "internal cache read requires a function's container session"
            )
        if session.store_contains(key):
            return ReadResult(self.hit_latency_ms, CacheOutcome.HIT)
        latency = backend.db_access_delay.sample(db_rng)
        session.store_put(key, key)
        return ReadResult(latency, CacheOutcome.MISS)


@dataclass(frozen=True)
class SyncWrite:
    """Writes update the database on the response path."""

    def write(self, backend: BackendAccess, db_rng: RngStream, write_rng: RngStream) -> WriteResult:
        return WriteResult(backend.db_access_delay.sample(db_rng), False)


@dataclass(frozen=True)
class WriteBehind:
    """Writes pay preprocessing only; the database update happens later.

    The deferred database access is scheduled by the caller, so the response
    latency never depends on the database delay.
    """

    preprocess: LatencyDistribution

    def write(self, backend, db_rng, write_rng) -> WriteResult:
        return WriteResult(self.preprocess.sample(write_rng), True)


CacheStrategy = NoCache | ExternalCache | InternalCache
WritePolicy = SyncWrite | WriteBehind


def synthesize_key_stream(
    hit_ratio_target: float, n: int, key_space: int, rng: RngStream
) -> list[str]:
    """Emit n request keys whose repeat fraction matches `hit_ratio_target`.

    Every key after the first repeats a previously emitted key with
    probability `hit_ratio_target`, drawn uniformly over the distinct keys so
    far, and is otherwise fresh, until `key_space` distinct keys exist; after
    that every draw repeats.  Against a read-through cache that retains
    everything, the expected hit count is hit_ratio_target * (n - 1).
    """
    if not 0.0 <= hit_ratio_target <= 1.0:
        raise ValueError("hit_ratio_target must be in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if key_space < 1:
        raise ValueError("key_space must be >= 1")

    keys: list[str] = []
    distinct: list[str] = []
    for _ in range(n):
        repeat = bool(distinct) and (
            rng.random() < hit_ratio_target or len(distinct) >= key_space
        )
        if repeat:
            keys.append(distinct[rng.integer(len(distinct))])
        else:
            fresh = f"key-{len(distinct):06d}"
            distinct.append(fresh)
            keys.append(fresh)
    return keys
