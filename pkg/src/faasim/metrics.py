"""Summary statistics over per-request records: percentiles, ratios, hit rate.

Percentiles use the nearest-rank method on the sorted latencies
(rank = ceil(p * n), 1-based), so small-sample oracles are exact and results
are reproducible bit for bit for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Sequence

from .caching import CacheOutcome

__all__ = [
    "EmptyMetricsError",
    "FiveNumberSummary",
    "MetricsReport",
    "ComparisonReport",
    "nearest_rank",
    "summarize",
    "compare",
]


class EmptyMetricsError(ValueError):
    """No records left to summarize, possibly after cold-start exclusion."""


@dataclass(frozen=True)
class FiveNumberSummary:
    min_ms: float
    q1_ms: float
    median_ms: float
    q3_ms: float
    max_ms: float


@dataclass(frozen=True)
class MetricsReport:
    count: int
    mean_ms: float
    min_ms: float
    max_ms: float
    p50_ms: float
    p95_ms: float
    p99_ms: float
    five_number: FiveNumberSummary
    hit_ratio: float | None
    cold_start_count: int
    deferred_writes_outstanding_max: int


def nearest_rank(sorted_values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile of an ascending-sorted sequence, p in (0, 1]."""
    n = len(sorted_values)
    if n == 0:
        raise EmptyMetricsError("no values")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    rank = min(n, max(1, math.ceil(p * n)))
    return sorted_values[rank - 1]


def summarize(
    records: Iterable,
    exclude_cold: bool = False,
    deferred_writes_outstanding_max: int = 0,
) -> MetricsReport:
    """Reduce request records to a report.

    With exclude_cold, requests that paid a cold start are dropped from the
    latency statistics and the hit ratio; cold_start_count still counts them
    over all records.  The hit ratio is hits / (hits + misses) and is None
    when no request had a cache-applicable outcome.
    """
    records = list(records)
    if not records:
        raise EmptyMetricsError("no records to summarize")
    kept = [r for r in records if not (exclude_cold and r.cold_start)]
    if not kept:
        raise EmptyMetricsError(f"all {len(records)} records excluded as cold starts")

    lat = sorted(r.latency_ms for r in kept)
    hits = sum(1 for r in kept if r.cache_outcome is CacheOutcome.HIT)
    misses = sum(1 for r in kept if r.cache_outcome is CacheOutcome.MISS)
    applicable = hits + misses
    five = FiveNumberSummary(
        min_ms=lat[0],
        q1_ms=nearest_rank(lat, 0.25),
        median_ms=nearest_rank(lat, 0.50),
        q3_ms=nearest_rank(lat, 0.75),
        max_ms=lat[-1],
    )
    return MetricsReport(
        count=len(kept),
        mean_ms=fmean(lat),
        min_ms=lat[0],
        max_ms=lat[-1],
        p50_ms=five.median_ms,
        p95_ms=nearest_rank(lat, 0.95),
        p99_ms=nearest_rank(lat, 0.99),
        five_number=five,
        hit_ratio=(hits / applicable) if applicable else None,
        cold_start_count=sum(1 for r in records if r.cold_start),
        deferred_writes_outstanding_max=deferred_writes_outstanding_max,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Per-statistic quotients a/b plus the relative increase (a-b)/b.

    A ratio against a zero denominator is None (undefined), never infinity.
    """

    mean_ratio: float | None
    mean_relative_increase: float | None
    p50_ratio: float | None
    p95_ratio: float | None
    p99_ratio: float | None


def compare(a: MetricsReport, b: MetricsReport) -> ComparisonReport:
    def ratio(x: float, y: float) -> float | None:
        return None if y == 0 else x / y

    return ComparisonReport(
        mean_ratio=ratio(a.mean_ms, b.mean_ms),
        mean_relative_increase=None if b.mean_ms == 0 else (a.mean_ms - b.mean_ms) / b.mean_ms,
        p50_ratio=ratio(a.p50_ms, b.p50_ms),
        p95_ratio=ratio(a.p95_ms, b.p95_ms),
        p99_ratio=ratio(a.p99_ms, b.p99_ms),
    )
