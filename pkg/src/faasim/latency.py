"""Latency distributions, reproducible sampling streams, and chain calibration.

All durations are milliseconds.  Sampling goes through RngStream, which wraps
numpy's Philox 4x64 counter-based bit generator keyed by (seed, stream_id):
the same key always reproduces the same draw sequence, and distinct stream ids
give independent streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean

import numpy as np

__all__ = [
    "RngStream",
    "LatencyDistribution",
    "Constant",
    "Uniform",
    "NormalTruncated",
    "LogNormal",
    "Empirical",
    "CalibrationError",
    "ChainCalibration",
    "fit_chain",
    "chain_mean_ms",
    "distribution_from_config",
    "distribution_to_config",
]

_U64_MAX = 2**64 - 1


class RngStream:
    """A single-owner, reproducible random stream.

    Streams with the same (seed, stream_id) yield identical draws on any
    platform running the same numpy version.  Each simulation purpose
    (arrivals, compute, hops, ...) owns one stream, so draws for one purpose
    never shift the draws of another.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        for label, value in (("seed", seed), ("stream_id", stream_id)):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"{label} must be an integer")
            if not 0 <= value <= _U64_MAX:
                raise ValueError(f"{label} must fit in an unsigned 64-bit integer")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    # All scalar draws return Python floats so downstream json/csv output is
    # plain and platform-stable.

    def random(self) -> float:
        return float(self._gen.random())

    def uniform(self, low: float, high: float) -> float:
        return float(self._gen.uniform(low, high))

    def normal(self, mean: float, stddev: float) -> float:
        return float(self._gen.normal(mean, stddev))

    def lognormal(self, mu: float, sigma: float) -> float:
        return float(self._gen.lognormal(mu, sigma))

    def exponential(self, scale: float) -> float:
        return float(self._gen.exponential(scale))

    def integer(self, upper: int) -> int:
        """Uniform integer in [0, upper)."""
        return int(self._gen.integers(0, upper))

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator, for vectorized draws.

        Batch draws consume the stream exactly like the equivalent sequence of
        scalar draws, so scalar and vectorized callers stay interchangeable.
        """
        return self._gen


def _require_number(name: str, value, minimum: float | None = None) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite number")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}")


class LatencyDistribution:
    """Base class for millisecond duration models with non-negative support."""

    def mean(self) -> float:
        """Analytic mean in milliseconds."""
        raise NotImplementedError

    def sample(self, rng: RngStream) -> float:
        """Draw one duration; always >= 0."""
        raise NotImplementedError

    def sample_many(self, rng: RngStream, n: int) -> np.ndarray:
        """Draw n durations, consuming the stream exactly like n sample() calls."""
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(LatencyDistribution):
    """Always the same duration; consumes no random draws."""

    value_ms: float

    def __post_init__(self):
        _require_number("value_ms", self.value_ms, minimum=0.0)

    def mean(self):
        return float(self.value_ms)

    def sample(self, rng):
        return float(self.value_ms)

    def sample_many(self, rng, n):
        return np.full(n, float(self.value_ms))


@dataclass(frozen=True)
class Uniform(LatencyDistribution):
    low_ms: float
    high_ms: float

    def __post_init__(self):
        _require_number("low_ms", self.low_ms, minimum=0.0)
        _require_number("high_ms", self.high_ms)
        if self.high_ms < self.low_ms:
            raise ValueError("high_ms must be >= low_ms")

    def mean(self):
        return (self.low_ms + self.high_ms) / 2.0

    def sample(self, rng):
        return rng.uniform(self.low_ms, self.high_ms)

    def sample_many(self, rng, n):
        return rng.generator.uniform(self.low_ms, self.high_ms, size=n)


@dataclass(frozen=True)
class NormalTruncated(LatencyDistribution):
    """Normal(mean, stddev) with negative draws clamped to zero.

    Clamping shifts the mean upward, so mean() uses the rectified-normal
    formula E[max(X, 0)] = m * Phi(m/s) + s * phi(m/s), with Phi and phi the
    standard normal CDF and PDF.  This stays exact even when a large share of
    the mass sits below zero.
    """

    mean_ms: float
    stddev_ms: float

    def __post_init__(self):
        _require_number("mean_ms", self.mean_ms, minimum=0.0)
        _require_number("stddev_ms", self.stddev_ms, minimum=0.0)

    def mean(self):
        m, s = float(self.mean_ms), float(self.stddev_ms)
        if s == 0.0:
            return m
        z = m / s
        cdf = 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
        pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return m * cdf + s * pdf

    def sample(self, rng):
        return max(0.0, rng.normal(self.mean_ms, self.stddev_ms))

    def sample_many(self, rng, n):
        return np.maximum(0.0, rng.generator.normal(self.mean_ms, self.stddev_ms, size=n))


@dataclass(frozen=True)
class LogNormal(LatencyDistribution):
    """Log-normal with log-space parameters mu and sigma; support is positive."""

    mu: float
    sigma: float

    def __post_init__(self):
        _require_number("mu", self.mu)
        _require_number("sigma", self.sigma, minimum=0.0)

    def mean(self):
        return math.exp(self.mu + self.sigma**2 / 2.0)

    def sample(self, rng):
        return rng.lognormal(self.mu, self.sigma)

    def sample_many(self, rng, n):
        return rng.generator.lognormal(self.mu, self.sigma, size=n)


@dataclass(frozen=True)
class Empirical(LatencyDistribution):
    """Resamples uniformly, with replacement, from observed durations."""

    values_ms: tuple[float, ...]

    def __post_init__(self):
        cleaned = []
        for v in self.values_ms:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v < 0:
                raise ValueError("values_ms entries must be finite numbers >= 0")
            cleaned.append(float(v))
        if not cleaned:
            raise ValueError("values_ms must be non-empty")
        object.__setattr__(self, "values_ms", tuple(cleaned))

    def mean(self):
        return fmean(self.values_ms)

    def sample(self, rng):
        return self.values_ms[rng.integer(len(self.values_ms))]

    def sample_many(self, rng, n):
        idx = rng.generator.integers(0, len(self.values_ms), size=n)
        return np.asarray(self.values_ms)[idx]


class CalibrationError(ValueError):
    """Measured chain endpoints are inconsistent with the chain latency model."""


def chain_mean_ms(
    length: int,
    per_function_compute_ms: float,
    per_hop_delay_ms: float,
    db_access_ms: float,
) -> float:
    """Deterministic mean response time of a function chain ending at a database.

    A chain of `length` functions behind a gateway performs `length` computes,
    `length - 1` function-to-function hops, and one terminal database access.
    The gateway-to-first-function hop is taken as free: client-side network
    quality is out of scope.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    return length * per_function_compute_ms + (length - 1) * per_hop_delay_ms + db_access_ms


@dataclass(frozen=True)
class ChainCalibration:
    """Two measured chain-latency endpoints used to fit per-hop network delay.

    Each extra function in a chain adds one compute plus one hop, so the hop
    delay is the per-length latency slope minus the per-function compute time.
    """

    length_a: int
    mean_a_ms: float
    length_b: int
    mean_b_ms: float
    per_function_compute_ms: float

    def __post_init__(self):
        if not isinstance(self.length_a, int) or self.length_a < 1:
            raise ValueError("length_a must be an integer >= 1")
        if not isinstance(self.length_b, int) or self.length_b <= self.length_a:
            raise ValueError("length_b must be an integer > length_a")
        _require_number("mean_a_ms", self.mean_a_ms, minimum=0.0)
        _require_number("mean_b_ms", self.mean_b_ms)
        if self.mean_b_ms <= self.mean_a_ms:
            raise ValueError("mean_b_ms must be > mean_a_ms")
        _require_number("per_function_compute_ms", self.per_function_compute_ms, minimum=0.0)

    def per_hop_delay_ms(self) -> float:
        slope = (self.mean_b_ms - self.mean_a_ms) / (self.length_b - self.length_a)
        delay = slope - self.per_function_compute_ms
        if delay <= 0:
            raise CalibrationError(
                f"fitted per-hop delay {delay:.3f}ms is not positive; the endpoints "
                f"cannot come from chains of {self.per_function_compute_ms}ms functions"
            )
        return delay

    def implied_db_access_ms(self) -> float:
        """Database access time that makes the chain model hit both endpoints."""
        delay = self.per_hop_delay_ms()
        db = (
            self.mean_a_ms
            - self.length_a * self.per_function_compute_ms
            - (self.length_a - 1) * delay
        )
        if db < 0:
            raise CalibrationError(
                f"implied database access {db:.3f}ms is negative; endpoints are inconsistent"
            )
        return db

    def mean_for_length(self, length: int) -> float:
        return chain_mean_ms(
            length, self.per_function_compute_ms, self.per_hop_delay_ms(), self.implied_db_access_ms()
        )


def fit_chain(cal: ChainCalibration) -> float:
    """Per-hop network delay fitted to the calibration endpoints, in ms.

    Substituted back into chain_mean_ms (together with the implied database
    access time) this reproduces both endpoints exactly.  Raises
    CalibrationError when the fitted delay is not positive.
    """
    return cal.per_hop_delay_ms()


_DIST_FIELDS = {
    "constant": ("value",),
    "uniform": ("low", "high"),
    "normal": ("mean", "stddev"),
    "lognormal": ("mu", "sigma"),
    "empirical": ("values",),
}


def _config_number(obj: dict, field: str, minimum: float | None = None) -> float:
    v = obj[field]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ValueError(f"{field}: must be a finite number")
    if minimum is not None and v < minimum:
        raise ValueError(f"{field}: must be >= {minimum}")
    return float(v)


def distribution_from_config(obj) -> LatencyDistribution:
    """Parse a tagged object such as {"kind": "normal", "mean": 90, "stddev": 18}.

    Raises ValueError on any schema problem; messages are either
    "field: problem" or a bare sentence when no single field is at fault.
    """
    if not isinstance(obj, dict):
        raise ValueError("must be an object with a 'kind' field")
    kind = obj.get("kind")
    if kind not in _DIST_FIELDS:
        raise ValueError(f"kind: must be one of {', '.join(sorted(_DIST_FIELDS))}")
    allowed = set(_DIST_FIELDS[kind]) | {"kind"}
    for key in obj:
        if key not in allowed:
            raise ValueError(f"{key}: unexpected field for kind '{kind}'")
    for field in _DIST_FIELDS[kind]:
        if field not in obj:
            raise ValueError(f"{field}: required for kind '{kind}'")

    if kind == "constant":
        return Constant(_config_number(obj, "value", minimum=0.0))
    if kind == "uniform":
        low = _config_number(obj, "low", minimum=0.0)
        high = _config_number(obj, "high", minimum=0.0)
        if high < low:
            raise ValueError("high: must be >= low")
        return Uniform(low, high)
    if kind == "normal":
        return NormalTruncated(
            _config_number(obj, "mean", minimum=0.0),
            _config_number(obj, "stddev", minimum=0.0),
        )
    if kind == "lognormal":
        return LogNormal(_config_number(obj, "mu"), _config_number(obj, "sigma", minimum=0.0))
    values = obj["values"]
    if not isinstance(values, list) or not values:
        raise ValueError("values: must be a non-empty list of numbers")
    for i, v in enumerate(values):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v < 0:
            raise ValueError(f"values[{i}]: must be a finite number >= 0")
    return Empirical(tuple(values))


def distribution_to_config(dist: LatencyDistribution) -> dict:
    """Inverse of distribution_from_config."""
    if isinstance(dist, Constant):
        return {"kind": "constant", "value": dist.value_ms}
    if isinstance(dist, Uniform):
        return {"kind": "uniform", "low": dist.low_ms, "high": dist.high_ms}
    if isinstance(dist, NormalTruncated):
        return {"kind": "normal", "mean": dist.mean_ms, "stddev": dist.stddev_ms}
    if isinstance(dist, LogNormal):
        return {"kind": "lognormal", "mu": dist.mu, "sigma": dist.sigma}
    if isinstance(dist, Empirical):
        return {"kind": "empirical", "values": list(dist.values_ms)}
    raise TypeError(f"unknown distribution type: {type(dist).__name__}")
