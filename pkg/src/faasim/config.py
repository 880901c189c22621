"""Experiment configuration documents: loading, validation, serialization.

The on-disk format is JSON.  Schema violations are collected with full field
paths (for example graph.edges[2].network_delay.mean) and raised together in
one ConfigError, so a bad file reports everything wrong with it at once.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .caching import BackendAccess
from .engine import ExperimentConfig, FixedInterval, PoissonArrivals, RequestType, Trace
from .latency import Constant, distribution_from_config, distribution_to_config
from .lifecycle import DEFAULT_COLD_START_DELAY, DEFAULT_IDLE_TIMEOUT_MS, ContainerPolicy
from .workflow import (
    Component,
    ComponentKind,
    Edge,
    WorkflowGraph,
    critical_path,
    validate_graph,
)

__all__ = ["ConfigError", "load_config", "parse_config", "config_to_doc"]

_U64_MAX = 2**64 - 1


class ConfigError(Exception):
    """One or more configuration problems; each violation names its field path."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("\n".join(self.violations) if self.violations else "configuration error")


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {p}"]) from None
    except OSError as exc:
        raise ConfigError([f"config file unreadable: {exc}"]) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON in {p}: {exc}"]) from None
    return parse_config(doc)


_TOP_FIELDS = {
    "name",
    "seed",
    "n_requests",
    "exclude_cold",
    "request_type",
    "hit_ratio_target",
    "key_space",
    "graph",
    "workload",
    "cache",
    "external_cache",
    "internal_hit_latency_ms",
    "write_policy",
    "write_preprocess",
    "backend",
    "containers",
}

_COMPONENT_KINDS = {k.value: k for k in ComponentKind}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _number_field(doc, key, default, violations, path=None, minimum=None, strict_min=False, maximum=None):
    path = path or key
    if key not in doc:
        return default
    v = doc[key]
    if not _is_number(v):
        violations.append(f"{path}: must be a finite number")
        return None
    if minimum is not None and (v < minimum or (strict_min and v == minimum)):
        op = ">" if strict_min else ">="
        violations.append(f"{path}: must be {op} {minimum}")
        return None
    if maximum is not None and v > maximum:
        violations.append(f"{path}: must be <= {maximum}")
        return None
    return float(v)


def _int_field(doc, key, default, violations, path=None, minimum=1, maximum=None):
    path = path or key
    if key not in doc:
        return default
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool):
        violations.append(f"{path}: must be an integer")
        return None
    if v < minimum:
        violations.append(f"{path}: must be >= {minimum}")
        return None
    if maximum is not None and v > maximum:
        violations.append(f"{path}: must be <= {maximum}")
        return None
    return v


def _dist_field(obj, path, violations):
    """Parse a distribution at `path`; returns None and records a violation on error."""
    try:
        return distribution_from_config(obj)
    except ValueError as exc:
        msg = str(exc)
        head = msg.split(":", 1)[0]
        if ":" in msg and " " not in head:
            violations.append(f"{path}.{msg}")
        else:
            violations.append(f"{path}: {msg}")
        return None


def _parse_graph(obj, violations):
    if obj is None:
        violations.append("graph: required")
        return None
    if not isinstance(obj, dict):
        violations.append("graph: must be an object")
        return None
    for key in sorted(set(obj) - {"components", "edges"}):
        violations.append(f"graph.{key}: unknown field")

    components: list[Component] = []
    structural_ok = True
    comps = obj.get("components")
    if not isinstance(comps, list) or not comps:
        violations.append("graph.components: must be a non-empty list")
        return None
    for i, c in enumerate(comps):
        path = f"graph.components[{i}]"
        if not isinstance(c, dict):
            violations.append(f"{path}: must be an object")
            structural_ok = False
            continue
        for key in sorted(set(c) - {"id", "kind", "compute"}):
            violations.append(f"{path}.{key}: unknown field")
        cid = c.get("id")
        if not isinstance(cid, str) or not cid:
            violations.append(f"{path}.id: must be a non-empty string")
            structural_ok = False
            continue
        kind = c.get("kind")
        if kind not in _COMPONENT_KINDS:
            violations.append(
                f"{path}.kind: must be one of {', '.join(sorted(_COMPONENT_KINDS))}"
            )
            structural_ok = False
            continue
        compute = Constant(0.0)
        if "compute" in c:
            compute = _dist_field(c["compute"], f"{path}.compute", violations)
            if compute is None:
                structural_ok = False
                continue
        components.append(Component(cid, _COMPONENT_KINDS[kind], compute))

    edges: list[Edge] = []
    raw_edges = obj.get("edges", [])
    if not isinstance(raw_edges, list):
        violations.append("graph.edges: must be a list")
        return None
    for i, e in enumerate(raw_edges):
        path = f"graph.edges[{i}]"
        if not isinstance(e, dict):
            violations.append(f"{path}: must be an object")
            structural_ok = False
            continue
        for key in sorted(set(e) - {"caller", "callee", "network_delay"}):
            violations.append(f"{path}.{key}: unknown field")
        ok = True
        for role in ("caller", "callee"):
            v = e.get(role)
            if not isinstance(v, str) or not v:
                violations.append(f"{path}.{role}: must be a non-empty string")
                ok = False
        delay = Constant(0.0)
        if "network_delay" in e:
            delay = _dist_field(e["network_delay"], f"{path}.network_delay", violations)
            if delay is None:
                ok = False
        if not ok:
            structural_ok = False
            continue
        edges.append(Edge(e["caller"], e["callee"], delay))

    if not structural_ok:
        return None
    graph = WorkflowGraph(tuple(components), tuple(edges))
    for msg in validate_graph(graph):
        violations.append(f"graph: {msg}")
    return graph


def _parse_workload(obj, n_requests, violations):
    if obj is None:
        violations.append("workload: required")
        return None
    if not isinstance(obj, dict):
        violations.append("workload: must be an object")
        return None
    kind = obj.get("kind")
    if kind not in ("fixed_interval", "poisson", "trace"):
        violations.append("workload.kind: must be one of fixed_interval, poisson, trace")
        return None
    if n_requests is None:
        return None

    if kind == "fixed_interval":
        for key in sorted(set(obj) - {"kind", "interval_ms"}):
            violations.append(f"workload.{key}: unknown field")
        if "interval_ms" not in obj:
            violations.append("workload.interval_ms: required for kind 'fixed_interval'")
            return None
        interval = _number_field(obj, "interval_ms", None, violations,
                                 path="workload.interval_ms", minimum=0, strict_min=True)
        return None if interval is None else FixedInterval(interval, n_requests)

    if kind == "poisson":
        for key in sorted(set(obj) - {"kind", "rate_per_s"}):
            violations.append(f"workload.{key}: unknown field")
        if "rate_per_s" not in obj:
            violations.append("workload.rate_per_s: required for kind 'poisson'")
            return None
        rate = _number_field(obj, "rate_per_s", None, violations,
                             path="workload.rate_per_s", minimum=0, strict_min=True)
        return None if rate is None else PoissonArrivals(rate, n_requests)

    for key in sorted(set(obj) - {"kind", "arrival_times_ms"}):
        violations.append(f"workload.{key}: unknown field")
    times = obj.get("arrival_times_ms")
    if not isinstance(times, list) or not all(_is_number(t) for t in times):
        violations.append("workload.arrival_times_ms: must be a list of finite numbers")
        return None
    try:
        return Trace(tuple(times), n_requests)
    except ValueError as exc:
        violations.append(f"workload.arrival_times_ms: {exc}")
        return None


def _parse_containers(obj, graph, violations):
    default = (ContainerPolicy(), {})
    if obj is None:
        return default
    if not isinstance(obj, dict):
        violations.append("containers: must be an object")
        return default
    for key in sorted(set(obj) - {"idle_timeout_ms", "cold_start_delay", "per_function"}):
        violations.append(f"containers.{key}: unknown field")

    timeout = _number_field(obj, "idle_timeout_ms", DEFAULT_IDLE_TIMEOUT_MS, violations,
                            path="containers.idle_timeout_ms", minimum=0)
    delay = DEFAULT_COLD_START_DELAY
    if "cold_start_delay" in obj:
        delay = _dist_field(obj["cold_start_delay"], "containers.cold_start_delay", violations)
    if timeout is None or delay is None:
        return default
    base = ContainerPolicy(timeout, delay)

    overrides: dict[str, ContainerPolicy] = {}
    per_function = obj.get("per_function", {})
    if not isinstance(per_function, dict):
        violations.append("containers.per_function: must be an object keyed by function id")
        return base, {}
    function_ids = (
        {c.id for c in graph.components if c.kind is ComponentKind.FUNCTION}
        if graph is not None
        else None
    )
    for fid in sorted(per_function):
        path = f"containers.per_function.{fid}"
        spec_obj = per_function[fid]
        if function_ids is not None and fid not in function_ids:
            violations.append(f"{path}: unknown function component")
            continue
        if not isinstance(spec_obj, dict):
            violations.append(f"{path}: must be an object")
            continue
        for key in sorted(set(spec_obj) - {"idle_timeout_ms", "cold_start_delay"}):
            violations.append(f"{path}.{key}: unknown field")
        f_timeout = _number_field(spec_obj, "idle_timeout_ms", base.idle_timeout_ms, violations,
                                  path=f"{path}.idle_timeout_ms", minimum=0)
        f_delay = base.cold_start_delay
        if "cold_start_delay" in spec_obj:
            f_delay = _dist_field(spec_obj["cold_start_delay"], f"{path}.cold_start_delay", violations)
        if f_timeout is not None and f_delay is not None:
            overrides[fid] = ContainerPolicy(f_timeout, f_delay)
    return base, overrides


def parse_config(doc) -> ExperimentConfig:
    """Validate a config document and build the experiment it describes.

    Raises ConfigError carrying every violation found.
    """
    if not isinstance(doc, dict):
        raise ConfigError(["config document must be a JSON object"])
    v: list[str] = []

    for key in sorted(set(doc) - _TOP_FIELDS):
        v.append(f"{key}: unknown field")

    name = doc.get("name", "custom")
    if not isinstance(name, str) or not name:
        v.append("name: must be a non-empty string")
        name = "custom"

    seed = _int_field(doc, "seed", 1, v, minimum=0, maximum=_U64_MAX)
    n_requests = _int_field(doc, "n_requests", 100, v, minimum=1)

    exclude_cold = doc.get("exclude_cold", False)
    if not isinstance(exclude_cold, bool):
        v.append("exclude_cold: must be true or false")
        exclude_cold = False

    request_type = doc.get("request_type", "read")
    if request_type not in ("read", "write"):
        v.append("request_type: must be one of read, write")
        request_type = "read"

    hit_ratio_target = _number_field(doc, "hit_ratio_target", 0.0, v, minimum=0.0, maximum=1.0)
    key_space = _int_field(doc, "key_space", None, v, minimum=1)

    graph = _parse_graph(doc.get("graph"), v)
    workload = _parse_workload(doc.get("workload"), n_requests, v)

    backend_obj = doc.get("backend")
    backend = None
    if backend_obj is None:
        v.append("backend: required")
    elif not isinstance(backend_obj, dict):
        v.append("backend: must be an object")
    else:
        for key in sorted(set(backend_obj) - {"db_access_delay"}):
            v.append(f"backend.{key}: unknown field")
        if "db_access_delay" not in backend_obj:
            v.append("backend.db_access_delay: required")
        else:
            dist = _dist_field(backend_obj["db_access_delay"], "backend.db_access_delay", v)
            if dist is not None:
                backend = BackendAccess(dist)

    cache = doc.get("cache", "none")
    if cache not in ("none", "external", "internal"):
        v.append("cache: must be one of none, external, internal")
        cache = "none"

    external_access_delay = None
    if cache == "external":
        ext = doc.get("external_cache")
        if ext is None:
            v.append("external_cache: required when cache is 'external'")
        elif not isinstance(ext, dict):
            v.append("external_cache: must be an object")
        else:
            for key in sorted(set(ext) - {"access_delay"}):
                v.append(f"external_cache.{key}: unknown field")
            if "access_delay" not in ext:
                v.append("external_cache.access_delay: required")
            else:
                external_access_delay = _dist_field(
                    ext["access_delay"], "external_cache.access_delay", v
                )
    elif "external_cache" in doc:
        v.append("external_cache: only meaningful when cache is 'external'")

    internal_hit_latency_ms = 0.0
    if cache == "internal":
        internal_hit_latency_ms = _number_field(
            doc, "internal_hit_latency_ms", 0.0, v, minimum=0.0
        )
    elif "internal_hit_latency_ms" in doc:
        v.append("internal_hit_latency_ms: only meaningful when cache is 'internal'")

    write_policy = doc.get("write_policy", "sync")
    if write_policy not in ("sync", "write_behind"):
        v.append("write_policy: must be one of sync, write_behind")
        write_policy = "sync"

    write_preprocess = None
    if write_policy == "write_behind":
        if "write_preprocess" not in doc:
            v.append("write_preprocess: required when write_policy is 'write_behind'")
        else:
            write_preprocess = _dist_field(doc["write_preprocess"], "write_preprocess", v)
    elif "write_preprocess" in doc:
        v.append("write_preprocess: only meaningful when write_policy is 'write_behind'")

    containers, overrides = _parse_containers(doc.get("containers"), graph, v)

    # The internal cache lives in the session of the function that calls the
    # database, so that caller must be a function.
    if cache == "internal" and request_type == "read" and graph is not None and not validate_graph(graph):
        path = critical_path(graph)
        comp = graph.component_map
        ids = path.component_ids
        if (
            len(ids) >= 2
            and comp[ids[-1]].kind is ComponentKind.DATABASE
            and comp[ids[-2]].kind is not ComponentKind.FUNCTION
        ):
            v.append("cache: internal cache requires the database to be called by a function")

    if v:
        raise ConfigError(v)

    return ExperimentConfig(
        name=name,
        graph=graph,
        workload=workload,
        backend=backend,
        request_type=RequestType(request_type),
        cache=cache,
        external_access_delay=external_access_delay,
        internal_hit_latency_ms=internal_hit_latency_ms,
        write_policy=write_policy,
        write_preprocess=write_preprocess,
        hit_ratio_target=hit_ratio_target,
        key_space=key_space,
        seed=seed,
        exclude_cold=exclude_cold,
        containers=containers,
        container_overrides=overrides,
    )


def config_to_doc(config: ExperimentConfig) -> dict:
    """Serialize a config back to its JSON document form.

    Round-trips: parse_config(config_to_doc(cfg)) == cfg.
    """
    graph_doc = {
        "components": [
            {
                "id": c.id,
                "kind": c.kind.value,
                "compute": distribution_to_config(c.compute),
            }
            for c in config.graph.components
        ],
        "edges": [
            {
                "caller": e.caller,
                "callee": e.callee,
                "network_delay": distribution_to_config(e.network_delay),
            }
            for e in config.graph.edges
        ],
    }

    w = config.workload
    if isinstance(w, FixedInterval):
        workload_doc = {"kind": "fixed_interval", "interval_ms": w.interval_ms}
    elif isinstance(w, PoissonArrivals):
        workload_doc = {"kind": "poisson", "rate_per_s": w.rate_per_s}
    else:
        workload_doc = {"kind": "trace", "arrival_times_ms": list(w.arrival_times_ms)}

    doc = {
        "name": config.name,
        "seed": config.seed,
        "n_requests": config.n_requests,
        "exclude_cold": config.exclude_cold,
        "request_type": config.request_type.value,
        "graph": graph_doc,
        "workload": workload_doc,
        "backend": {"db_access_delay": distribution_to_config(config.backend.db_access_delay)},
        "cache": config.cache,
        "write_policy": config.write_policy,
        "hit_ratio_target": config.hit_ratio_target,
    }
    if config.key_space is not None:
        doc["key_space"] = config.key_space
    if config.cache == "external":
        doc["external_cache"] = {
            "access_delay": distribution_to_config(config.external_access_delay)
        }
    if config.cache == "internal":
        doc["internal_hit_latency_ms"] = config.internal_hit_latency_ms
    if config.write_policy == "write_behind":
        doc["write_preprocess"] = distribution_to_config(config.write_preprocess)

    containers_doc = {
        "idle_timeout_ms": config.containers.idle_timeout_ms,
        "cold_start_delay": distribution_to_config(config.containers.cold_start_delay),
    }
    if config.container_overrides:
        containers_doc["per_function"] = {
            fid: {
                "idle_timeout_ms": pol.idle_timeout_ms,
                "cold_start_delay": distribution_to_config(pol.cold_start_delay),
            }
            for fid, pol in sorted(config.container_overrides.items())
        }
    doc["containers"] = containers_doc
    return doc
