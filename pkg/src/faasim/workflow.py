"""Workflow graphs of serverless components and critical-path analysis.

A workflow is a DAG rooted at a single gateway.  Vertices are platform
components (functions, databases, caches, file stores) carrying a compute-time
distribution; edges are synchronous call dependencies carrying a network-delay
distribution.  The critical path is the gateway-to-sink path with the largest
expected latency, where expected latency sums node compute means and edge
delay means.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

from .latency import Constant, LatencyDistribution

__all__ = [
    "ComponentKind",
    "SINK_KINDS",
    "Component",
    "Edge",
    "WorkflowGraph",
    "CriticalPath",
    "InvalidGraphError",
    "validate_graph",
    "critical_path",
]


class ComponentKind(Enum):
    GATEWAY = "gateway"
    FUNCTION = "function"
    DATABASE = "database"
    EXTERNAL_CACHE = "external_cache"
    FILE_STORE = "file_store"


# Component kinds that terminate call chains and may not call anything.
SINK_KINDS = frozenset(
    {ComponentKind.DATABASE, ComponentKind.EXTERNAL_CACHE, ComponentKind.FILE_STORE}
)

_ZERO = Constant(0.0)


@dataclass(frozen=True)
class Component:
    id: str
    kind: ComponentKind
    compute: LatencyDistribution = _ZERO

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("component id must be a non-empty string")
        if not isinstance(self.kind, ComponentKind):
            raise ValueError(f"{self.id}: kind must be a ComponentKind")


@dataclass(frozen=True)
class Edge:
    """A synchronous call from `caller` to `callee`."""

    caller: str
    callee: str
    network_delay: LatencyDistribution = _ZERO

    def __post_init__(self):
        for label, value in (("caller", self.caller), ("callee", self.callee)):
            if not isinstance(value, str) or not value:
                raise ValueError(f"edge {label} must be a non-empty component id")


@dataclass(frozen=True)
class WorkflowGraph:
    components: tuple[Component, ...]
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def component_map(self) -> dict[str, Component]:
        return {c.id: c for c in self.components}

    @cached_property
    def edge_map(self) -> dict[tuple[str, str], Edge]:
        return {(e.caller, e.callee): e for e in self.edges}

    @cached_property
    def outgoing(self) -> dict[str, tuple[Edge, ...]]:
        out: dict[str, list[Edge]] = {c.id: [] for c in self.components}
        for e in self.edges:
            if e.caller in out:
                out[e.caller].append(e)
        return {k: tuple(v) for k, v in out.items()}


class InvalidGraphError(ValueError):
    """Raised when an operation requires a well-formed graph but got violations."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("invalid workflow graph: " + "; ".join(self.violations))


def validate_graph(graph: WorkflowGraph) -> list[str]:
    """Check every structural invariant; returns [] when the graph is well formed.

    Violations are data, not exceptions: each message names the offending
    component or edge so config-level callers can report exact locations.
    """
    violations: list[str] = []

    seen: set[str] = set()
    for comp in graph.components:
        if comp.id in seen:
            violations.append(f"duplicate component id: {comp.id}")
        seen.add(comp.id)
    ids = seen

    gateways = [c.id for c in graph.components if c.kind is ComponentKind.GATEWAY]
    if not gateways:
        violations.append("no gateway component")
    elif len(gateways) > 1:
        violations.append("multiple gateway components: " + ", ".join(gateways))

    comp_by_id = graph.component_map
    seen_pairs: set[tuple[str, str]] = set()
    usable_edges: list[Edge] = []
    for e in graph.edges:
        ok = True
        if e.caller == e.callee:
            violations.append(f"self-loop at {e.caller}")
            ok = False
        for endpoint in (e.caller, e.callee):
            if endpoint not in ids:
                violations.append(
                    f"edge {e.caller}->{e.callee} references unknown component: {endpoint}"
                )
                ok = False
        pair = (e.caller, e.callee)
        if pair in seen_pairs:
            violations.append(f"duplicate edge {e.caller}->{e.callee}")
            ok = False
        seen_pairs.add(pair)
        if not ok:
            continue
        usable_edges.append(e)
        if comp_by_id[e.caller].kind in SINK_KINDS:
            violations.append(
                f"sink component {e.caller} ({comp_by_id[e.caller].kind.value}) "
                f"has outgoing edge to {e.callee}"
            )
        if comp_by_id[e.callee].kind is ComponentKind.GATEWAY:
            violations.append(f"gateway {e.callee} has incoming edge from {e.caller}")

    # Cycle detection (Kahn) over edges with known, distinct endpoints.
    indegree = {cid: 0 for cid in ids}
    successors: dict[str, list[str]] = {cid: [] for cid in ids}
    for e in usable_edges:
        indegree[e.callee] += 1
        successors[e.caller].append(e.callee)
    ready = deque(sorted(cid for cid, deg in indegree.items() if deg == 0))
    visited_count = 0
    while ready:
        node = ready.popleft()
        visited_count += 1
        for nxt in successors[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    if visited_count != len(ids):
        stuck = sorted(cid for cid, deg in indegree.items() if deg > 0)
        violations.append("cycle detected among: " + ", ".join(stuck))

    if len(gateways) == 1:
        reachable = {gateways[0]}
        frontier = deque(reachable)
        while frontier:
            node = frontier.popleft()
            for e in usable_edges:
                if e.caller == node and e.callee not in reachable:
                    reachable.add(e.callee)
                    frontier.append(e.callee)
        for cid in sorted(ids - reachable):
            violations.append(f"unreachable: {cid}")

    return violations


@dataclass(frozen=True)
class CriticalPath:
    component_ids: tuple[str, ...]
    expected_latency_ms: float
    function_count: int


def critical_path(graph: WorkflowGraph) -> CriticalPath:
    """Find the gateway-to-sink path with the largest expected latency.

    Exact ties resolve to the lexicographically smallest id sequence, so the
    result never depends on the order components or edges were listed in.
    Raises InvalidGraphError when the graph fails validation.
    """
    violations = validate_graph(graph)
    if violations:
        raise InvalidGraphError(violations)

    comp = graph.component_map
    out = graph.outgoing
    gateway = next(c.id for c in graph.components if c.kind is ComponentKind.GATEWAY)

    # Topological order, callers before callees; then fold best suffix paths
    # from the sinks back toward the gateway.
    indegree = {cid: 0 for cid in comp}
    for e in graph.edges:
        indegree[e.callee] += 1
    ready = sorted(cid for cid, deg in indegree.items() if deg == 0)
    topo: list[str] = []
    while ready:
        node = ready.pop(0)
        topo.append(node)
        changed = False
        for e in out[node]:
            indegree[e.callee] -= 1
            if indegree[e.callee] == 0:
                ready.append(e.callee)
                changed = True
        if changed:
            ready.sort()

    best: dict[str, tuple[float, tuple[str, ...]]] = {}
    for node in reversed(topo):
        node_mean = comp[node].compute.mean()
        best_total: float | None = None
        best_path: tuple[str, ...] = (node,)
        for e in out[node]:
            sub_total, sub_path = best[e.callee]
            total = node_mean + e.network_delay.mean() + sub_total
            path = (node,) + sub_path
            if best_total is None or total > best_total or (total == best_total and path < best_path):
                best_total, best_path = total, path
        if best_total is None:
            best_total = node_mean
        best[node] = (best_total, best_path)

    total, path = best[gateway]
    function_count = sum(1 for cid in path if comp[cid].kind is ComponentKind.FUNCTION)
    return CriticalPath(path, total, function_count)
