"""Instance model: directed multigraph, commodities, paths, and flows.

Nodes are integers ``0 .. num_nodes-1``.  Edges are indexed by position
in the instance's edge list; parallel edges are allowed and common
(Pigou-style networks).  Path flows are the primary representation of a
routing because the fairness measures depend on the path decomposition,
not just on the induced edge loads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FeasibilityError, StructureError
from .latency import LatencyBatch, LatencyFn

__all__ = [
    "Edge",
    "Commodity",
    "Instance",
    "Path",
    "PathFlow",
    "FEASIBILITY_RTOL",
    "DEFAULT_USED_THRESHOLD",
    "aggregate_edge_flows",
    "as_edge_flows",
    "check_feasible",
    "check_path",
    "path_latency",
    "total_cost",
    "commodity_cost",
    "used_paths",
]

FEASIBILITY_RTOL = 1e-9
DEFAULT_USED_THRESHOLD = 1e-6


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    latency: LatencyFn


@dataclass(frozen=True)
class Commodity:
    source: int
    sink: int
    rate: float


@dataclass(frozen=True)
class Path:
    """A simple source-sink walk of one commodity, as a sequence of edge ids."""

    commodity: int
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(int(e) for e in self.edges))


class Instance:
    """A routing game: directed graph, per-edge latency, demand rates.

    Instances are immutable after construction and safe to share between
    threads or processes.  Construction validates that node references
    are in range, that every rate is strictly positive, and that each
    commodity's sink is reachable from its source.
    """

    def __init__(self, num_nodes, edges, commodities, name=""):
        self.num_nodes = int(num_nodes)
        self.name = name
        if self.num_nodes < 1:
            raise StructureError("instance needs at least one node")
        self.edges = tuple(
            e if isinstance(e, Edge) else Edge(int(e[0]), int(e[1]), e[2]) for e in edges
        )
        self.commodities = tuple(
            c if isinstance(c, Commodity) else Commodity(int(c[0]), int(c[1]), float(c[2]))
            for c in commodities
        )
        if not self.commodities:
            raise StructureError("instance needs at least one commodity (rates must be positive)")

        for i, e in enumerate(self.edges):
            if not isinstance(e.latency, LatencyFn):
                raise StructureError(f"edge {i} latency is not a LatencyFn: {e.latency!r}")
            for node in (e.tail, e.head):
                if not 0 <= node < self.num_nodes:
                    raise StructureError(f"edge {i} references node {node} outside 0..{self.num_nodes - 1}")

        # adjacency: per node, (edge_id, head) in increasing edge id
        out_edges = [[] for _ in range(self.num_nodes)]
        for eid, e in enumerate(self.edges):
            out_edges[e.tail].append((eid, e.head))
        self.out_edges = tuple(tuple(adj) for adj in out_edges)
        self.edge_tail_list = [e.tail for e in self.edges]
        self.edge_tails = np.array(self.edge_tail_list, dtype=np.intp)
        self.edge_heads = np.array([e.head for e in self.edges], dtype=np.intp)
        self.rates = np.array([c.rate for c in self.commodities])

        for i, c in enumerate(self.commodities):
            if not (c.rate > 0) or not np.isfinite(c.rate):
                raise StructureError(f"commodity {i} rate must be finite and > 0, got {c.rate}")
            for node in (c.source, c.sink):
                if not 0 <= node < self.num_nodes:
                    raise StructureError(f"commodity {i} references node {node} outside 0..{self.num_nodes - 1}")
            if c.source == c.sink:
                raise StructureError(f"commodity {i} has identical source and sink {c.source}")
            if not self._reachable(c.source, c.sink):
                raise StructureError(f"no s-t path for commodity {i} ({c.source} -> {c.sink})")

        self._batch = None

    def _reachable(self, source, sink):
        seen = bytearray(self.num_nodes)
        seen[source] = 1
        queue = deque([source])
        while queue:
            u = queue.popleft()
            if u == sink:
                return True
            for _, v in self.out_edges[u]:
                if not seen[v]:
                    seen[v] = 1
                    queue.append(v)
        return False

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_commodities(self):
        return len(self.commodities)

    @property
    def latency_batch(self):
        if self._batch is None:
            self._batch = LatencyBatch(e.latency for e in self.edges)
        return self._batch

    def edge_latencies(self, edge_flows):
        """Per-edge latency vector at the given edge loads."""
        return self.latency_batch.evaluate(np.asarray(edge_flows, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.edges == other.edges
            and self.commodities == other.commodities
        )

    def __hash__(self):
        return hash((self.num_nodes, self.edges, self.commodities))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (
            f"<Instance{label}: {self.num_nodes} nodes, {self.num_edges} edges, "
            f"{self.num_commodities} commodities>"
        )


class PathFlow(dict):
    """Sparse map ``{Path: flow}``; paths not present carry zero flow."""

    def __missing__(self, key):
        return 0.0

    def commodity_paths(self, i):
        """Paths of commodity ``i`` present in the map, in deterministic order."""
        return sorted((p for p in self if p.commodity == i), key=lambda p: p.edges)


def check_path(inst, path):
    """Validate that ``path`` is a simple source-sink walk of its commodity."""
    if not 0 <= path.commodity < inst.num_commodities:
        raise StructureError(f"unknown commodity index {path.commodity}")
    com = inst.commodities[path.commodity]
    if not path.edges:
        raise StructureError("path has no edges")
    nodes = []
    for eid in path.edges:
        if not 0 <= eid < inst.num_edges:
            raise StructureError(f"path references unknown edge {eid}")
        edge = inst.edges[eid]
        if nodes and edge.tail != nodes[-1]:
            raise StructureError(f"path edges do not chain: edge {eid} starts at {edge.tail}, expected {nodes[-1]}")
        if not nodes:
            nodes.append(edge.tail)
        nodes.append(edge.head)
    if nodes[0] != com.source or nodes[-1] != com.sink:
        raise StructureError(
            f"path endpoints ({nodes[0]} -> {nodes[-1]}) do not match commodity "
            f"{path.commodity} ({com.source} -> {com.sink})"
        )
    if len(set(nodes)) != len(nodes):
        raise StructureError("path repeats a node (not simple)")


def aggregate_edge_flows(inst, flow):
    """Edge-flow vector induced by a path flow: ``f_e = sum_{P owning e} f_P``."""
    out = np.zeros(inst.num_edges)
    for path, value in flow.items():
        for eid in path.edges:
            out[eid] += value
    return out


def as_edge_flows(inst, flow):
    """Coerce ``flow`` (a ``PathFlow`` or an edge-flow vector) to edge flows."""
    if isinstance(flow, dict):
        return aggregate_edge_flows(inst, flow)
    arr = np.asarray(flow, dtype=float)
    if arr.shape != (inst.num_edges,):
        raise StructureError(f"edge flow vector has shape {arr.shape}, expected ({inst.num_edges},)")
    if np.any(arr < 0):
        raise FeasibilityError("edge flows must be nonnegative")
    return arr


def check_feasible(inst, flow, rtol=FEASIBILITY_RTOL):
    """Raise :class:`FeasibilityError` unless ``flow`` routes every rate.

    A path flow is feasible when every value is nonnegative and, for each
    commodity, the flows sum to the rate within ``rtol * rate``.
    """
    totals = np.zeros(inst.num_commodities)
    for path, value in flow.items():
        if not 0 <= path.commodity < inst.num_commodities:
            raise StructureError(f"unknown commodity index {path.commodity}")
        if value < 0:
            raise FeasibilityError(f"negative flow {value} on {path}")
        totals[path.commodity] += value
    for i, com in enumerate(inst.commodities):
        if abs(totals[i] - com.rate) > rtol * com.rate:
            raise FeasibilityError(
                f"commodity {i} routes {totals[i]!r} of rate {com.rate!r} "
                f"(tolerance {rtol * com.rate:g})"
            )


def path_latency(inst, flow, path):
    """Latency of ``path`` under ``flow``: sum of edge latencies on the path."""
    check_path(inst, path)
    edge_flows = as_edge_flows(inst, flow)
    latencies = inst.edge_latencies(edge_flows)
    return float(sum(latencies[eid] for eid in path.edges))


def total_cost(inst, flow):
    """Total travel cost ``sum_e latency_e(f_e) * f_e`` of a feasible flow."""
    if isinstance(flow, dict):
        check_feasible(inst, flow)
    edge_flows = as_edge_flows(inst, flow)
    return float(np.dot(inst.edge_latencies(edge_flows), edge_flows))


def commodity_cost(inst, flow, i):
    """Travel cost incurred by commodity ``i``: ``sum_{P in P_i} l_P(f) f_P``.

    Needs the path view; commodity costs are not determined by edge flows
    alone.
    """
    if not 0 <= i < inst.num_commodities:
        raise StructureError(f"unknown commodity index {i}")
    edge_flows = as_edge_flows(inst, flow)
    latencies = inst.edge_latencies(edge_flows)
    cost = 0.0
    for path, value in flow.items():
        if path.commodity == i and value > 0:
            cost += value * sum(latencies[eid] for eid in path.edges)
    return float(cost)


def used_paths(inst, flow, i, theta=DEFAULT_USED_THRESHOLD):
    """Paths of commodity ``i`` carrying more than ``theta * rate`` flow.

    ``theta`` is a relative threshold in (0, 1); iterative solvers leave
    vanishing residues on abandoned paths, so "positive flow" predicates
    are thresholded.  Returns paths in deterministic (edge-sequence)
    order.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if not 0 <= i < inst.num_commodities:
        raise StructureError(f"unknown commodity index {i}")
    cut = theta * inst.commodities[i].rate
    kept = [p for p, v in flow.items() if p.commodity == i and v > cut]
    kept.sort(key=lambda p: p.edges)
    return kept
