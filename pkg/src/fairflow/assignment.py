"""Convex traffic assignment by Frank-Wolfe with explicit path bookkeeping.

One solver covers three objectives through a single interpolation
parameter ``alpha``::

    Obj(f) = alpha * C(f) + (1 - alpha) * sum_e int_0^{f_e} l_e(s) ds

``alpha = 0`` is the Nash potential (its minimizer is a Wardrop
equilibrium), ``alpha = 1`` is the total cost (its minimizer is the
system optimum), and intermediate values trade the two off.  The
per-edge gradient is ``alpha * marginal_e + (1 - alpha) * latency_e``.

The solver keeps the path decomposition produced by blending the
all-or-nothing columns.  That decomposition is *the* one reported and
measured downstream: unfairness is a property of path assignments, and
identical edge flows admit decompositions with different unfairness.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import StructureError
from .network import (
    DEFAULT_USED_THRESHOLD,
    Instance,
    Path,
    PathFlow,
    aggregate_edge_flows,
    used_paths,
)

__all__ = [
    "Objective",
    "SolveOptions",
    "SolveResult",
    "NashBaseline",
    "edge_costs",
    "objective_value",
    "shortest_path",
    "solve",
    "nash_baseline",
]

_LINE_SEARCH_TOL = 1e-12


@dataclass(frozen=True)
class Objective:
    """Assignment objective, parameterized by the interpolation weight."""

    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @classmethod
    def nash(cls):
        return cls(0.0)

    @classmethod
    def system(cls):
        return cls(1.0)

    @classmethod
    def interpolated(cls, alpha):
        return cls(float(alpha))

    def __str__(self):
        if self.alpha == 0.0:
            return "nash"
        if self.alpha == 1.0:
            return "system"
        return f"alpha={self.alpha:g}"


@dataclass(frozen=True)
class SolveOptions:
    """Frank-Wolfe knobs.

    ``gap_tol`` is the relative-gap stopping threshold (1e-8 suits
    analytic fixtures; 1e-4 keeps benchmark networks tractable).
    ``theta`` is the relative path-pruning/used-path threshold shared
    with the unfairness measures.
    """

    max_iters: int = 100_000
    gap_tol: float = 1e-8
    theta: float = DEFAULT_USED_THRESHOLD


@dataclass
class SolveResult:
    """Converged (or best-effort) flow plus diagnostics.

    ``cost`` is always the total-travel-cost value, whatever the
    objective optimized.  The trace lists carry one entry per gap
    evaluation: ``objective_trace[k]`` is the objective before step
    ``k``; the final entry describes the returned flow.
    """

    objective: Objective
    path_flow: PathFlow
    edge_flow: np.ndarray
    objective_value: float
    cost: float
    relative_gap: float
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list, repr=False)
    gap_trace: list = field(default_factory=list, repr=False)
    step_trace: list = field(default_factory=list, repr=False)
    prune_events: int = field(default=0, repr=False)


@dataclass
class NashBaseline:
    """Per-commodity equilibrium latency and the solve that produced it.

    ``latencies[i]`` is the minimum latency over commodity ``i``'s
    theta-used paths at the computed equilibrium; ``spread[i]`` is the
    max-min latency gap over those paths (zero at an exact equilibrium,
    a convergence diagnostic for a numerical one).
    """

    latencies: np.ndarray
    spread: np.ndarray
    result: SolveResult


def edge_costs(inst, edge_flows, objective):
    """Gradient of the objective per edge at the given edge flows."""
    x = np.asarray(edge_flows, dtype=float)
    batch = inst.latency_batch
    a = objective.alpha
    if a == 1.0:
        return batch.marginal(x)
    if a == 0.0:
        return batch.evaluate(x)
    return a * batch.marginal(x) + (1.0 - a) * batch.evaluate(x)


def objective_value(inst, edge_flows, objective):
    """Objective value at the given edge flows."""
    x = np.asarray(edge_flows, dtype=float)
    batch = inst.latency_batch
    a = objective.alpha
    cost = float(np.dot(batch.evaluate(x), x)) if a > 0.0 else 0.0
    potential = float(np.sum(batch.integral(x))) if a < 1.0 else 0.0
    return a * cost + (1.0 - a) * potential


def _shortest_path_tree(num_nodes, out_edges, costs, source):
    """Dijkstra from ``source``; ties prefer the smaller incoming edge id.

    ``costs`` is a plain list of nonnegative floats indexed by edge id.
    Returns (dist list, predecessor-edge list).
    """
    heappush, heappop = heapq.heappush, heapq.heappop
    inf = float("inf")
    dist = [inf] * num_nodes
    pred = [-1] * num_nodes
    done = bytearray(num_nodes)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heappop(heap)
        if done[u]:
            continue
        done[u] = 1
        for eid, v in out_edges[u]:
            if done[v]:
                continue
            nd = d + costs[eid]
            dv = dist[v]
            if nd < dv:
                dist[v] = nd
                pred[v] = eid
                heappush(heap, (nd, v))
            elif nd == dv and (pred[v] < 0 or eid < pred[v]):
                pred[v] = eid
    return dist, pred


def _reconstruct(inst, pred, source, sink):
    edges = []
    v = sink
    tails = inst.edge_tail_list
    while v != source:
        eid = pred[v]
        if eid < 0:
            raise StructureError(f"sink {sink} unreachable from {source}")
        edges.append(eid)
        v = tails[eid]
    edges.reverse()
    return tuple(edges)


def shortest_path(inst, costs, commodity):
    """Minimum-cost simple path for one commodity under per-edge costs.

    Deterministic: cost ties are broken toward smaller edge ids, so
    identical inputs always yield the identical path.
    """
    if not 0 <= commodity < inst.num_commodities:
        raise StructureError(f"unknown commodity index {commodity}")
    costs = np.asarray(costs, dtype=float)
    if costs.shape != (inst.num_edges,):
        raise StructureError(f"cost vector has shape {costs.shape}, expected ({inst.num_edges},)")
    com = inst.commodities[commodity]
    _, pred = _shortest_path_tree(inst.num_nodes, inst.out_edges, costs.tolist(), com.source)
    return Path(commodity, _reconstruct(inst, pred, com.source, com.sink))


def _line_search(grad_at, f, y, g0=None):
    """Exact step on [0, 1] by bisection on the directional derivative.

    ``grad_at(x)`` returns the per-edge objective gradient; the
    derivative of the objective along ``y - f`` at step ``t`` is
    ``grad_at((1-t) f + t y) . (y - f)``, nondecreasing in ``t`` by
    convexity.  ``g0`` short-circuits the left endpoint when the caller
    already evaluated the gradient at ``f``.
    """
    d = y - f

    def g(t):
        x = (1.0 - t) * f + t * y  # convex combination keeps flows >= 0
        return float(np.dot(grad_at(x), d))

    if g0 is None:
        g0 = g(0.0)
    if g0 >= 0.0:
        return 0.0
    if g(1.0) <= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > _LINE_SEARCH_TOL:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _aon_assignment(inst, costs, by_source):
    """All-or-nothing flows: each commodity fully on its shortest path.

    Commodities sharing a source reuse one shortest-path tree.  Returns
    (edge-flow vector, per-commodity edge tuples).
    """
    y = np.zeros(inst.num_edges)
    paths = [None] * inst.num_commodities
    cost_list = costs.tolist()
    for source, commodity_ids in by_source:
        _, pred = _shortest_path_tree(inst.num_nodes, inst.out_edges, cost_list, source)
        for i in commodity_ids:
            com = inst.commodities[i]
            edges = _reconstruct(inst, pred, source, com.sink)
            paths[i] = edges
            rate = com.rate
            for eid in edges:
                y[eid] += rate
    return y, paths


def solve(inst, objective, options=SolveOptions()):
    """Minimize the assignment objective by Frank-Wolfe.

    Each iteration: evaluate the gradient, build the all-or-nothing
    direction from per-commodity shortest paths, measure the relative
    gap ``grad . (f - y) / |Obj(f)|`` against the linearization lower
    bound, and if not yet converged take the exact line-search step and
    blend the AON column into the path decomposition.  Paths whose
    blended flow drops below ``theta * rate`` are pruned, their mass
    redistributed proportionally over the commodity's surviving paths.

    Non-convergence within ``max_iters`` is not an error: the result is
    returned with ``converged=False``.  Everything is deterministic.
    """
    if not isinstance(inst, Instance):
        raise StructureError(f"expected an Instance, got {inst!r}")
    grouped = {}
    for i, com in enumerate(inst.commodities):
        grouped.setdefault(com.source, []).append(i)
    by_source = sorted(grouped.items())
    batch = inst.latency_batch
    alpha = objective.alpha

    if alpha == 1.0:
        grad_at = batch.marginal
    elif alpha == 0.0:
        grad_at = batch.evaluate
    else:
        def grad_at(x):
            return alpha * batch.marginal(x) + (1.0 - alpha) * batch.evaluate(x)

    rates = inst.rates
    theta = options.theta

    # initial feasible point: all-or-nothing at free flow
    zero = np.zeros(inst.num_edges)
    edge_flow, aon0 = _aon_assignment(inst, grad_at(zero), by_source)
    raw_flows = [{aon0[i]: rates[i]} for i in range(inst.num_commodities)]
    scales = [1.0] * inst.num_commodities

    obj_trace, gap_trace, step_trace = [], [], []
    prune_events = 0
    converged = False
    gap = float("inf")
    obj = objective_value(inst, edge_flow, objective)
    steps = 0

    def recompute_edge_flow():
        out = np.zeros(inst.num_edges)
        for i in range(inst.num_commodities):
            s = scales[i]
            for edges, v in raw_flows[i].items():
                val = s * v
                for eid in edges:
                    out[eid] += val
        return out

    for it in range(options.max_iters + 1):
        costs = grad_at(edge_flow)
        obj = objective_value(inst, edge_flow, objective)
        y, aon_paths = _aon_assignment(inst, costs, by_source)
        inner = float(np.dot(costs, edge_flow - y))
        if obj != 0.0:
            gap = inner / abs(obj)
        else:
            gap = 0.0 if inner <= 0.0 else float("inf")
        obj_trace.append(obj)
        gap_trace.append(gap)
        if gap <= options.gap_tol:
            converged = True
            break
        if it == options.max_iters:
            break

        delta = _line_search(grad_at, edge_flow, y, g0=-inner)
        step_trace.append(delta)
        if delta <= 0.0:
            break  # no descent achievable along the FW direction
        steps += 1

        if delta >= 1.0 - 1e-14:
            for i in range(inst.num_commodities):
                raw_flows[i] = {aon_paths[i]: rates[i]}
                scales[i] = 1.0
            edge_flow = y.copy()
        else:
            keep = 1.0 - delta
            for i in range(inst.num_commodities):
                scales[i] *= keep
                raw = raw_flows[i]
                add = delta * rates[i] / scales[i]
                edges = aon_paths[i]
                raw[edges] = raw.get(edges, 0.0) + add
            edge_flow = keep * edge_flow + delta * y

        # prune vanished paths, redistributing their mass proportionally
        pruned = False
        for i in range(inst.num_commodities):
            raw = raw_flows[i]
            if len(raw) <= 1:
                if scales[i] < 1e-100:  # refresh scale to dodge underflow
                    raw_flows[i] = {p: scales[i] * v for p, v in raw.items()}
                    scales[i] = 1.0
                continue
            s = scales[i]
            cut = theta * rates[i]
            if s * min(raw.values()) >= cut and s >= 1e-100:
                continue
            kept = {p: s * v for p, v in raw.items() if s * v >= cut}
            if not kept:
                best = max(raw, key=lambda p: raw[p])
                kept = {best: s * raw[best]}
            total = sum(kept.values())
            factor = rates[i] / total
            raw_flows[i] = {p: v * factor for p, v in kept.items()}
            scales[i] = 1.0
            pruned = True
            prune_events += 1
        if pruned or (steps % 256 == 0):
            edge_flow = recompute_edge_flow()

    path_flow = PathFlow()
    for i in range(inst.num_commodities):
        s = scales[i]
        for edges, v in raw_flows[i].items():
            path_flow[Path(i, edges)] = s * v

    return SolveResult(
        objective=objective,
        path_flow=path_flow,
        edge_flow=edge_flow,
        objective_value=obj,
        cost=float(np.dot(batch.evaluate(edge_flow), edge_flow)),
        relative_gap=gap,
        iterations=steps,
        converged=converged,
        objective_trace=obj_trace,
        gap_trace=gap_trace,
        step_trace=step_trace,
        prune_events=prune_events,
    )


def nash_baseline(inst, gap_tol=1e-8, theta=DEFAULT_USED_THRESHOLD, max_iters=100_000):
    """Equilibrium latency per commodity, from a Nash solve.

    At an exact equilibrium every used path of a commodity has the same
    latency; a numerical equilibrium leaves a small spread, which is
    reported.  The baseline latency is the minimum over theta-used paths.
    """
    result = solve(inst, Objective.nash(), SolveOptions(max_iters=max_iters, gap_tol=gap_tol, theta=theta))
    latencies = np.empty(inst.num_commodities)
    spread = np.empty(inst.num_commodities)
    per_edge = inst.edge_latencies(result.edge_flow)
    for i in range(inst.num_commodities):
        values = [
            sum(per_edge[eid] for eid in p.edges)
            for p in used_paths(inst, result.path_flow, i, theta)
        ]
        latencies[i] = min(values)
        spread[i] = max(values) - min(values)
    return NashBaseline(latencies=latencies, spread=spread, result=result)
