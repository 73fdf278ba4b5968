"""Fairness-efficiency frontier and constrained-system-optimum queries.

The constrained system optimum (CSO) asks for the cheapest feasible
flow whose unfairness stays below ``1 + beta``.  Solving it exactly is
out of scope; instead a grid of interpolated assignment problems
(``alpha`` from 0 to 1) traces a frontier of flows from the Nash flow
to the system optimum, every point carrying all three unfairness
measures of its own path decomposition.  CSO costs read off such a
frontier are therefore *upper bounds* on the true constrained optimum.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assignment import NashBaseline, Objective, SolveOptions, solve
from .errors import StructureError
from .network import (
    DEFAULT_USED_THRESHOLD,
    aggregate_edge_flows,
    check_feasible,
    total_cost,
    used_paths,
)
from .unfairness import report

__all__ = [
    "FrontierPoint",
    "CsoQuery",
    "THREADS_ENV_VAR",
    "alpha_grid",
    "sweep",
    "frontier_point",
    "cso_cost",
    "pareto_filter",
    "improvement_condition",
    "parallel_link_check",
]

THREADS_ENV_VAR = "FAIRFLOW_THREADS"

FRONTIER_CSV_COLUMNS = ("alpha", "cost", "rho", "u_loaded", "u_average", "u_ue", "gap", "iters", "converged")


@dataclass
class FrontierPoint:
    """One swept flow: interpolation weight, cost, and its unfairness."""

    alpha: float
    cost: float
    rho: float
    u_loaded: float
    u_average: float
    u_ue: float
    gap: float
    iters: int
    converged: bool
    error: str = None
    result: object = field(default=None, repr=False, compare=False)

    def measure(self, name):
        try:
            return {"loaded": self.u_loaded, "average": self.u_average, "ue": self.u_ue}[name]
        except KeyError:
            raise ValueError(f"unknown measure {name!r} (expected loaded/average/ue)")

    def row(self):
        return {
            "alpha": self.alpha,
            "cost": self.cost,
            "rho": self.rho,
            "u_loaded": self.u_loaded,
            "u_average": self.u_average,
            "u_ue": self.u_ue,
            "gap": self.gap,
            "iters": self.iters,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class CsoQuery:
    """Which unfairness constraint to impose, and how tight."""

    measure: str
    beta: float

    def __post_init__(self):
        if self.measure not in ("loaded", "average", "ue"):
            raise ValueError(f"unknown measure {self.measure!r} (expected loaded/average/ue)")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def alpha_grid(step=0.01):
    """The grid 0, step, 2*step, ..., 1 (decimals kept tidy)."""
    n = int(round(1.0 / step))
    if abs(n * step - 1.0) > 1e-12:
        raise ValueError(f"step {step} does not divide 1 evenly")
    return [round(i * step, 12) for i in range(n + 1)]


def _solve_alpha(args):
    inst, alpha, options = args
    try:
        return solve(inst, Objective.interpolated(alpha), options)
    except Exception as exc:  # recorded per-point, not fatal
        return f"{type(exc).__name__}: {exc}"


def default_jobs():
    """Worker count for sweeps: cpu count capped by FAIRFLOW_THREADS."""
    jobs = os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap:
        try:
            jobs = max(1, min(jobs, int(cap)))
        except ValueError:
            pass
    return jobs


def sweep(inst, alphas=None, options=SolveOptions(), jobs=1):
    """Trace the frontier: one interpolated solve per grid point.

    The grid must contain 0 (the Nash flow, which defines the UE
    baseline for every point) and 1 (the system optimum, which defines
    the inefficiency-ratio denominator).  Points are solved
    independently — in parallel when ``jobs > 1`` — and returned in
    ascending alpha order; per-point solver failures are recorded on the
    point rather than raised.
    """
    if alphas is None:
        alphas = alpha_grid(0.01)
    alphas = sorted(set(float(a) for a in alphas))
    if not alphas or alphas[0] != 0.0 or alphas[-1] != 1.0:
        raise ValueError("alpha grid must lie in [0, 1] and include both 0 and 1")
    if any(a < 0.0 or a > 1.0 for a in alphas):
        raise ValueError("alpha grid must lie in [0, 1]")

    tasks = [(inst, a, options) for a in alphas]
    if jobs is None:
        jobs = default_jobs()
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_solve_alpha, tasks))
    else:
        outcomes = [_solve_alpha(t) for t in tasks]

    theta = options.theta
    nash_outcome = outcomes[0]
    baseline = None
    if not isinstance(nash_outcome, str):
        per_edge = inst.edge_latencies(nash_outcome.edge_flow)
        latencies = np.empty(inst.num_commodities)
        for i in range(inst.num_commodities):
            values = [
                sum(per_edge[eid] for eid in p.edges)
                for p in used_paths(inst, nash_outcome.path_flow, i, theta)
            ]
            latencies[i] = min(values)
        baseline = latencies
    so_outcome = outcomes[-1]
    so_cost = so_outcome.cost if not isinstance(so_outcome, str) else float("nan")

    points = []
    for a, outcome in zip(alphas, outcomes):
        if isinstance(outcome, str):
            nan = float("nan")
            points.append(
                FrontierPoint(a, nan, nan, nan, nan, nan, nan, 0, False, error=outcome)
            )
            continue
        points.append(
            frontier_point(
                inst,
                outcome.path_flow,
                alpha=a,
                so_cost=so_cost,
                baseline=baseline,
                theta=theta,
                gap=outcome.relative_gap,
                iters=outcome.iterations,
                converged=outcome.converged,
                result=outcome,
            )
        )
    return points


def frontier_point(inst, flow, alpha, so_cost, baseline, theta=DEFAULT_USED_THRESHOLD,
                   gap=0.0, iters=0, converged=True, result=None):
    """Evaluate an arbitrary feasible path flow as a frontier point.

    Besides building sweep output this lets analytically known flows
    (fixture witnesses) join a frontier for CSO queries.
    """
    check_feasible(inst, flow)
    cost = total_cost(inst, flow)
    if baseline is None:
        u_ue = float("nan")
        rep = report(inst, flow, np.ones(inst.num_commodities), theta)
    else:
        if isinstance(baseline, NashBaseline):
            baseline = baseline.latencies
        rep = report(inst, flow, baseline, theta)
        u_ue = rep.ue.aggregate
    rho = cost / so_cost if so_cost and np.isfinite(so_cost) else float("nan")
    return FrontierPoint(
        alpha=alpha,
        cost=cost,
        rho=rho,
        u_loaded=rep.loaded.aggregate,
        u_average=rep.average.aggregate,
        u_ue=u_ue,
        gap=gap,
        iters=iters,
        converged=converged,
        result=result,
    )


def cso_cost(frontier, query):
    """Cheapest frontier point whose chosen measure is within ``1 + beta``.

    Returns ``(cost, witness point)``; ``(inf, None)`` when no point
    qualifies.  Because the frontier is a finite sample of feasible
    flows, the value is an upper bound on the true constrained optimum.
    """
    if not frontier:
        raise ValueError("empty frontier")
    limit = 1.0 + query.beta
    best = None
    for point in frontier:
        value = point.measure(query.measure)
        if np.isnan(value) or np.isnan(point.cost):
            continue
        if value <= limit and (best is None or point.cost < best.cost):
            best = point
    if best is None:
        return float("inf"), None
    return best.cost, best


def pareto_filter(frontier, measure):
    """Non-dominated points in (unfairness, cost) space for one measure.

    A point is dominated when another point is no worse in both
    coordinates and better in at least one.  NaN points are dropped.
    Output is sorted by unfairness then cost.
    """
    valid = [
        p
        for p in frontier
        if not (np.isnan(p.measure(measure)) or np.isnan(p.cost))
    ]
    kept = []
    for p in valid:
        dominated = any(
            q.measure(measure) <= p.measure(measure)
            and q.cost <= p.cost
            and (q.measure(measure) < p.measure(measure) or q.cost < p.cost)
            for q in valid
        )
        if not dominated:
            kept.append(p)
    kept.sort(key=lambda p: (p.measure(measure), p.cost))
    return kept


@dataclass
class ImprovementCheck:
    """Whether each commodity's flow touches a globally minimum-latency path."""

    per_commodity: list
    all_commodities: bool


def improvement_condition(inst, flow, theta=DEFAULT_USED_THRESHOLD, rel_tol=1e-6):
    """Sufficient condition for the average-constrained optimum to beat the
    loaded-constrained one strictly (unless the flow is already optimal).

    For each commodity, checks that some theta-used path attains (within
    ``rel_tol`` relatively) the minimum latency over *all* of the
    commodity's paths at the current loads.
    """
    check_feasible(inst, flow)
    edge_flows = aggregate_edge_flows(inst, flow)
    latency = inst.edge_latencies(edge_flows)
    flags = []
    for i in range(inst.num_commodities):
        best = _min_path_latency(inst, latency, i)
        min_used = min(
            sum(latency[eid] for eid in p.edges) for p in used_paths(inst, flow, i, theta)
        )
        flags.append(bool(min_used <= best * (1.0 + rel_tol) + 1e-12))
    return ImprovementCheck(per_commodity=flags, all_commodities=all(flags))


def _min_path_latency(inst, latency, commodity):
    from .assignment import _reconstruct, _shortest_path_tree

    com = inst.commodities[commodity]
    dist, _ = _shortest_path_tree(inst.num_nodes, inst.out_edges, latency.tolist(), com.source)
    value = dist[com.sink]
    if value == float("inf"):
        raise StructureError(f"sink {com.sink} unreachable from {com.source}")
    return value


def parallel_link_check(inst, flow, theta=DEFAULT_USED_THRESHOLD, tol=1e-6):
    """Used-link prefix property on a parallel-link instance.

    On two-node single-commodity networks, any constrained optimum loads
    a prefix of the links sorted by free-flow latency: every used link's
    loaded latency is at most every idle link's free-flow latency.
    Checks that with additive tolerance ``tol``.
    """
    if inst.num_commodities != 1:
        raise StructureError("parallel-link check needs a single-commodity instance")
    com = inst.commodities[0]
    for eid, e in enumerate(inst.edges):
        if e.tail != com.source or e.head != com.sink:
            raise StructureError(f"edge {eid} is not a direct source-sink link")
    check_feasible(inst, flow)
    edge_flows = aggregate_edge_flows(inst, flow)
    latency = inst.edge_latencies(edge_flows)
    used = {p.edges[0] for p in used_paths(inst, flow, 0, theta)}
    idle = [eid for eid in range(inst.num_edges) if eid not in used]
    if not idle:
        return True
    max_used = max(latency[eid] for eid in used)
    min_idle_free = min(inst.edges[eid].latency.evaluate(0.0) for eid in idle)
    return bool(max_used <= min_idle_free + tol)
