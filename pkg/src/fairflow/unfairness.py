"""The three unfairness measures of a path flow.

For each commodity, with latencies taken over its theta-used paths:

* loaded unfairness: max used-path latency over min used-path latency;
* average unfairness: commodity cost over (rate times min used-path
  latency), i.e. the mean experienced latency relative to the luckiest
  user's;
* user-equilibrium unfairness: max used-path latency over the
  commodity's equilibrium latency.

Ratios follow the 0/0 := 1 convention (an all-zero-latency flow is
totally fair); a positive numerator over a zero denominator yields the
+inf sentinel so that results stay orderable.  Instance-level values
aggregate by max over commodities; the mean aggregate is also reported
as a secondary view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import NashBaseline
from .errors import StructureError
from .latency import polynomial_degree
from .network import (
    DEFAULT_USED_THRESHOLD,
    check_feasible,
    aggregate_edge_flows,
    used_paths,
)

__all__ = [
    "MeasureValues",
    "UnfairnessReport",
    "BoundCheck",
    "loaded",
    "average",
    "ue",
    "report",
    "bound_check",
    "instance_degree",
]


def _ratio(num, den):
    if den == 0.0:
        return 1.0 if num == 0.0 else float("inf")
    return num / den


@dataclass
class MeasureValues:
    """One measure: per-commodity values plus max and mean aggregates."""

    per_commodity: np.ndarray
    aggregate: float
    mean: float

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values, float(np.max(values)), float(np.mean(values)))


def _used_latency_stats(inst, flow, theta):
    """Min/max used-path latency and commodity cost, per commodity."""
    edge_flows = aggregate_edge_flows(inst, flow)
    latency = inst.edge_latencies(edge_flows)
    k = inst.num_commodities
    lo = np.empty(k)
    hi = np.empty(k)
    cost = np.zeros(k)
    for path, value in flow.items():
        if value > 0:
            cost[path.commodity] += value * sum(latency[eid] for eid in path.edges)
    for i in range(k):
        values = [sum(latency[eid] for eid in p.edges) for p in used_paths(inst, flow, i, theta)]
        if not values:
            raise StructureError(f"commodity {i} has no used path at threshold {theta}")
        lo[i] = min(values)
        hi[i] = max(values)
    return lo, hi, cost


def loaded(inst, flow, theta=DEFAULT_USED_THRESHOLD):
    """Loaded unfairness: worst latency ratio between two used paths."""
    check_feasible(inst, flow)
    lo, hi, _ = _used_latency_stats(inst, flow, theta)
    return MeasureValues.from_values([_ratio(hi[i], lo[i]) for i in range(inst.num_commodities)])


def average(inst, flow, theta=DEFAULT_USED_THRESHOLD):
    """Average unfairness: mean experienced latency over the best used path's."""
    check_feasible(inst, flow)
    lo, _, cost = _used_latency_stats(inst, flow, theta)
    return MeasureValues.from_values(
        [
            _ratio(cost[i], inst.commodities[i].rate * lo[i])
            for i in range(inst.num_commodities)
        ]
    )


def ue(inst, flow, baseline, theta=DEFAULT_USED_THRESHOLD):
    """UE unfairness: worst used-path latency over the equilibrium latency.

    ``baseline`` is the per-commodity equilibrium latency vector (or a
    :class:`~fairflow.assignment.NashBaseline`) computed on the same
    instance.
    """
    if baseline is None:
        raise StructureError("UE unfairness needs a Nash baseline")
    if isinstance(baseline, NashBaseline):
        baseline = baseline.latencies
    baseline = np.asarray(baseline, dtype=float)
    if baseline.shape != (inst.num_commodities,):
        raise StructureError(
            f"baseline shape {baseline.shape} does not match {inst.num_commodities} commodities"
        )
    check_feasible(inst, flow)
    _, hi, _ = _used_latency_stats(inst, flow, theta)
    return MeasureValues.from_values([_ratio(hi[i], baseline[i]) for i in range(inst.num_commodities)])


@dataclass
class UnfairnessReport:
    """All three measures of one flow, with the ingredients they used."""

    loaded: MeasureValues
    average: MeasureValues
    ue: MeasureValues
    min_used_latency: np.ndarray
    max_used_latency: np.ndarray
    baseline: np.ndarray
    theta: float

    def rows(self):
        """Per-commodity rows for CSV/JSON export."""
        out = []
        for i in range(len(self.min_used_latency)):
            out.append(
                {
                    "commodity": i,
                    "u_loaded": float(self.loaded.per_commodity[i]),
                    "u_average": float(self.average.per_commodity[i]),
                    "u_ue": float(self.ue.per_commodity[i]),
                    "min_used_latency": float(self.min_used_latency[i]),
                    "max_used_latency": float(self.max_used_latency[i]),
                }
            )
        return out


def report(inst, flow, baseline, theta=DEFAULT_USED_THRESHOLD):
    """Evaluate all three measures of ``flow`` at once."""
    check_feasible(inst, flow)
    if isinstance(baseline, NashBaseline):
        baseline = baseline.latencies
    baseline = np.asarray(baseline, dtype=float)
    lo, hi, cost = _used_latency_stats(inst, flow, theta)
    k = inst.num_commodities
    return UnfairnessReport(
        loaded=MeasureValues.from_values([_ratio(hi[i], lo[i]) for i in range(k)]),
        average=MeasureValues.from_values(
            [_ratio(cost[i], inst.commodities[i].rate * lo[i]) for i in range(k)]
        ),
        ue=MeasureValues.from_values([_ratio(hi[i], baseline[i]) for i in range(k)]),
        min_used_latency=lo,
        max_used_latency=hi,
        baseline=baseline,
        theta=theta,
    )


def instance_degree(inst):
    """Max polynomial degree of the instance's latency functions."""
    return max(polynomial_degree(e.latency) for e in inst.edges)


@dataclass
class BoundCheck:
    """Comparison of the three measures against the class-level bound.

    For polynomial latencies of degree at most ``degree`` with
    nonnegative coefficients, each measure of a system-optimal flow is
    at most ``degree + 1``; ``slack`` absorbs solver tolerance.  Margins
    are ``bound + slack - value``; the check never raises, it reports.
    """

    degree: int
    bound: float
    slack: float
    values: dict
    margins: dict
    ok: bool


def bound_check(inst, flow, degree=None, baseline=None, theta=DEFAULT_USED_THRESHOLD,
                slack=1e-3, gap_tol=1e-8):
    """Check the three measures of ``flow`` against the degree bound.

    ``degree`` defaults to the instance's actual polynomial degree.  The
    UE measure needs an equilibrium baseline; one is computed here when
    not supplied.
    """
    if degree is None:
        degree = instance_degree(inst)
    if baseline is None:
        from .assignment import nash_baseline

        baseline = nash_baseline(inst, gap_tol=gap_tol, theta=theta)
    rep = report(inst, flow, baseline, theta)
    bound = float(degree + 1)
    values = {
        "loaded": rep.loaded.aggregate,
        "average": rep.average.aggregate,
        "ue": rep.ue.aggregate,
    }
    margins = {k: bound + slack - v for k, v in values.items()}
    return BoundCheck(
        degree=degree,
        bound=bound,
        slack=slack,
        values=values,
        margins=margins,
        ok=all(m >= 0 for m in margins.values()),
    )
