"""Analytic benchmark instances and their closed-form oracles.

Each constructor builds a small instance together with flows and values
known in closed form (system optimum, equilibrium, costs, unfairness).
Oracle values are evaluated by direct arithmetic on the closed forms —
never by the solver — so they can certify solver output.

Also provides the seeded random parallel-link generator used by the
property suites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .latency import BPR, Affine, Constant, LatencyFn, Monomial
from .network import Commodity, Edge, Instance, Path, PathFlow

__all__ = [
    "FixtureOracle",
    "pigou",
    "pigou_series",
    "braess",
    "multi_commodity",
    "random_parallel_links",
    "fixture",
    "fixture_names",
]


@dataclass
class FixtureOracle:
    """An instance plus everything known about it in closed form.

    ``values`` maps value names to floats; ``provenance`` records, for
    each value, whether it is a published number or derived arithmetic.
    ``so_decompositions`` lists every valid path decomposition of the
    system-optimal edge flow (usually one; solver path flows are checked
    against the set).
    """

    name: str
    instance: Instance
    so_path_flow: PathFlow = None
    nash_path_flow: PathFlow = None
    so_edge_flow: np.ndarray = None
    so_decompositions: tuple = ()
    extra_flows: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def put(self, key, value, source):
        self.values[key] = float(value)
        self.provenance[key] = source


def _convention_ratio(num, den):
    # 0/0 := 1 (an all-zero-latency flow is totally fair)
    if den == 0.0:
        return 1.0 if num == 0.0 else float("inf")
    return num / den


def _pigou_so_split(latency, c, r):
    """Upper-link load of the two-link system optimum.

    Minimizes ``x * l(x) + (r - x) * c`` on [0, r]; interior solutions
    satisfy marginal(x) = c.  Closed form per family; root-finding
    fallback for the families without one.
    """
    if latency.marginal(0.0) >= c:
        return 0.0
    if latency.marginal(r) <= c:
        return r
    if isinstance(latency, Monomial):
        return (c / ((latency.degree + 1) * latency.coef)) ** (1.0 / latency.degree)
    if isinstance(latency, Affine):
        return (c - latency.b) / (2.0 * latency.a)
    return brentq(lambda x: latency.marginal(x) - c, 0.0, r, xtol=1e-15)


def _pigou_nash_split(latency, c, r):
    """Upper-link load of the two-link equilibrium: largest x with l(x) <= c."""
    if latency.evaluate(0.0) > c:
        return 0.0
    if latency.evaluate(r) <= c:
        return r
    if isinstance(latency, Monomial):
        return (c / latency.coef) ** (1.0 / latency.degree)
    if isinstance(latency, Affine):
        return (c - latency.b) / latency.a
    return brentq(lambda x: latency.evaluate(x) - c, 0.0, r, xtol=1e-15)


def pigou(latency, c, r=1.0, name="pigou"):
    """Two parallel links: ``latency`` above, constant ``c`` below.

    The workhorse lower-bound construction: steep-above instances push
    average unfairness toward its class bound, flat-above ones push UE
    unfairness instead.
    """
    if not isinstance(latency, LatencyFn):
        raise DomainError(f"latency must be a LatencyFn, got {latency!r}")
    if r <= 0:
        raise DomainError(f"rate must be positive, got {r}")
    inst = Instance(
        2,
        [Edge(0, 1, latency), Edge(0, 1, Constant(c))],
        [Commodity(0, 1, r)],
        name=name,
    )
    upper = Path(0, (0,))
    lower = Path(0, (1,))

    fx = FixtureOracle(name=name, instance=inst)

    x = _pigou_so_split(latency, c, r)
    so = PathFlow({p: v for p, v in ((upper, x), (lower, r - x)) if v > 0})
    fx.so_path_flow = so
    fx.so_edge_flow = np.array([x, r - x])
    fx.so_decompositions = (so,)
    so_cost = x * latency.evaluate(x) + (r - x) * c
    fx.put("so_upper_flow", x, "derived: first-order condition marginal(x) = c")
    fx.put("so_cost", so_cost, "derived: closed-form flow plugged into the cost")

    xn = _pigou_nash_split(latency, c, r)
    nash = PathFlow({p: v for p, v in ((upper, xn), (lower, r - xn)) if v > 0})
    fx.nash_path_flow = nash
    nash_cost = xn * latency.evaluate(xn) + (r - xn) * c
    equilibrium_latency = latency.evaluate(xn) if xn > 0 else c
    fx.put("nash_upper_flow", xn, "derived: equilibrium condition l(x) = c")
    fx.put("nash_cost", nash_cost, "derived")
    fx.put("nash_latency", equilibrium_latency, "derived")

    so_used = [latency.evaluate(x)] if x > 0 else []
    so_used += [c] if r - x > 0 else []
    lo, hi = min(so_used), max(so_used)
    fx.put("so_u_loaded", _convention_ratio(hi, lo), "derived")
    fx.put("so_u_average", _convention_ratio(so_cost, r * lo), "derived")
    fx.put("so_u_ue", _convention_ratio(hi, equilibrium_latency), "derived")
    return fx


def pigou_series(r=1.0, name="pigou-series"):
    """Two Pigou gadgets (x above, 1 below) chained in series.

    The canonical witness that unfairness is a property of the path
    decomposition: at unit demand the optimal edge flows admit one
    decomposition with loaded unfairness 2 (paths upper-upper and
    lower-lower) and another that is totally fair (the mixed paths).
    """
    if r <= 0:
        raise DomainError(f"rate must be positive, got {r}")
    inst = Instance(
        3,
        [
            Edge(0, 1, Affine(1.0, 0.0)),
            Edge(0, 1, Constant(1.0)),
            Edge(1, 2, Affine(1.0, 0.0)),
            Edge(1, 2, Constant(1.0)),
        ],
        [Commodity(0, 2, r)],
        name=name,
    )
    p1 = Path(0, (0, 2))  # x then x
    p2 = Path(0, (1, 3))  # 1 then 1
    p3 = Path(0, (0, 3))  # x then 1
    p4 = Path(0, (1, 2))  # 1 then x

    fx = FixtureOracle(name=name, instance=inst)
    x = min(r, 0.5)  # per-stage load on the x link at the optimum
    fx.so_edge_flow = np.array([x, r - x, x, r - x])
    so_cost = 2.0 * (x * x + (r - x) * 1.0)
    fx.put("so_cost", so_cost, "derived: stage-wise marginal condition 2x = 1")

    dec_a = PathFlow({p: v for p, v in ((p1, x), (p2, r - x)) if v > 0})
    fx.extra_flows["decomposition_a"] = dec_a
    decs = [dec_a]
    if r >= 2 * x:
        dec_b = PathFlow({p: v for p, v in ((p3, x), (p4, x), (p2, r - 2 * x)) if v > 0})
        fx.extra_flows["decomposition_b"] = dec_b
        decs.append(dec_b)
        lat_mixed = x + 1.0
        fx.put("b_u_loaded", 1.0 if r == 2 * x else max(2.0, lat_mixed) / min(2.0, lat_mixed), "published: the mixed decomposition is totally fair")
    fx.so_path_flow = dec_a
    fx.so_decompositions = tuple(decs)

    lat_p1 = 2.0 * x
    lat_p2 = 2.0
    fx.put("a_u_loaded", max(lat_p1, lat_p2) / min(lat_p1, lat_p2), "published: worst case for linear latencies")

    # equilibrium: each stage loads the x link up to latency 1
    xn = min(r, 1.0)
    nash = PathFlow({p: v for p, v in ((p1, xn), (p2, r - xn)) if v > 0})
    fx.nash_path_flow = nash
    nash_latency = 2.0 * max(xn, 1.0) if r >= 1.0 else 2.0 * xn
    fx.put("nash_latency", nash_latency, "derived")
    fx.put("nash_cost", xn * 2.0 * xn + (r - xn) * 2.0, "derived")
    fx.put("a_u_ue", max(lat_p1, lat_p2) / nash_latency, "derived")
    return fx


def braess(r=1.0, name="braess"):
    """The four-node Braess diamond with the zero-latency crossing edge.

    Edges: 0: s->v (x), 1: s->w (1), 2: v->t (1), 3: w->t (x),
    4: v->w (0).  Paths: P1 = (0,2), P2 = (0,4,3), P3 = (1,3).
    """
    if r <= 0:
        raise DomainError(f"rate must be positive, got {r}")
    inst = Instance(
        4,
        [
            Edge(0, 1, Affine(1.0, 0.0)),
            Edge(0, 2, Constant(1.0)),
            Edge(1, 3, Constant(1.0)),
            Edge(2, 3, Affine(1.0, 0.0)),
            Edge(1, 2, Constant(0.0)),
        ],
        [Commodity(0, 3, r)],
        name=name,
    )
    p1 = Path(0, (0, 2))
    p2 = Path(0, (0, 4, 3))
    p3 = Path(0, (1, 3))

    fx = FixtureOracle(name=name, instance=inst)

    # system optimum by regime of the demand
    if r <= 0.5:
        so = PathFlow({p2: r})
    elif r <= 1.0:
        side = r - 0.5
        so = PathFlow({p: v for p, v in ((p1, side), (p2, 1.0 - r), (p3, side)) if v > 0})
    else:
        so = PathFlow({p1: r / 2.0, p3: r / 2.0})
    fx.so_path_flow = so
    fx.so_decompositions = (so,)
    e = np.zeros(5)
    e[0] = so[p1] + so[p2]
    e[1] = so[p3]
    e[2] = so[p1]
    e[3] = so[p2] + so[p3]
    e[4] = so[p2]
    fx.so_edge_flow = e
    so_cost = e[0] ** 2 + e[1] + e[2] + e[3] ** 2
    fx.put("so_cost", so_cost, "derived: marginal equalization across used paths")

    # equilibrium by regime of the demand
    if r <= 1.0:
        nash = PathFlow({p2: r})
        nash_latency = 2.0 * r
    elif r <= 2.0:
        side = r - 1.0
        nash = PathFlow({p: v for p, v in ((p1, side), (p2, 2.0 - r), (p3, side)) if v > 0})
        nash_latency = 2.0
    else:
        nash = PathFlow({p1: r / 2.0, p3: r / 2.0})
        nash_latency = r / 2.0 + 1.0
    fx.nash_path_flow = nash
    fx.put("nash_latency", nash_latency, "derived")
    ne = np.zeros(5)
    ne[0] = nash[p1] + nash[p2]
    ne[1] = nash[p3]
    ne[2] = nash[p1]
    ne[3] = nash[p2] + nash[p3]
    fx.put("nash_cost", ne[0] ** 2 + ne[1] + ne[2] + ne[3] ** 2, "derived")

    # the small-tolerance constrained optimum concentrates on the outer paths
    fbeta = PathFlow({p1: r / 2.0, p3: r / 2.0})
    fx.extra_flows["fbeta"] = fbeta
    fbeta_lat = r / 2.0 + 1.0
    fx.put("fbeta_cost", r * fbeta_lat, "derived: both outer paths at latency r/2 + 1")
    fx.put("fbeta_u_loaded", 1.0, "derived: equal-latency decomposition")

    # the balanced outer split used by the comparison examples at r = 1
    outer = PathFlow({p1: r / 2.0, p3: r / 2.0})
    fx.extra_flows["outer_split"] = outer
    fx.put("outer_u_loaded", 1.0, "derived")
    fx.put("outer_u_ue", fbeta_lat / nash_latency, "derived")
    return fx


def multi_commodity(name="multi-commodity"):
    """Two commodities sharing a congested link.

    Nodes s1=0, s2=1, t=2.  Edges: 0: s1->t (constant 1.5),
    1: s2->t (x), 2: s1->s2 (0).  Rates 0.25 and 0.75.  The optimal flow
    sends commodity 1 on its direct edge, so its users see latency 1.5
    while at equilibrium they would see 1.0: UE unfairness 3/2 with
    loaded unfairness 1, the standard witness that the two measures are
    incomparable across commodities.
    """
    inst = Instance(
        3,
        [
            Edge(0, 2, Constant(1.5)),
            Edge(1, 2, Affine(1.0, 0.0)),
            Edge(0, 1, Constant(0.0)),
        ],
        [Commodity(0, 2, 0.25), Commodity(1, 2, 0.75)],
        name=name,
    )
    direct = Path(0, (0,))
    detour = Path(0, (2, 1))
    second = Path(1, (1,))

    fx = FixtureOracle(name=name, instance=inst)
    so = PathFlow({direct: 0.25, second: 0.75})
    fx.so_path_flow = so
    fx.so_decompositions = (so,)
    fx.so_edge_flow = np.array([0.25, 0.75, 0.0])
    fx.put("so_cost", 0.25 * 1.5 + 0.75 * 0.75, "derived")
    fx.put("so_cost_commodity_1", 0.25 * 1.5, "derived")
    fx.put("so_u_ue", 1.5 / 1.0, "published: optimal flow vs equilibrium latency 1")
    fx.put("so_u_loaded", 1.0, "published: each commodity uses a single path")

    nash = PathFlow({detour: 0.25, second: 0.75})
    fx.nash_path_flow = nash
    fx.put("nash_latency_1", 1.0, "derived: detour latency at total load 1")
    fx.put("nash_latency_2", 1.0, "derived")
    fx.put("nash_cost", 1.0 * 1.0, "derived")
    return fx


def random_parallel_links(n_links, seed, max_degree=4):
    """Seeded random two-node parallel-link instance with standard latencies.

    Every link gets a positive free-flow latency except (with one coin
    flip) the first, which may be a zero-intercept power link.  The
    demand rate is drawn from [0.5, 5].
    """
    if n_links < 2:
        raise DomainError(f"need at least 2 parallel links, got {n_links}")
    rng = np.random.default_rng(seed)
    edges = []
    for j in range(n_links):
        if j == 0 and rng.random() < 0.5:
            degree = int(rng.integers(1, max_degree + 1))
            edges.append(Edge(0, 1, Monomial(float(rng.uniform(0.5, 2.0)), degree)))
            continue
        kind = rng.random()
        if kind < 0.5:
            edges.append(Edge(0, 1, Affine(float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.1, 3.0)))))
        else:
            p = int(rng.integers(2, max_degree + 1))
            edges.append(
                Edge(
                    0,
                    1,
                    BPR(
                        xi=float(rng.uniform(0.5, 3.0)),
                        kappa=float(rng.uniform(0.5, 5.0)),
                        a=float(rng.uniform(0.05, 0.5)),
                        p=p,
                    ),
                )
            )
    rate = float(rng.uniform(0.5, 5.0))
    return Instance(2, edges, [Commodity(0, 1, rate)], name=f"parallel-{n_links}-seed{seed}")


_REGISTRY = {
    "pigou-linear": lambda: pigou(Affine(1.0, 0.0), 1.0, 1.0, name="pigou-linear"),
    "pigou-ex6": lambda: pigou(Affine(1.0, 0.0), 1.5, 1.0, name="pigou-ex6"),
    "pigou-series": lambda: pigou_series(1.0),
    "braess": lambda: braess(1.0),
    "braess-ex7": lambda: braess(0.75, name="braess-ex7"),
    "multi-commodity": multi_commodity,
}


def fixture_names():
    return sorted(_REGISTRY)


def fixture(name):
    """Look up a named fixture oracle."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise DomainError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return builder()
