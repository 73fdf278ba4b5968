"""fairflow: routing-game flows and the price of making them fair.

Builds multi-commodity routing instances (analytic fixtures or TNTP
benchmark files), solves for Nash, system-optimal, and interpolated
flows with a path-tracking Frank-Wolfe solver, evaluates the loaded,
average, and user-equilibrium unfairness of any path decomposition, and
traces the fairness-efficiency frontier behind constrained-system-
optimum queries.
"""

from .assignment import (
    NashBaseline,
    Objective,
    SolveOptions,
    SolveResult,
    edge_costs,
    nash_baseline,
    objective_value,
    shortest_path,
    solve,
)
from .cso import (
    CsoQuery,
    FrontierPoint,
    alpha_grid,
    cso_cost,
    frontier_point,
    improvement_condition,
    parallel_link_check,
    pareto_filter,
    sweep,
)
from .errors import (
    DomainError,
    FairflowError,
    FeasibilityError,
    ParseError,
    StructureError,
)
from .fixtures import (
    FixtureOracle,
    braess,
    fixture,
    fixture_names,
    multi_commodity,
    pigou,
    pigou_series,
    random_parallel_links,
)
from .latency import (
    BPR,
    Affine,
    Constant,
    LatencyFn,
    Monomial,
    Polynomial,
    latency_from_dict,
    polynomial_degree,
)
from .network import (
    Commodity,
    Edge,
    Instance,
    Path,
    PathFlow,
    aggregate_edge_flows,
    check_feasible,
    commodity_cost,
    path_latency,
    total_cost,
    used_paths,
)
from .tntp_io import (
    build_instance,
    dump_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    parse_net,
    parse_trips,
    read_path_flow_csv,
    write_path_flow_csv,
)
from .unfairness import (
    BoundCheck,
    MeasureValues,
    UnfairnessReport,
    average,
    bound_check,
    instance_degree,
    loaded,
    report,
    ue,
)

__version__ = "0.1.0"
