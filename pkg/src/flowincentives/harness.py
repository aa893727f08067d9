"""Experiment pipeline: scenarios, cohorts, solver runs, reports, oracle.

A scenario bundles a road network, per-OD driver demand by entrance time,
the incentive menu and choice coefficients, and run parameters. Only
first-interval drivers inside the penetration cohort are decision
variables; everyone else (later entrants and non-selected drivers) is held
at the no-incentive distribution and folded into a fixed background volume.

Realized travel time is always evaluated with the original link capacities,
whatever capacity multiplier the linear model used internally.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .admm import AdmmConfig, AdmmProblem, round_assignment, run_admm
from .choice import ChoiceCoefficients, IncentiveMenu, build_choice_matrix
from .errors import InfeasibleModelError, InputError, OracleSizeError
from .flow import (
    assignment_columns,
    build_demand_model,
    build_location_matrix,
    compose_a,
    total_travel_time,
    value_of_saved_time,
    zero_offer_column,
    DEFAULT_VALUE_OF_TIME,
)
from .network import (
    RoadNetwork,
    bpr_travel_time,
    enumerate_routes,
    network_from_json,
    network_to_json,
)
from .scenario1 import Scenario1Config, build_scenario1, solve_scenario1

ORACLE_LIMIT = 10_000_000


@dataclass
class Scenario:
    """A complete experiment input; serializable to a single JSON file."""

    net: RoadNetwork
    od_pairs: list  # (origin, destination)
    demand: list  # (od_index, entrance_time, count), entrance 1-based
    horizon: int
    unit_length_hours: float
    menu: IncentiveMenu
    coeffs: ChoiceCoefficients = field(default_factory=ChoiceCoefficients)
    penetration_rate: float = 1.0
    seed: int = 0
    background_volume: np.ndarray = None
    vot: float = DEFAULT_VALUE_OF_TIME
    congested_estimates: bool = False  # advertise congested times in offers
    name: str = ""

    def __post_init__(self):
        if self.horizon < 1 or self.unit_length_hours <= 0:
            raise InputError("horizon and unit length must be positive")
        if not 0 < self.penetration_rate <= 1:
            raise InputError("penetration rate must lie in (0, 1]")
        for od_index, entrance, count in self.demand:
            if not 0 <= od_index < len(self.od_pairs):
                raise InputError(f"demand references unknown OD pair {od_index}")
            if not 1 <= entrance <= self.horizon:
                raise InputError("entrance time must fall inside the horizon")
            if count < 0:
                raise InputError("demand counts must be nonnegative")
        if self.background_volume is not None:
            bg = np.asarray(self.background_volume, dtype=float)
            if bg.shape != (self.net.num_links * self.horizon,):
                raise InputError("background volume must have E * horizon entries")
            self.background_volume = bg

    @property
    def total_drivers(self):
        return sum(count for _, _, count in self.demand)


def scenario_to_json(scenario):
    obj = {
        "name": scenario.name,
        "network": network_to_json(
            scenario.net,
            [
                (o, d, sum(c for k, t, c in scenario.demand if k == i and t == 1))
                for i, (o, d) in enumerate(scenario.od_pairs)
            ],
        ),
        "horizon": scenario.horizon,
        "unit_length_hours": scenario.unit_length_hours,
        "demand": [
            {
                "origin": scenario.od_pairs[k][0],
                "destination": scenario.od_pairs[k][1],
                "count": c,
                "entrance_time": t,
            }
            for (k, t, c) in scenario.demand
        ],
        "penetration_rate": scenario.penetration_rate,
        "seed": scenario.seed,
        "choice": {
            "theta_tt": scenario.coeffs.theta_tt,
            "theta_inc": scenario.coeffs.theta_inc,
            "incentive_amounts": list(scenario.menu.amounts),
            "congested_estimates": scenario.congested_estimates,
        },
        "vot": scenario.vot,
    }
    if scenario.background_volume is not None:
        obj["background_volume"] = list(scenario.background_volume)
    return obj


def scenario_from_json(obj):
    net, od_rows = network_from_json(obj["network"])
    od_pairs = [(o, d) for (o, d, _) in od_rows]
    od_index = {pair: i for i, pair in enumerate(od_pairs)}
    if "demand" in obj and obj["demand"]:
        demand = []
        for entry in obj["demand"]:
            pair = (entry["origin"], entry["destination"])
            if pair not in od_index:
                raise InputError(f"demand entry references unknown OD pair {pair}")
            demand.append((od_index[pair], int(entry.get("entrance_time", 1)), int(entry["count"])))
    else:
        demand = [(i, 1, n) for i, (_, _, n) in enumerate(od_rows) if n > 0]
    choice = obj.get("choice", {})
    menu = IncentiveMenu(tuple(choice.get("incentive_amounts", (0.0, 2.0, 10.0))))
    coeffs = ChoiceCoefficients(
        theta_tt=float(choice.get("theta_tt", -0.086)),
        theta_inc=float(choice.get("theta_inc", 0.7)),
    )
    return Scenario(
        net=net,
        od_pairs=od_pairs,
        demand=sorted(demand, key=lambda e: (e[1], e[0])),
        horizon=int(obj["horizon"]),
        unit_length_hours=float(obj["unit_length_hours"]),
        menu=menu,
        coeffs=coeffs,
        penetration_rate=float(obj.get("penetration_rate", 1.0)),
        seed=int(obj.get("seed", 0)),
        background_volume=obj.get("background_volume"),
        vot=float(obj.get("vot", DEFAULT_VALUE_OF_TIME)),
        congested_estimates=bool(choice.get("congested_estimates", False)),
        name=obj.get("name", ""),
    )


def save_scenario(scenario, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_json(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path):
    with open(path) as fh:
        return scenario_from_json(json.load(fh))


def appendix_c_scenario():
    """The three-link worked example: two parallel upstream links, one shared
    downstream link, one OD pair with two drivers and a {$0, $5} menu."""
    from .network import Link

    net = RoadNetwork(
        nodes=("v1", "v2", "v3"),
        links=(
            Link(0, "v1", "v2", 0.1, 100.0, 5.0),
            Link(1, "v1", "v2", 0.2, 100.0, 10.0),
            Link(2, "v2", "v3", 0.1, 100.0, 5.0),
        ),
    )
    return Scenario(
        net=net,
        od_pairs=[("v1", "v3")],
        demand=[(0, 1, 2)],
        horizon=3,
        unit_length_hours=0.2,
        menu=IncentiveMenu((0.0, 5.0)),
        name="appendix-c",
    )


def generate_synthetic(
    nodes=12,
    richness=2,
    tightness=1.0,
    drivers=24,
    seed=0,
    horizon=2,
    unit_length_hours=0.2,
    menu_amounts=(0.0, 2.0, 10.0),
    multi_route_fraction=1.0,
    later_fraction=0.0,
    detour_capacity_factor=1.0,
):
    """Deterministic synthetic scenario with parallel route alternatives.

    Each OD pair gets a direct link plus ``richness - 1`` two-link detours;
    only the first ``multi_route_fraction`` share of OD pairs receives the
    detours. ``tightness`` is the ratio of an even per-route driver share to
    link capacity, so values above 1 congest links at the no-incentive
    baseline; ``detour_capacity_factor`` scales the detour links' capacity
    relative to that rule, letting congested instances keep roomy
    alternatives. ``later_fraction`` of each pair's drivers enters at time 2
    and is never incentivized.
    """
    from .network import Link

    if richness < 1:
        raise InputError("richness must be at least 1")
    rng = np.random.default_rng(seed)
    nodes_per_od = 2 + (richness - 1)
    n_od = max(1, nodes // nodes_per_od)
    node_names = []
    links = []
    od_pairs = []
    n_multi = int(np.ceil(multi_route_fraction * n_od))
    for k in range(n_od):
        origin, dest = f"o{k}", f"d{k}"
        node_names += [origin, dest]
        od_pairs.append((origin, dest))
        t0_direct = float(rng.uniform(0.08, 0.18))
        links.append((origin, dest, t0_direct, False))
        if k < n_multi:
            for j in range(richness - 1):
                mid = f"m{k}_{j}"
                node_names.append(mid)
                total = t0_direct * float(rng.uniform(1.15, 1.6))
                split = float(rng.uniform(0.35, 0.65))
                links.append((origin, mid, total * split, True))
                links.append((mid, dest, total * (1.0 - split), True))
    per_od = drivers // n_od
    extra = drivers - per_od * n_od
    counts = [per_od + (1 if k < extra else 0) for k in range(n_od)]
    demand = []
    for k, count in enumerate(counts):
        later = int(round(later_fraction * count))
        if count - later > 0:
            demand.append((k, 1, count - later))
        if later > 0 and horizon >= 2:
            demand.append((k, 2, later))
    link_objs = []
    for lid, (tail, head, t0, is_detour) in enumerate(links):
        od_k = int(tail[1:].split("_")[0])  # node names are o<k>, d<k>, m<k>_<j>
        share = counts[od_k] / max(richness, 1)
        capacity = max(0.5, share / tightness) * float(rng.uniform(0.9, 1.1))
        if is_detour:
            capacity *= detour_capacity_factor
        link_objs.append(Link(lid, tail, head, round(t0, 6), round(capacity, 6), round(t0 * 50.0, 6)))
    net = RoadNetwork(nodes=tuple(node_names), links=tuple(link_objs))
    return Scenario(
        net=net,
        od_pairs=od_pairs,
        demand=sorted(demand, key=lambda e: (e[1], e[0])),
        horizon=horizon,
        unit_length_hours=unit_length_hours,
        menu=IncentiveMenu(tuple(menu_amounts)),
        seed=seed,
        name=f"synthetic-{seed}",
    )


def congested_route_estimates(scenario, routes):
    """Route travel-time estimates under the no-incentive traffic pattern.

    One pass, no equilibrium loop: put every driver on the no-incentive
    distribution at free-flow times, convert the resulting per-(time, link)
    volumes to congested link times, average each link over the horizon, and
    sum along routes. Off by default; the estimates drivers see are
    free-flow unless the scenario opts in.
    """
    net = scenario.net
    tt_free = np.array([r.free_flow_time for r in routes.routes])
    probabilities = build_choice_matrix(routes, scenario.menu, tt_free, scenario.coeffs)
    volume = np.zeros(net.num_links * scenario.horizon)
    if scenario.background_volume is not None:
        volume = volume + scenario.background_volume
    location_cache = {}
    for od_index, entrance, count in scenario.demand:
        if entrance not in location_cache:
            location_cache[entrance] = build_location_matrix(
                net, routes, scenario.horizon, scenario.unit_length_hours, entrance_time=entrance
            )
        col = zero_offer_column(routes, scenario.menu, od_index)
        volume = volume + count * (location_cache[entrance].matrix @ probabilities.matrix[:, col])
    t0_row = np.tile(net.free_flow_times, scenario.horizon)
    w_row = np.tile(net.capacity_vector, scenario.horizon)
    link_time = bpr_travel_time(t0_row, w_row, volume).reshape(scenario.horizon, net.num_links)
    mean_link_time = link_time.mean(axis=0)
    return np.array([float(route.incidence @ mean_link_time) for route in routes.routes])


def select_cohort(driver_ids, penetration, seed):
    """Deterministic uniform sample: a prefix of one seeded permutation.

    Because the permutation depends only on the seed, cohorts are nested
    across penetration rates: cohort(seed, p1) is a subset of
    cohort(seed, p2) whenever p1 <= p2.
    """
    if not 0 < penetration <= 1:
        raise InputError("penetration must lie in (0, 1]")
    ids = list(driver_ids)
    take = int(np.floor(penetration * len(ids)))
    perm = np.random.default_rng(seed).permutation(len(ids))
    return sorted(ids[i] for i in perm[:take])


@dataclass
class Pipeline:
    """Everything derived from a scenario that solvers and metrics need."""

    scenario: Scenario
    routes: object
    probabilities: object
    location: object
    a_matrix: np.ndarray
    demand: object  # DemandModel over eligible drivers
    columns: list
    costs: np.ndarray
    eligible_ids: list
    driver_ods: list  # (od_index, entrance) per driver id
    background: np.ndarray
    t0_row: np.ndarray
    w_row: np.ndarray
    free_flow_cost: np.ndarray


def prepare(scenario, penetration=None, seed=None, max_routes=4):
    """Build routes, matrices, the eligible cohort and the background load."""
    pen = scenario.penetration_rate if penetration is None else penetration
    seed = scenario.seed if seed is None else seed
    net = scenario.net
    routes = enumerate_routes(net, scenario.od_pairs, max_routes)
    tt_hat = np.array([r.free_flow_time for r in routes.routes])
    if scenario.congested_estimates:
        tt_hat = congested_route_estimates(scenario, routes)
    probabilities = build_choice_matrix(routes, scenario.menu, tt_hat, scenario.coeffs)
    location = build_location_matrix(
        net, routes, scenario.horizon, scenario.unit_length_hours, entrance_time=1
    )
    a_matrix = compose_a(location, probabilities)

    driver_ods = []
    for od_index, entrance, count in sorted(scenario.demand, key=lambda e: (e[1], e[0])):
        driver_ods.extend([(od_index, entrance)] * count)
    first_ids = [i for i, (_, t) in enumerate(driver_ods) if t == 1]
    eligible = select_cohort(first_ids, pen, seed)
    eligible_set = set(eligible)

    n_inc = len(scenario.menu)
    zero_col = {
        k: zero_offer_column(routes, scenario.menu, k) for k in range(len(scenario.od_pairs))
    }
    n_rows = a_matrix.shape[0]
    background = np.zeros(n_rows)
    if scenario.background_volume is not None:
        background = background + scenario.background_volume
    location_cache = {1: location}
    for i, (od_index, entrance) in enumerate(driver_ods):
        if i in eligible_set:
            continue
        if entrance not in location_cache:
            location_cache[entrance] = build_location_matrix(
                net, routes, scenario.horizon, scenario.unit_length_hours, entrance_time=entrance
            )
        loc = location_cache[entrance]
        background = background + loc.matrix @ probabilities.matrix[:, zero_col[od_index]]

    demand = build_demand_model(
        routes, scenario.menu, [driver_ods[i][0] for i in eligible]
    )
    columns = assignment_columns(routes, scenario.menu, demand.driver_to_od)
    menu_costs = scenario.menu.costs
    costs = np.array([menu_costs[col % n_inc] for col in range(a_matrix.shape[1])])
    t0_row = np.tile(net.free_flow_times, scenario.horizon)
    w_row = np.tile(net.capacity_vector, scenario.horizon)
    omega = np.tile(net.free_flow_times, scenario.horizon)
    return Pipeline(
        scenario=scenario,
        routes=routes,
        probabilities=probabilities,
        location=location,
        a_matrix=a_matrix,
        demand=demand,
        columns=columns,
        costs=costs,
        eligible_ids=eligible,
        driver_ods=driver_ods,
        background=background,
        t0_row=t0_row,
        w_row=w_row,
        free_flow_cost=a_matrix.T @ omega,
    )


def zero_assignment(pipe):
    """Every eligible driver on the $0 column of their pair's first route."""
    s_mat = np.zeros((pipe.a_matrix.shape[1], pipe.demand.num_drivers))
    for n, od in enumerate(pipe.demand.driver_to_od):
        s_mat[zero_offer_column(pipe.routes, pipe.scenario.menu, od), n] = 1.0
    return s_mat


def realized_travel_time(pipe, s_mat):
    """Total vehicle-hours at the ORIGINAL capacities for an assignment."""
    v = pipe.a_matrix @ s_mat.sum(axis=1) + pipe.background
    return total_travel_time(v, pipe.scenario.net)


@dataclass
class ExperimentOutcome:
    """Report plus the artifacts behind it, for callers that need them."""

    report: "ExperimentReport"
    assignment: np.ndarray
    pipeline: Pipeline
    admm_result: object = None


@dataclass
class ExperimentReport:
    model: str
    budget: float
    cost_used: float
    pct_rewarded_drivers: float
    avg_incentive_rewarded: float
    baseline_tt_hours: float
    achieved_tt_hours: float
    pct_reduction: float
    value_of_saved_time: float
    incentive_distribution: dict
    penetration_rate: float
    seed: int
    wall_time_s: float
    extra: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "model": self.model,
            "budget": self.budget,
            "cost_used": self.cost_used,
            "pct_rewarded_drivers": self.pct_rewarded_drivers,
            "avg_incentive_rewarded": self.avg_incentive_rewarded,
            "baseline_tt_hours": self.baseline_tt_hours,
            "achieved_tt_hours": self.achieved_tt_hours,
            "pct_reduction": self.pct_reduction,
            "value_of_saved_time": self.value_of_saved_time,
            "incentive_distribution": {str(k): v for k, v in self.incentive_distribution.items()},
            "penetration_rate": self.penetration_rate,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
            "extra": self.extra,
        }


CSV_COLUMNS = (
    "model",
    "budget",
    "penetration_rate",
    "seed",
    "cost_used",
    "pct_rewarded_drivers",
    "avg_incentive_rewarded",
    "baseline_tt_hours",
    "achieved_tt_hours",
    "pct_reduction",
    "value_of_saved_time",
    "incentive_distribution",
)


def report_csv_row(report):
    """Stable text row; excludes wall time so reruns are byte-identical."""
    dist = ";".join(
        f"{amount:.10g}:{count}" for amount, count in sorted(report.incentive_distribution.items())
    )
    values = (
        report.model,
        f"{report.budget:.10g}",
        f"{report.penetration_rate:.10g}",
        str(report.seed),
        f"{report.cost_used:.10g}",
        f"{report.pct_rewarded_drivers:.10g}",
        f"{report.avg_incentive_rewarded:.10g}",
        f"{report.baseline_tt_hours:.10g}",
        f"{report.achieved_tt_hours:.10g}",
        f"{report.pct_reduction:.10g}",
        f"{report.value_of_saved_time:.10g}",
        dist,
    )
    return ",".join(values)


def _distribution(pipe, s_mat):
    """Offer counts per amount over every driver in the scenario."""
    menu = pipe.scenario.menu
    n_inc = len(menu)
    counts = {amount: 0 for amount in menu.amounts}
    counts[0.0] = len(pipe.driver_ods) - pipe.demand.num_drivers
    for col in np.nonzero(s_mat.sum(axis=1))[0]:
        counts[menu.amounts[col % n_inc]] += int(round(s_mat[col].sum()))
    return counts


def solve_linear(pipe, budget, alpha=1.0, rel_gap=0.01, alpha_retry=True, max_doublings=20):
    """Build and solve the free-flow MILP, doubling alpha on infeasibility."""
    retries = 0
    current = alpha
    while True:
        cfg = Scenario1Config(budget=budget, alpha=current, rel_gap=rel_gap)
        model = build_scenario1(
            pipe.routes,
            pipe.probabilities,
            pipe.location,
            pipe.demand,
            pipe.scenario.net,
            cfg,
            background=pipe.background,
            columns=pipe.columns,
        )
        try:
            report = solve_scenario1(model, pipe.scenario.menu, pipe.a_matrix, rel_gap=rel_gap)
            return report, current, retries
        except InfeasibleModelError:
            if not alpha_retry or retries >= max_doublings:
                raise
            current *= 2.0
            retries += 1


def solve_admm_model(
    pipe,
    budget,
    rho=1.0,
    lambda_reg=0.5,
    max_iters=5000,
    tol=1e-4,
    seed=None,
    round_gap=0.0,
    restarts=None,
):
    """Relaxation plus rounding; returns (binary S, selected run, diagnostics).

    With the binary-forcing regularizer on, the problem is nonconvex and a
    single run can settle on a poor locally-binary point, so the solver runs
    a small deterministic restart ladder: the configured rho first, then
    perturbed-start runs at a penalty just above the regularizer weight
    (where binarization is strongest). Every candidate is rounded and scored
    by the model's own realized travel time; the best rounded assignment
    wins, ties going to the earliest run. Convex runs (lambda_reg = 0) have
    a unique optimum and use a single start.
    """
    seed = pipe.scenario.seed if seed is None else seed
    problem = AdmmProblem(
        a_matrix=pipe.a_matrix,
        d_matrix=pipe.demand.d_matrix,
        costs=pipe.costs,
        q=pipe.demand.q,
        budget=budget,
        t0_row=pipe.t0_row,
        w_row=pipe.w_row,
        columns=pipe.columns,
        background=pipe.background,
    )
    if restarts is None:
        restarts = 4 if lambda_reg > 0 else 1
    ladder = [(rho, seed, 0.0)]
    alt_rho = lambda_reg + 0.05 if lambda_reg > 0 else rho
    for k in range(restarts - 1):
        ladder.append((alt_rho, seed + 1000 * k, 0.05))
    best = None
    scores = []
    for run_rho, run_seed, jitter in ladder:
        cfg = AdmmConfig(
            rho=run_rho,
            lambda_reg=lambda_reg,
            max_iters=max_iters,
            residual_tol=tol,
            seed=run_seed,
            init_jitter=jitter,
        )
        result = run_admm(problem, cfg)
        s_mat = round_assignment(result.u, pipe.demand, pipe.costs, budget, rel_gap=round_gap)
        realized = realized_travel_time(pipe, s_mat)
        scores.append(realized)
        if best is None or realized < best[0] - 1e-12:
            best = (realized, s_mat, result)
    _, s_mat, result = best
    return s_mat, result, scores


def run_experiment(
    scenario,
    model,
    budget,
    penetration=None,
    seed=None,
    alpha=1.0,
    alpha_retry=True,
    rel_gap=0.01,
    rho=1.0,
    lambda_reg=0.5,
    max_iters=5000,
    tol=1e-4,
    vot=None,
    round_gap=0.0,
    restarts=None,
):
    """End-to-end run: prepare, solve, evaluate realized travel time, report."""
    started = time.perf_counter()
    vot = scenario.vot if vot is None else vot
    pen = scenario.penetration_rate if penetration is None else penetration
    run_seed = scenario.seed if seed is None else seed
    pipe = prepare(scenario, penetration=pen, seed=run_seed)
    baseline_s = zero_assignment(pipe)
    baseline_tt = realized_travel_time(pipe, baseline_s)

    extra = {}
    if pipe.demand.num_drivers == 0:
        s_mat = baseline_s
        extra["note"] = "no eligible drivers; baseline assignment"
    elif model == "linear":
        report1, alpha_used, retries = solve_linear(
            pipe, budget, alpha=alpha, rel_gap=rel_gap, alpha_retry=alpha_retry
        )
        s_mat = report1.assignment
        extra.update(
            {
                "alpha_used": alpha_used,
                "alpha_retries": retries,
                "mip_status": report1.status,
                "mip_gap": report1.gap,
                "expected_free_flow_hours": report1.objective,
            }
        )
    elif model == "admm":
        s_mat, result, restart_scores = solve_admm_model(
            pipe,
            budget,
            rho=rho,
            lambda_reg=lambda_reg,
            max_iters=max_iters,
            tol=tol,
            seed=run_seed,
            round_gap=round_gap,
            restarts=restarts,
        )
        extra.update(
            {
                "iterations": result.iterations,
                "converged": result.converged,
                "final_residuals": [float(v) for v in result.residuals[-1]],
                "relaxed_objective": float(result.objectives[-1]),
                "restart_objectives": [float(v) for v in restart_scores],
            }
        )
        extra["residual_trace"] = result
    else:
        raise InputError(f"unknown model {model!r}; expected 'linear' or 'admm'")

    achieved_tt = realized_travel_time(pipe, s_mat)
    cost_used = float(pipe.costs @ s_mat.sum(axis=1))
    rewarded = int(round(s_mat[pipe.costs > 0].sum()))
    total = len(pipe.driver_ods)
    dist = _distribution(pipe, s_mat)
    trace = extra.pop("residual_trace", None)
    report = ExperimentReport(
        model=model,
        budget=budget,
        cost_used=cost_used,
        pct_rewarded_drivers=100.0 * rewarded / total if total else 0.0,
        avg_incentive_rewarded=cost_used / rewarded if rewarded else 0.0,
        baseline_tt_hours=baseline_tt,
        achieved_tt_hours=achieved_tt,
        pct_reduction=100.0 * (baseline_tt - achieved_tt) / baseline_tt if baseline_tt else 0.0,
        value_of_saved_time=value_of_saved_time(baseline_tt, achieved_tt, vot),
        incentive_distribution=dist,
        penetration_rate=pen,
        seed=run_seed,
        wall_time_s=time.perf_counter() - started,
        extra=extra,
    )
    return ExperimentOutcome(report=report, assignment=s_mat, pipeline=pipe, admm_result=trace)


@dataclass
class OracleResult:
    assignment: np.ndarray
    objective: float
    feasible_count: int


def brute_force_oracle(
    scenario,
    budget,
    objective="bpr",
    alpha=None,
    penetration=None,
    seed=None,
    limit=ORACLE_LIMIT,
    pipe=None,
):
    """Exhaustive search over all feasible binary assignments.

    ``objective`` selects what is minimized: realized total travel time
    ("bpr", no capacity rows, matching the congestion-aware model) or
    expected free-flow time with optional alpha-scaled capacity rows
    ("free_flow", matching the linear model). Ties return the
    lexicographically smallest per-driver choice vector. Refuses instances
    whose enumeration would exceed ``limit`` assignments.
    """
    if pipe is None:
        pipe = prepare(scenario, penetration=penetration, seed=seed)
    total = 1.0
    for cols in pipe.columns:
        total *= len(cols)
    if total > limit:
        raise OracleSizeError(total, limit)
    capacity = None
    if objective == "free_flow" and alpha is not None:
        capacity = alpha * pipe.w_row
    best_obj, best_cols, count = kernels.enumerate_assignments(
        pipe.a_matrix,
        pipe.background,
        pipe.columns,
        pipe.costs,
        budget,
        objective=objective,
        free_flow_cost=pipe.free_flow_cost,
        capacity=capacity,
        t0_row=pipe.t0_row,
        w_row=pipe.w_row,
    )
    if count == 0:
        raise InfeasibleModelError("no feasible assignment under the given constraints")
    s_mat = np.zeros((pipe.a_matrix.shape[1], pipe.demand.num_drivers))
    for n, col in enumerate(best_cols):
        s_mat[int(col), n] = 1.0
    return OracleResult(assignment=s_mat, objective=float(best_obj), feasible_count=int(count))


def sweep(scenario, model, budgets, penetrations, **kwargs):
    """Run the model over a budget x penetration grid; deterministic order."""
    reports = []
    for budget in budgets:
        for pen in penetrations:
            outcome = run_experiment(scenario, model, budget, penetration=pen, **kwargs)
            reports.append(outcome.report)
    return reports


def write_reports_csv(reports, path):
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for report in reports:
            fh.write(report_csv_row(report) + "\n")


def write_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_residuals_csv(result, path):
    """Iteration trace: seven residual norms plus the relaxed objective."""
    from .admm import RESIDUAL_LABELS

    with open(path, "w") as fh:
        fh.write("iteration," + ",".join(RESIDUAL_LABELS) + ",relaxed_objective\n")
        for i, (norms, obj) in enumerate(zip(result.residuals, result.objectives), start=1):
            row = ",".join(f"{v:.10g}" for v in norms)
            fh.write(f"{i},{row},{obj:.10g}\n")
