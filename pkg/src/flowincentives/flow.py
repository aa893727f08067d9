"""Flow propagation: link-presence matrices, expected volumes, and metrics.

The location matrix R maps a route choice to expected link presence over the
horizon: row t * E + link holds the fraction of time unit t a driver on that
route occupies the link. Presence on each link starts at the link's true
cumulative entry time and lasts at least one full time unit (longer links
keep their true traversal time), matching the worked-example convention in
which a 0.1 h link inside a 0.2 h unit contributes 0.5 to two consecutive
units while the entry link fills its whole first unit.

Composing R with the offer matrix P gives A = R @ P; expected link volumes
for an assignment S are then A @ S @ 1, and total travel time applies the
volume-delay curve link by link.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, InputError
from .network import bpr_travel_time

DEFAULT_VALUE_OF_TIME = 157.8  # dollars per hour


@dataclass(frozen=True)
class LocationMatrix:
    """Per-(time, link) presence fractions for each route.

    ``matrix`` has E * horizon rows (row = t * E + link) and one column per
    route. ``truncated_routes`` flags routes whose tail occupancy ran past
    the horizon and was dropped.
    """

    matrix: np.ndarray = field(compare=False)
    horizon: int
    num_links: int
    unit_length_hours: float
    entrance_time: int
    truncated_routes: tuple


@dataclass(frozen=True)
class DemandModel:
    """Decision-driver demand: per-OD counts and the column-to-OD map.

    ``d_matrix`` is K x (routes * menu) with exactly one 1 per column,
    ``q`` the per-OD driver counts, ``driver_to_od`` one OD index per driver.
    """

    q: np.ndarray = field(compare=False)
    d_matrix: np.ndarray = field(compare=False)
    driver_to_od: tuple

    def __post_init__(self):
        if not np.all(self.d_matrix.sum(axis=0) == 1):
            raise InputError("every (route, incentive) column must map to one OD pair")
        if int(self.q.sum()) != len(self.driver_to_od):
            raise InputError("per-OD counts must sum to the driver count")

    @property
    def num_drivers(self):
        return len(self.driver_to_od)


def build_demand_model(routes, menu, driver_to_od):
    """Build D, q and the driver map from a RouteSet and driver OD indices."""
    n_inc = len(menu)
    n_od = len(routes.od_pairs)
    d_matrix = np.zeros((n_od, routes.num_routes * n_inc))
    for od_index, members in routes.route_of_od.items():
        for j in members:
            d_matrix[od_index, j * n_inc : (j + 1) * n_inc] = 1.0
    q = np.bincount(np.asarray(driver_to_od, dtype=int), minlength=n_od).astype(float)
    return DemandModel(q=q, d_matrix=d_matrix, driver_to_od=tuple(int(k) for k in driver_to_od))


def assignment_columns(routes, menu, driver_to_od):
    """Columns each driver may be assigned: own OD's routes x whole menu."""
    n_inc = len(menu)
    cols = []
    for od_index in driver_to_od:
        allowed = []
        for j in routes.route_of_od[od_index]:
            allowed.extend(j * n_inc + i for i in range(n_inc))
        cols.append(np.asarray(allowed, dtype=int))
    return cols


def zero_offer_column(routes, menu, od_index):
    """Column index of the $0 offer on the OD pair's first route."""
    return routes.route_of_od[od_index][0] * len(menu)


def validate_assignment(s_matrix, columns, costs, budget, atol=1e-9):
    """Check one-offer-per-driver, OD-block support, and the budget row."""
    row_mass = s_matrix.sum(axis=0)
    if not np.allclose(row_mass, 1.0, atol=atol):
        raise InputError("each driver must receive exactly one offer")
    for n, allowed in enumerate(columns):
        outside = np.delete(s_matrix[:, n], allowed)
        if np.any(np.abs(outside) > atol):
            raise InputError(f"driver {n} has offer mass outside its OD pair")
    cost = float(costs @ s_matrix.sum(axis=1))
    if cost > budget + atol:
        raise InputError(f"assignment cost {cost} exceeds budget {budget}")
    return cost


def build_location_matrix(net, routes, horizon, unit_length_hours, entrance_time=1):
    """Walk each route at free-flow speed and record per-unit link presence.

    Drivers enter at the start of time unit ``entrance_time`` (1-based).
    A link entered at cumulative time c occupies [c, c + max(t0, unit)];
    each (time, link) entry is that window's overlap with the unit divided
    by the unit length. Occupancy past the horizon is dropped and the route
    is flagged as truncated.

    The walk runs in exact decimal arithmetic (times are interpreted through
    their decimal representation), so grid-aligned inputs produce exact
    entries like 0.5 instead of accumulated float noise.
    """
    if unit_length_hours <= 0:
        raise InputError("unit length must be positive")
    if horizon < 1:
        raise InputError("horizon must be at least one unit")
    if entrance_time < 1 or entrance_time > horizon:
        raise InputError("entrance time must fall inside the horizon")
    n_links = net.num_links
    t0 = [Fraction(str(lk.t0_hours)) for lk in net.links]
    unit = Fraction(str(float(unit_length_hours)))
    matrix = np.zeros((n_links * horizon, routes.num_routes))
    truncated = []
    end_of_horizon = horizon * unit
    for j, route in enumerate(routes.routes):
        cursor = (entrance_time - 1) * unit
        for link_id in route.links:
            occ_start = cursor
            occ_end = cursor + max(t0[link_id], unit)
            if occ_end > end_of_horizon:
                truncated.append(j)
            first = int(occ_start / unit)
            for t in range(first, horizon):
                overlap = min(occ_end, (t + 1) * unit) - max(occ_start, t * unit)
                if overlap > 0:
                    matrix[t * n_links + link_id, j] = float(overlap / unit)
            cursor += t0[link_id]
    return LocationMatrix(
        matrix=matrix,
        horizon=horizon,
        num_links=n_links,
        unit_length_hours=float(unit_length_hours),
        entrance_time=entrance_time,
        truncated_routes=tuple(sorted(set(truncated))),
    )


def compose_a(location, probabilities):
    """Composite presence-per-offer matrix A = R @ P."""
    r = location.matrix
    p = probabilities.matrix
    if r.shape[1] != p.shape[0]:
        raise InputError(
            f"location matrix has {r.shape[1]} routes but choice matrix has {p.shape[0]}"
        )
    return r @ p


def expected_volume(a_matrix, s_matrix):
    """Expected vehicles per (time, link) row: A @ S @ 1."""
    s = np.asarray(s_matrix, dtype=float)
    if s.ndim == 1:
        return a_matrix @ s
    return a_matrix @ s.sum(axis=1)


def scenario1_expected_volume(s_matrix, probabilities, location):
    """Per-time expected volume vectors accumulated driver by driver.

    Returns a list of length-E vectors, one per time unit. Computed by an
    explicit sum over drivers and offer columns so it can cross-check the
    matrix-product path in ``expected_volume``.
    """
    s = np.asarray(s_matrix, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    n_links = location.num_links
    route_mass = np.zeros(probabilities.num_routes)
    for n in range(s.shape[1]):
        for col in np.nonzero(s[:, n])[0]:
            route_mass += s[col, n] * probabilities.matrix[:, col]
    flat = location.matrix @ route_mass
    return [flat[t * n_links : (t + 1) * n_links] for t in range(location.horizon)]


def total_travel_time(vhat, net):
    """Total vehicle-hours: sum over (time, link) of volume times BPR delay.

    ``vhat`` must have E * horizon entries; link parameters are tiled per
    time unit.
    """
    v = np.asarray(vhat, dtype=float)
    if np.any(v < 0):
        raise DomainError("volumes must be nonnegative")
    n_links = net.num_links
    if v.size % n_links != 0:
        raise InputError("volume vector length must be a multiple of the link count")
    reps = v.size // n_links
    t0 = np.tile(net.free_flow_times, reps)
    w = np.tile(net.capacity_vector, reps)
    return float(np.sum(v * bpr_travel_time(t0, w, v)))


def value_of_saved_time(baseline_tt, new_tt, vot=DEFAULT_VALUE_OF_TIME):
    """Dollar value of the travel-time change; negative when time got worse."""
    if vot <= 0:
        raise InputError("value of time must be positive")
    return (baseline_tt - new_tt) * vot
