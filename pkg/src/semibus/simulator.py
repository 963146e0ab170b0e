"""Seeded demand generation, routing rules, and the dispatch timeline.

The corridor runs along x from 0 to gl_x; buses depart the terminal every
headway and always finish on the axis at the corridor end.  Two service
modes share each demand realization:

fixed
    Passengers walk to the nearest stop and board the first departure
    arriving there after they do, capacity permitting.

amsod (semi-on-demand)
    The bus detours to pickup points instead.  Requests are visited in
    x order; between consecutive points the bus turns off at the current
    cross-street, covers the y difference, then runs forward along the
    grid (y-then-x).  Several requests snapped to one cross-street are
    served in a single sweep, entering from the side whose extreme lies
    further from the axis.  A request is served by the first trip whose
    arrival at its pickup point is no earlier than its request time (the
    point must still be ahead of the bus); otherwise it waits for the
    next trip, as do passengers beyond capacity.

All rules are deterministic given (scenario, mode, seed); replications
are seeded through independent substreams so results do not depend on
execution order or worker count.
"""
from __future__ import annotations

import csv
import math
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .model import (
    CostParams,
    GridGeometry,
    Pickup,
    PassengerOutcome,
    Request,
    RoutePlan,
    Scenario,
    ServiceConfig,
    TripCosts,
    require_valid,
)

_EPS = 1e-9
_TIE = 1e-9  # snap tie tolerance on the fractional block position

SeedLike = Union[int, Sequence[int], np.random.Generator, np.random.SeedSequence]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class FixedSchedule:
    """Departures every headway plus deterministic stop arrival offsets."""

    departures: tuple  # terminal departure times, hours
    stop_offsets: tuple  # travel + dwell offset from departure to each stop

    def stop_arrival(self, stop: int, departure_index: int) -> float:
        return self.departures[departure_index] + self.stop_offsets[stop]


@dataclass(frozen=True)
class TripLog:
    trip_index: int
    mode: str  # "fixed" | "amsod"
    depart_time: float
    plan: Optional[RoutePlan]  # amsod only
    costs: TripCosts
    served_ids: tuple
    spilled_ids: tuple  # assigned but deferred to the next trip


@dataclass(frozen=True)
class ZoneSlice:
    zone: int  # 0-based
    x_lo: float
    x_hi: float
    express_length: float  # x_hi .. gl_x, run at v_h with no pickups
    requests: tuple


@dataclass(frozen=True)
class RequestLedger:
    """Every request lands in exactly one bucket."""

    counted_served: tuple
    uncounted_served: tuple
    unserved: tuple


def departure_times(svc: ServiceConfig) -> tuple:
    n = math.ceil((svc.horizon - _EPS) / svc.headway)
    return tuple(i * svc.headway for i in range(n))


def build_schedule(grid: GridGeometry, svc: ServiceConfig) -> FixedSchedule:
    offsets = tuple(c / svc.v_d + svc.t_s * s for s, c in enumerate(grid.stop_chainages))
    return FixedSchedule(departures=departure_times(svc), stop_offsets=offsets)


# --- demand ------------------------------------------------------------------


def _sample_positions(grid: GridGeometry, n: int, rng: np.random.Generator):
    """Draw n demand points: stop by weight, then uniform around the stop,
    rejected until the rectilinear offset fits inside the stop's catchment
    and the point lies on the corridor."""
    weights = np.asarray(grid.stop_weights, dtype=float)
    weights = weights / weights.sum()
    stops = rng.choice(grid.n_stops, size=n, p=weights)
    chain = np.asarray(grid.stop_chainages)[stops]
    gl = np.asarray(grid.gl_y)[stops]
    dx = rng.uniform(-grid.d_xs / 2.0, grid.d_xs / 2.0, n)
    y = rng.uniform(-gl, gl)
    x = chain + dx
    bad = (np.abs(dx) + np.abs(y) > gl) | (x < 0.0) | (x > grid.gl_x)
    while bad.any():
        idx = np.nonzero(bad)[0]
        dx[idx] = rng.uniform(-grid.d_xs / 2.0, grid.d_xs / 2.0, idx.size)
        y[idx] = rng.uniform(-gl[idx], gl[idx])
        x[idx] = chain[idx] + dx[idx]
        bad[idx] = (np.abs(dx[idx]) + np.abs(y[idx]) > gl[idx]) | (x[idx] < 0.0) | (x[idx] > grid.gl_x)
    return x, y, stops


def sample_requests(grid: GridGeometry, svc: ServiceConfig, seed: SeedLike) -> list:
    """Homogeneous Poisson request process over [0, horizon].

    Deterministic given (seed, scenario).  Returns requests sorted by
    request time with ids in that order.
    """
    rng = _rng(seed)
    n = int(rng.poisson(svc.demand_rate * svc.horizon))
    times = np.sort(rng.uniform(0.0, svc.horizon, n))
    if n == 0:
        return []
    x, y, stops = _sample_positions(grid, n, rng)
    return [
        Request(id=i, x=float(x[i]), y=float(y[i]), t_k=float(times[i]), home_stop=int(stops[i]))
        for i in range(n)
    ]


def nearest_stop(x: float, grid: GridGeometry) -> int:
    """Nearest stop by rectilinear distance; ties go downstream."""
    chain = grid.stop_chainages
    pos = bisect_left(chain, x)
    if pos == 0:
        return 0
    if pos == len(chain):
        return len(chain) - 1
    left = x - chain[pos - 1]
    right = chain[pos] - x
    return pos if right <= left else pos - 1


def access_time(req: Request, grid: GridGeometry, svc: ServiceConfig) -> tuple:
    """(boarding stop, access time in hours) for the fixed-route service."""
    s = nearest_stop(req.x, grid)
    return s, (abs(req.x - grid.stop_chainages[s]) + abs(req.y)) / svc.v_w


# --- street snapping ---------------------------------------------------------


def _snap_coord(value: float, spacing: float, tie_toward_zero: bool) -> float:
    r = value / spacing
    f = math.floor(r)
    frac = r - f
    if abs(frac - 0.5) < _TIE:
        if tie_toward_zero:
            k = f if value >= 0 else f + 1  # candidate nearer the axis
        else:
            k = f  # backward in x
    elif frac > 0.5:
        k = f + 1
    else:
        k = f
    return k * spacing


def snap_to_streets(point: tuple, grid: GridGeometry) -> tuple:
    """Snap a point to the nearest street intersection.

    Midpoint ties go toward the route axis in y and backward in x, so
    resnapping is a fixed point.
    """
    x, y = point
    return _snap_coord(x, grid.l_x, tie_toward_zero=False), _snap_coord(y, grid.l_y, tie_toward_zero=True)


def _on_lattice(point: tuple, grid: GridGeometry) -> bool:
    sx, sy = snap_to_streets(point, grid)
    return abs(sx - point[0]) < 1e-9 and abs(sy - point[1]) < 1e-9


# --- on-demand routing -------------------------------------------------------
#
# Candidate tuples are (sx, sy, t_k, request_id).


def _visit_order(cands: list) -> list:
    """x-ascending visit order; one monotone y sweep per cross-street.

    Within a shared snapped x the sweep starts at the extreme with the
    larger |y| (positive side on a tie) and runs through to the other
    extreme, so the bus never reverses on the cross-street.
    """
    cands = sorted(cands, key=lambda c: (c[0], c[3]))
    out = []
    i = 0
    while i < len(cands):
        j = i
        while j < len(cands) and cands[j][0] == cands[i][0]:
            j += 1
        group = cands[i:j]
        if len(group) > 1:
            top = max(c[1] for c in group)
            bot = min(c[1] for c in group)
            if abs(top) >= abs(bot):
                group.sort(key=lambda c: (-c[1], c[3]))
            else:
                group.sort(key=lambda c: (c[1], c[3]))
        out.extend(group)
        i = j
    return out


def _walk(
    cands: list,
    depart: float,
    v_d: float,
    t_s_prime: float,
    start_x: float,
    end_x: float,
    capacity: Optional[int] = None,
    ready_check: bool = False,
    t_bound: float = math.inf,
):
    """Drive the route, serving candidates in visit order.

    With ready_check, a candidate whose request time is later than the
    bus's arrival at its point is left for the next trip; with a capacity,
    candidates beyond it are spilled (recorded if they were ready).
    t_bound is an upper bound on any arrival this trip, used only to skip
    clearly-not-ready candidates cheaply.  Returns (served, spilled_ids,
    d_y, waypoints, end_time) where served items are
    (request_id, pickup_time, sx, sy).
    """
    t = depart
    bx, by = start_x, 0.0
    d_y = 0.0
    waypoints = [(start_x, 0.0)]
    served = []
    spilled = []
    load = 0
    last_point = None
    last_arrival = depart
    inv_v = 1.0 / v_d
    for sx, sy, tk, rid in cands:
        if tk > t_bound:
            continue
        if last_point is not None and sx == last_point[0] and sy == last_point[1]:
            arrival = last_arrival  # boards during the same dwell
            new_point = False
        else:
            arrival = t + (abs(sy - by) + (sx - bx)) * inv_v
            new_point = True
        if ready_check and tk > arrival + 1e-12:
            continue  # requested after the bus passes; next trip
        if capacity is not None and load >= capacity:
            spilled.append(rid)
            continue
        if new_point:
            d_y += abs(sy - by)
            if sy != by:
                waypoints.append((bx, sy))
            if sx != bx:
                waypoints.append((sx, sy))
            t = arrival + t_s_prime
            bx, by = sx, sy
            last_point = (sx, sy)
            last_arrival = arrival
        served.append((rid, arrival, sx, sy))
        load += 1
    d_y += abs(by)
    if by != 0.0:
        waypoints.append((bx, 0.0))
    if bx != end_x:
        waypoints.append((end_x, 0.0))
    end_time = t + (abs(by) + (end_x - bx)) * inv_v
    return served, spilled, d_y, waypoints, end_time


def _make_plan(
    served: list,
    d_y: float,
    waypoints: list,
    depart: float,
    end_time_local: float,
    start_x: float,
    end_x: float,
    express_length: float,
    v_h: Optional[float],
) -> RoutePlan:
    express_legs = ()
    end_time = end_time_local
    if express_length > _EPS:
        express_legs = ((express_length, v_h),)
        end_time = end_time_local + express_length / v_h
    n_after = 0
    remaining = [0] * len(served)
    prev_point = None
    for i in range(len(served) - 1, -1, -1):
        point = (served[i][2], served[i][3])
        if prev_point is not None and point != prev_point:
            n_after += 1
        remaining[i] = n_after
        prev_point = point
    pickups = tuple(
        Pickup(request_id=rid, time=t_ak, point=(sx, sy), remaining_stops=remaining[i])
        for i, (rid, t_ak, sx, sy) in enumerate(served)
    )
    return RoutePlan(
        waypoints=tuple(waypoints),
        d_x=end_x - start_x,
        d_y=d_y,
        pickups=pickups,
        express_legs=express_legs,
        depart_time=depart,
        end_time=end_time,
    )


def plan_amsod_route(
    requests: Sequence[Request],
    grid: GridGeometry,
    svc: ServiceConfig,
    depart_time: float = 0.0,
    start_x: float = 0.0,
    end_x: Optional[float] = None,
    express_to: Optional[float] = None,
) -> RoutePlan:
    """Plan one trip serving all given requests (assumed ready).

    Request coordinates must already lie on the street lattice.  The bus
    starts at (start_x, 0), ends on the axis at end_x (default the
    corridor end), and, if express_to is given, continues there at v_h
    with no pickups.
    """
    for req in requests:
        if not _on_lattice((req.x, req.y), grid):
            raise ValueError(f"request {req.id} is off the street lattice: ({req.x}, {req.y})")
    if end_x is None:
        end_x = grid.gl_x
    cands = [(req.x, req.y, req.t_k, req.id) for req in requests]
    served, _, d_y, waypoints, end_local = _walk(
        _visit_order(cands), depart_time, svc.v_d, svc.t_s_prime, start_x, end_x
    )
    express_length = 0.0 if express_to is None else express_to - end_x
    return _make_plan(served, d_y, waypoints, depart_time, end_local, start_x, end_x, express_length, svc.v_h)


def evaluate_amsod_trip(
    plan: RoutePlan,
    cost: CostParams,
    svc: ServiceConfig,
    requests: Sequence[Request],
) -> TripCosts:
    """Cost one on-demand trip from its plan.

    Access cost is identically zero.  Wait runs from request time to the
    bus's arrival at the pickup point; in-vehicle time from when the bus
    leaves that point (so a lone passenger carries no dwell at all) to
    the corridor end, express legs included.  Operator cost is per km
    over the whole path.
    """
    by_id = {r.id: r for r in requests}
    outcomes = []
    for p in plan.pickups:
        wait = p.time - by_id[p.request_id].t_k
        if wait < -1e-9:
            raise ValueError(f"negative wait for request {p.request_id}: {wait}")
        ivtt = plan.end_time - p.time - svc.t_s_prime
        outcomes.append(PassengerOutcome(wait=max(0.0, wait), ivtt=max(0.0, ivtt), access=0.0))
    vot = cost.vot
    express_km = sum(length for length, _ in plan.express_legs)
    return TripCosts(
        c_a=0.0,
        c_w=cost.gamma_w * vot * sum(o.wait for o in outcomes),
        c_r=cost.gamma_r * vot * sum(o.ivtt for o in outcomes),
        c_o=cost.gamma_o * (plan.d_x + plan.d_y + express_km),
        per_passenger=tuple(outcomes),
        k_j=len(outcomes),
    )


# --- fixed-route evaluation --------------------------------------------------


def evaluate_fixed_trip(
    requests: Sequence[Request],
    departure_index: int,
    sched: FixedSchedule,
    cost: CostParams,
    grid: GridGeometry,
    svc: ServiceConfig,
) -> TripCosts:
    """Cost one fixed-route trip for the passengers boarding it.

    Per passenger: walk to the nearest stop, wait for the stop arrival,
    then ride to the corridor end with one dwell per downstream stop.
    Operator cost is the full corridor length regardless of boardings.
    """
    n_stops = grid.n_stops
    outcomes = []
    for req in requests:
        s, acc = access_time(req, grid, svc)
        wait = sched.stop_arrival(s, departure_index) - (req.t_k + acc)
        if wait < -1e-9:
            raise ValueError(f"request {req.id} assigned to a departure it cannot catch")
        ivtt = (grid.gl_x - grid.stop_chainages[s]) / svc.v_d + svc.t_s * (n_stops - s - 1)
        outcomes.append(PassengerOutcome(wait=max(0.0, wait), ivtt=ivtt, access=acc))
    vot = cost.vot
    return TripCosts(
        c_a=cost.gamma_a * vot * sum(o.access for o in outcomes),
        c_w=cost.gamma_w * vot * sum(o.wait for o in outcomes),
        c_r=cost.gamma_r * vot * sum(o.ivtt for o in outcomes),
        c_o=cost.gamma_o * grid.gl_x,
        per_passenger=tuple(outcomes),
        k_j=len(outcomes),
    )


# --- request partitioning ----------------------------------------------------


def _band_index(y: float, gl: float, n_p: int) -> int:
    w = 2.0 * gl / n_p
    r = (y + gl) / w
    k = round(r)
    if abs(r - k) < 1e-9 and 0 < k < n_p:
        # boundary: the band whose centre is nearer the axis wins; on a
        # symmetric tie take the lower band
        c_lo = -gl + (k - 0.5) * w
        c_up = -gl + (k + 0.5) * w
        idx = k - 1 if abs(c_lo) <= abs(c_up) else k
    else:
        idx = math.floor(r)
    return min(n_p - 1, max(0, idx))


def partition_parallel(requests: Sequence[Request], grid: GridGeometry, n_p: int) -> list:
    """Split requests into n_p equal-width y bands (per-stop catchment)."""
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    if n_p == 1:
        return [list(requests)]
    bands = [[] for _ in range(n_p)]
    for req in requests:
        gl = grid.gl_y_at(req.home_stop)
        bands[_band_index(req.y, gl, n_p)].append(req)
    return bands


def partition_zonal(requests: Sequence[Request], grid: GridGeometry, n: int) -> list:
    """Split the corridor into n equal-length zones with exit express legs."""
    if n < 1:
        raise ValueError("n must be >= 1")
    length = grid.gl_x / n
    buckets = [[] for _ in range(n)]
    for req in requests:
        idx = min(n - 1, int(req.x / length))
        buckets[idx].append(req)
    return [
        ZoneSlice(
            zone=z,
            x_lo=z * length,
            x_hi=(z + 1) * length,
            express_length=grid.gl_x - (z + 1) * length,
            requests=tuple(buckets[z]),
        )
        for z in range(n)
    ]


# --- timelines ---------------------------------------------------------------


def _fixed_timeline(scenario: Scenario, requests: Sequence[Request]) -> list:
    grid, svc, cost = scenario.grid, scenario.service, scenario.cost
    sched = build_schedule(grid, svc)
    n_trips = len(sched.departures)
    h = svc.headway

    info = []  # (request, stop, ready)
    pending = [[] for _ in range(n_trips)]
    spilled_from = [[] for _ in range(n_trips)]
    unserved = []
    for req in requests:
        s, acc = access_time(req, grid, svc)
        ready = req.t_k + acc
        first = math.ceil((ready - sched.stop_offsets[s]) / h - 1e-12)
        first = max(0, first)
        if first >= n_trips:
            unserved.append(req.id)
            continue
        pending[first].append((s, ready, req.id, req))

    logs = []
    for i in range(n_trips):
        cand = sorted(pending[i], key=lambda c: (c[0], c[1], c[2]))  # stop order, FIFO
        served = cand[: svc.capacity]
        for c in cand[svc.capacity :]:
            spilled_from[i].append(c[2])
            if i + 1 < n_trips:
                pending[i + 1].append(c)
            else:
                unserved.append(c[2])
        cohort = [c[3] for c in served]
        costs = evaluate_fixed_trip(cohort, i, sched, cost, grid, svc)
        logs.append(
            TripLog(
                trip_index=i,
                mode="fixed",
                depart_time=sched.departures[i],
                plan=None,
                costs=costs,
                served_ids=tuple(c[2] for c in served),
                spilled_ids=tuple(spilled_from[i]),
            )
        )
    return logs


def _amsod_timeline(scenario: Scenario, requests: Sequence[Request]) -> list:
    grid, svc, cost = scenario.grid, scenario.service, scenario.cost
    deps = departure_times(svc)

    if svc.n_zones > 1:
        slices = partition_zonal(requests, grid, svc.n_zones)
        subsets = [list(s.requests) for s in slices]
        bounds = [(s.x_lo, s.x_hi, s.express_length) for s in slices]
    elif svc.n_parallel > 1:
        subsets = partition_parallel(requests, grid, svc.n_parallel)
        bounds = [(0.0, grid.gl_x, 0.0)] * svc.n_parallel
    else:
        subsets = [list(requests)]
        bounds = [(0.0, grid.gl_x, 0.0)]
    n_sub = len(subsets)

    by_id = {r.id: r for r in requests}
    pending = []
    for sub in subsets:
        cands = []
        for req in sub:
            sx, sy = snap_to_streets((req.x, req.y), grid)
            cands.append((sx, sy, req.t_k, req.id))
        pending.append(sorted(cands, key=lambda c: (c[0], c[3])))

    gl_max = grid.max_gl_y
    logs = []
    for i, dep in enumerate(deps):
        k = i % n_sub
        start_x, end_x, express_len = bounds[k]
        order = _visit_order(pending[k])
        n_serv = min(svc.capacity, len(order))
        t_bound = dep + (end_x - start_x) / svc.v_d + n_serv * (2.0 * gl_max / svc.v_d + svc.t_s_prime)
        served, spilled, d_y, waypoints, end_local = _walk(
            order,
            dep,
            svc.v_d,
            svc.t_s_prime,
            start_x,
            end_x,
            capacity=svc.capacity,
            ready_check=True,
            t_bound=t_bound,
        )
        plan = _make_plan(served, d_y, waypoints, dep, end_local, start_x, end_x, express_len, svc.v_h)
        cohort = [by_id[rid] for rid, _, _, _ in served]
        costs = evaluate_amsod_trip(plan, cost, svc, cohort)
        served_set = {rid for rid, _, _, _ in served}
        if served_set:
            pending[k] = [c for c in pending[k] if c[3] not in served_set]
        logs.append(
            TripLog(
                trip_index=i,
                mode="amsod",
                depart_time=dep,
                plan=plan,
                costs=costs,
                served_ids=tuple(rid for rid, _, _, _ in served),
                spilled_ids=tuple(spilled),
            )
        )
    return logs


def simulate_requests(scenario: Scenario, mode: str, requests: Sequence[Request]) -> list:
    """Run the dispatch timeline for one mode over a given demand
    realization (the common-random-numbers entry point)."""
    require_valid(scenario)
    if mode == "fixed":
        return _fixed_timeline(scenario, requests)
    if mode == "amsod":
        return _amsod_timeline(scenario, requests)
    raise ValueError(f"unknown mode {mode!r}")


def run_timeline(scenario: Scenario, mode: str, seed: SeedLike) -> list:
    """Sample demand and run the dispatch timeline; returns TripLogs."""
    require_valid(scenario)
    requests = sample_requests(scenario.grid, scenario.service, seed)
    return simulate_requests(scenario, mode, requests)


def classify_requests(requests: Sequence[Request], logs: Sequence[TripLog], svc: ServiceConfig) -> RequestLedger:
    """Partition request ids into counted-served / uncounted-served /
    unserved-at-horizon."""
    served = set()
    for log in logs:
        served.update(log.served_ids)
    w0, w1 = svc.warmup_window
    counted, uncounted, unserved = [], [], []
    for req in requests:
        if req.id not in served:
            unserved.append(req.id)
        elif w0 <= req.t_k < w1:
            counted.append(req.id)
        else:
            uncounted.append(req.id)
    return RequestLedger(tuple(counted), tuple(uncounted), tuple(unserved))


def sampled_mean_access(
    grid: GridGeometry,
    svc: ServiceConfig,
    n_samples: int = 1_000_000,
    seed: SeedLike = 0,
) -> float:
    """Monte Carlo mean fixed-route access time (hours) under the
    simulator's demand distribution."""
    rng = _rng(seed)
    x, y, _ = _sample_positions(grid, n_samples, rng)
    chain = np.asarray(grid.stop_chainages)
    pos = np.searchsorted(chain, x)
    pos_lo = np.clip(pos - 1, 0, grid.n_stops - 1)
    pos_hi = np.clip(pos, 0, grid.n_stops - 1)
    left = np.abs(x - chain[pos_lo])
    right = np.abs(chain[pos_hi] - x)
    dist = np.minimum(left, right) + np.abs(y)
    return float(dist.mean() / svc.v_w)


def write_trace(logs: Sequence[TripLog], svc: ServiceConfig, path: Union[str, Path]) -> None:
    """Per-trip waypoint trace as CSV: trip, time_h, x_km, y_km, event.

    Pickup waypoints use the recorded pickup times (then dwell once per
    point); plain corners are interpolated at street speed.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trip", "time_h", "x_km", "y_km", "event"])
        for log in logs:
            plan = log.plan
            if plan is None:
                continue
            # distinct pickup stops in visit order; a lattice point may be
            # revisited later as a plain corner, so match positionally
            stops = []
            for p in plan.pickups:
                if not stops or stops[-1][0] != p.point:
                    stops.append((p.point, p.time))
            nxt = 0

            def row(t, x, y, event):
                writer.writerow([log.trip_index, f"{t:.6f}", f"{x:.4f}", f"{y:.4f}", event])

            t = plan.depart_time
            prev = None
            for wp in plan.waypoints:
                if prev is not None:
                    t += (abs(wp[0] - prev[0]) + abs(wp[1] - prev[1])) / svc.v_d
                if nxt < len(stops) and wp == stops[nxt][0]:
                    t = stops[nxt][1]
                    row(t, wp[0], wp[1], "pickup")
                    row(t + svc.t_s_prime, wp[0], wp[1], "dwell")
                    t += svc.t_s_prime
                    nxt += 1
                else:
                    row(t, wp[0], wp[1], "move")
                prev = wp
            for length, _speed in plan.express_legs:
                row(plan.end_time, prev[0] + length, 0.0, "express")
