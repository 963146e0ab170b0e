"""Core domain types, scenario validation, and scenario file I/O.

Everything internal works in a single unit system: kilometres, hours,
dollars.  Scenario files may declare other units per field with a suffix
(``"headway_min": 15`` or ``"headway_h": 0.25``); conversion happens once,
at the parsing boundary.

All types are immutable values after construction and safe to share
between concurrent workers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

DEFAULT_SEED = 1729
DEFAULT_REPLICATIONS = 10_000

_WEIGHT_TOL = 1e-9


class ScenarioError(ValueError):
    """A scenario failed parsing or validation."""

    def __init__(self, problems: Sequence["Violation"] | str):
        if isinstance(problems, str):
            problems = [Violation("scenario", problems)]
        self.problems = list(problems)
        super().__init__("; ".join(str(p) for p in self.problems))


@dataclass(frozen=True)
class Violation:
    """One broken rule, named by field and rule."""

    field: str
    rule: str
    severity: str = "error"  # "error" | "warning"
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.field}: {self.rule}"
        if self.detail:
            msg += f" ({self.detail})"
        return msg


@dataclass(frozen=True)
class CostParams:
    """Monetized-cost parameters.

    gamma_a/gamma_w/gamma_r are dimensionless penalty multipliers on
    access, waiting, and riding time; riding is the numeraire (1 by
    convention).  gamma_o is the operator cost per vehicle-km and vot the
    value of time in $/hour.
    """

    gamma_a: float = 2.0
    gamma_w: float = 1.5
    gamma_r: float = 1.0
    gamma_o: float = 1.0
    vot: float = 16.5


@dataclass(frozen=True)
class GridGeometry:
    """Grid corridor geometry.

    gl_y is the catchment half-width; it may vary per stop (real routes
    do), so it is stored as one value per stop.  A scalar at construction
    is expanded to a constant list.
    """

    l_x: float  # x block length, km
    l_y: float  # y block length, km
    gl_x: float  # corridor length, km
    gl_y: tuple  # catchment half-width per stop, km
    stop_chainages: tuple  # stop x positions, km, ascending
    stop_weights: tuple  # demand share per stop, sums to 1
    d_xs: float  # nominal stop spacing, km

    def __post_init__(self):
        object.__setattr__(self, "stop_chainages", tuple(float(c) for c in self.stop_chainages))
        object.__setattr__(self, "stop_weights", tuple(float(w) for w in self.stop_weights))
        gl_y = self.gl_y
        if isinstance(gl_y, (int, float)):
            gl_y = (float(gl_y),) * len(self.stop_chainages)
        else:
            gl_y = tuple(float(g) for g in gl_y)
        object.__setattr__(self, "gl_y", gl_y)

    @property
    def n_stops(self) -> int:
        return len(self.stop_chainages)

    @property
    def max_gl_y(self) -> float:
        return max(self.gl_y)

    def gl_y_at(self, stop: int) -> float:
        return self.gl_y[stop]


@dataclass(frozen=True)
class ServiceConfig:
    """Service design parameters (all times in hours, speeds in km/h)."""

    headway: float
    capacity: int
    v_d: float  # bus street speed, dwell excluded
    v_w: float  # walking speed
    t_s: float  # fixed-route dwell per stop
    t_s_prime: float  # on-demand dwell per pickup point
    demand_rate: float  # passengers per hour (lambda)
    s_o: float  # maximum access time
    n_parallel: int = 1
    n_zones: int = 1
    v_h: Optional[float] = None  # highway speed, zonal express legs only
    horizon: float = 3.0
    warmup_window: tuple = (1.0, 2.0)  # request times counted for costs

    def __post_init__(self):
        object.__setattr__(self, "warmup_window", tuple(float(t) for t in self.warmup_window))


@dataclass(frozen=True)
class Request:
    """One passenger: demand point (x, y) and the time they are ready."""

    id: int
    x: float
    y: float
    t_k: float  # ready/request time, hours from scenario start
    home_stop: int  # index of the generating stop


@dataclass(frozen=True)
class Pickup:
    """One served passenger on a route plan."""

    request_id: int
    time: float  # actual pickup time, hours
    point: tuple  # lattice point (x, y)
    remaining_stops: int  # distinct pickup points strictly after this one


@dataclass(frozen=True)
class RoutePlan:
    """Ordered waypoint path of one on-demand trip.

    Waypoints cover the grid segment only; zonal express legs are listed
    separately so d_x + d_y always equals the rectilinear length of the
    waypoint polyline.
    """

    waypoints: tuple  # lattice points (x, y)
    d_x: float  # x distance on the grid segment, km
    d_y: float  # y distance, km
    pickups: tuple  # Pickup records in visit order
    express_legs: tuple = ()  # (length_km, speed_kmh) pairs
    depart_time: float = 0.0
    end_time: float = 0.0  # arrival at the corridor end, express included

    def rectilinear_length(self) -> float:
        total = 0.0
        for (x0, y0), (x1, y1) in zip(self.waypoints, self.waypoints[1:]):
            total += abs(x1 - x0) + abs(y1 - y0)
        return total


@dataclass(frozen=True)
class PassengerOutcome:
    """Per-passenger times for one trip (hours)."""

    wait: float
    ivtt: float
    access: float  # zero for on-demand pickups


@dataclass(frozen=True)
class TripCosts:
    """Cost breakdown of one trip in dollars."""

    c_a: float
    c_w: float
    c_r: float
    c_o: float
    per_passenger: tuple  # PassengerOutcome, aligned with TripLog.served_ids
    k_j: int

    @property
    def total(self) -> float:
        return self.c_a + self.c_w + self.c_r + self.c_o


@dataclass(frozen=True)
class MetricSummary:
    median: float
    p2_5: float
    p97_5: float


@dataclass(frozen=True)
class ScenarioStats:
    """Median and 95% percentile bounds per metric over replications."""

    metrics: dict
    replications: int


@dataclass(frozen=True)
class Scenario:
    name: str
    cost: CostParams
    grid: GridGeometry
    service: ServiceConfig
    seed: int = DEFAULT_SEED
    replications: int = DEFAULT_REPLICATIONS


def validate_scenario(cost: CostParams, grid: GridGeometry, svc: ServiceConfig) -> list:
    """Check every type invariant; return all violations (possibly empty).

    Side-effect free and idempotent.  "catchment exceeds walk reach" is a
    warning, not an error: widening s_o is a legitimate design (wide
    catchments simply imply long walks for the fixed-route baseline).
    """
    out: list[Violation] = []

    def positive(fieldname, value):
        if not value > 0:
            out.append(Violation(fieldname, "non-positive parameter", detail=f"value {value!r}"))

    positive("cost.gamma_a", cost.gamma_a)
    positive("cost.gamma_w", cost.gamma_w)
    positive("cost.gamma_r", cost.gamma_r)
    positive("cost.gamma_o", cost.gamma_o)
    positive("cost.vot", cost.vot)

    positive("grid.l_x", grid.l_x)
    positive("grid.l_y", grid.l_y)
    positive("grid.gl_x", grid.gl_x)
    positive("grid.d_xs", grid.d_xs)
    if grid.n_stops == 0:
        out.append(Violation("grid.stop_chainages", "no stops"))
    for g in grid.gl_y:
        if not g > 0:
            out.append(Violation("grid.gl_y", "non-positive parameter", detail=f"value {g!r}"))
            break
    if any(b <= a for a, b in zip(grid.stop_chainages, grid.stop_chainages[1:])):
        out.append(Violation("grid.stop_chainages", "unsorted stops"))
    if grid.stop_chainages and (
        grid.stop_chainages[0] < -_WEIGHT_TOL or grid.stop_chainages[-1] > grid.gl_x + _WEIGHT_TOL
    ):
        out.append(Violation("grid.stop_chainages", "stop outside route"))
    if len(grid.stop_weights) != grid.n_stops:
        out.append(Violation("grid.stop_weights", "weights length mismatch"))
    elif grid.stop_weights:
        if any(w < 0 for w in grid.stop_weights):
            out.append(Violation("grid.stop_weights", "negative weight"))
        if abs(sum(grid.stop_weights) - 1.0) > _WEIGHT_TOL:
            out.append(
                Violation("grid.stop_weights", "weights not normalized", detail=f"sum {sum(grid.stop_weights)!r}")
            )
    if len(grid.gl_y) != grid.n_stops:
        out.append(Violation("grid.gl_y", "catchment length mismatch"))

    positive("service.headway", svc.headway)
    positive("service.s_o", svc.s_o)
    positive("service.horizon", svc.horizon)
    if svc.t_s < 0 or svc.t_s_prime < 0:
        out.append(Violation("service.t_s", "non-positive parameter", detail="dwell must be >= 0"))
    if svc.demand_rate < 0:
        out.append(Violation("service.lambda", "non-positive parameter", detail="demand rate must be >= 0"))
    if svc.capacity < 1:
        out.append(Violation("service.capacity", "invalid count"))
    if svc.n_parallel < 1:
        out.append(Violation("service.n_parallel", "invalid count"))
    if svc.n_zones < 1:
        out.append(Violation("service.n_zones", "invalid count"))
    if svc.n_parallel > 1 and svc.n_zones > 1:
        out.append(Violation("service.n_zones", "zonal and parallel variants cannot combine"))
    if not svc.v_w > 0 or not svc.v_d > svc.v_w:
        out.append(Violation("service.v_d", "speed ordering", detail="require v_d > v_w > 0"))
    if svc.v_h is not None and svc.v_h < svc.v_d:
        out.append(Violation("service.v_h", "speed ordering", detail="require v_h >= v_d"))
    if svc.n_zones > 1 and svc.v_h is None:
        out.append(Violation("service.v_h", "missing v_h", detail="required when n_zones > 1"))
    w0, w1 = svc.warmup_window
    if not (0.0 <= w0 < w1 <= svc.horizon + _WEIGHT_TOL):
        out.append(Violation("service.warmup_window", "warmup beyond horizon"))

    if grid.gl_y and svc.s_o > 0 and svc.v_w > 0:
        if svc.s_o * svc.v_w < grid.max_gl_y - 1e-9:
            out.append(
                Violation(
                    "service.s_o",
                    "catchment exceeds walk reach",
                    severity="warning",
                    detail=f"s_o*v_w = {svc.s_o * svc.v_w:.3f} km < max gl_y = {grid.max_gl_y:.3f} km",
                )
            )
    return out


def scenario_problems(scenario: Scenario) -> list:
    return validate_scenario(scenario.cost, scenario.grid, scenario.service)


def require_valid(scenario: Scenario) -> Scenario:
    """Return the scenario unchanged, raising ScenarioError on any error."""
    errors = [v for v in scenario_problems(scenario) if v.severity == "error"]
    if errors:
        raise ScenarioError(errors)
    return scenario


# --- scenario file parsing -------------------------------------------------
#
# Unit suffix convention: a field may carry a suffix naming its unit; the
# bare name means the canonical unit (km, hours, km/h).

_TIME_SUFFIX = {"_h": 1.0, "_hours": 1.0, "_min": 1.0 / 60.0, "_s": 1.0 / 3600.0}
_DIST_SUFFIX = {"_km": 1.0, "_m": 1.0 / 1000.0}
_SPEED_SUFFIX = {"_kmh": 1.0}

_COST_FIELDS = {"gamma_a": None, "gamma_w": None, "gamma_r": None, "gamma_o": None, "vot": None}
_GRID_FIELDS = {
    "l_x": _DIST_SUFFIX,
    "l_y": _DIST_SUFFIX,
    "gl_x": _DIST_SUFFIX,
    "gl_y": _DIST_SUFFIX,
    "d_xs": _DIST_SUFFIX,
    "stop_chainages": _DIST_SUFFIX,
    "stop_weights": None,
}
_SERVICE_FIELDS = {
    "headway": _TIME_SUFFIX,
    "capacity": None,
    "n_parallel": None,
    "n_zones": None,
    "v_d": _SPEED_SUFFIX,
    "v_w": _SPEED_SUFFIX,
    "v_h": _SPEED_SUFFIX,
    "t_s": _TIME_SUFFIX,
    "t_s_prime": _TIME_SUFFIX,
    "lambda": None,
    "demand_rate": None,
    "s_o": _TIME_SUFFIX,
    "horizon": _TIME_SUFFIX,
    "warmup_window": _TIME_SUFFIX,
}


def _parse_section(section: str, raw: dict, known: dict) -> dict:
    parsed = {}
    for key, value in raw.items():
        base, factor = key, 1.0
        if base not in known:
            matched = False
            for name, suffixes in known.items():
                if suffixes is None:
                    continue
                for suffix, f in suffixes.items():
                    if key == name + suffix:
                        base, factor = name, f
                        matched = True
                        break
                if matched:
                    break
            if not matched:
                raise ScenarioError(f"{section}: unknown field {key!r}")
        if base in parsed:
            raise ScenarioError(f"{section}: field {base!r} given twice")
        if isinstance(value, list):
            parsed[base] = [v * factor for v in value]
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            parsed[base] = value * factor
        else:
            raise ScenarioError(f"{section}.{key}: non-numeric value {value!r}")
    return parsed


def scenario_from_dict(data: dict, name: str = "scenario") -> Scenario:
    """Build a Scenario from parsed JSON; raises ScenarioError on any defect."""
    for section in ("cost", "grid", "service"):
        if section not in data:
            raise ScenarioError(f"missing object {section!r}")
        if not isinstance(data[section], dict):
            raise ScenarioError(f"object {section!r} must be a mapping")

    cost_kw = _parse_section("cost", data["cost"], _COST_FIELDS)
    grid_kw = _parse_section("grid", data["grid"], _GRID_FIELDS)
    svc_kw = _parse_section("service", data["service"], _SERVICE_FIELDS)
    if "lambda" in svc_kw:
        if "demand_rate" in svc_kw:
            raise ScenarioError("service: give either lambda or demand_rate, not both")
        svc_kw["demand_rate"] = svc_kw.pop("lambda")

    for missing in ("headway", "capacity", "v_d", "v_w", "t_s", "t_s_prime", "demand_rate", "s_o"):
        if missing not in svc_kw:
            raise ScenarioError(f"service: missing field {missing!r}")
    for missing in ("l_x", "l_y", "gl_x", "gl_y", "d_xs", "stop_chainages", "stop_weights"):
        if missing not in grid_kw:
            raise ScenarioError(f"grid: missing field {missing!r}")

    for int_field in ("capacity", "n_parallel", "n_zones"):
        if int_field in svc_kw:
            svc_kw[int_field] = int(svc_kw[int_field])
    if "warmup_window" in svc_kw and len(svc_kw["warmup_window"]) != 2:
        raise ScenarioError("service.warmup_window: expected [start, end]")

    run = data.get("run", {})
    scenario = Scenario(
        name=str(data.get("name", name)),
        cost=CostParams(**cost_kw),
        grid=GridGeometry(**grid_kw),
        service=ServiceConfig(**svc_kw),
        seed=int(run.get("seed", DEFAULT_SEED)),
        replications=int(run.get("replications", DEFAULT_REPLICATIONS)),
    )
    errors = [v for v in scenario_problems(scenario) if v.severity == "error"]
    if errors:
        raise ScenarioError(errors)
    return scenario


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize with explicit canonical-unit suffixes; round-trips exactly."""
    c, g, s = scenario.cost, scenario.grid, scenario.service
    svc = {
        "headway_h": s.headway,
        "capacity": s.capacity,
        "n_parallel": s.n_parallel,
        "n_zones": s.n_zones,
        "v_d": s.v_d,
        "v_w": s.v_w,
        "t_s_h": s.t_s,
        "t_s_prime_h": s.t_s_prime,
        "lambda": s.demand_rate,
        "s_o_h": s.s_o,
        "horizon_h": s.horizon,
        "warmup_window_h": list(s.warmup_window),
    }
    if s.v_h is not None:
        svc["v_h"] = s.v_h
    return {
        "name": scenario.name,
        "cost": {"gamma_a": c.gamma_a, "gamma_w": c.gamma_w, "gamma_r": c.gamma_r, "gamma_o": c.gamma_o, "vot": c.vot},
        "grid": {
            "l_x_km": g.l_x,
            "l_y_km": g.l_y,
            "gl_x_km": g.gl_x,
            "gl_y_km": list(g.gl_y),
            "d_xs_km": g.d_xs,
            "stop_chainages_km": list(g.stop_chainages),
            "stop_weights": list(g.stop_weights),
        },
        "service": svc,
        "run": {"seed": scenario.seed, "replications": scenario.replications},
    }


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path.name}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path.name}: expected a JSON object")
    return scenario_from_dict(data, name=path.stem)


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")
