"""Closed-form service costs and route-conversion screening.

Hourly generalized costs of a fixed-route corridor service and of its
semi-on-demand replacement, the cost difference between them, screening
indicators (is conversion favorable, and up to what demand), the
two-parallel-band variant, and the zonal-express cost table with its
optimal zone count.

Conventions shared by every function here:
  * k_j, the pickups per trip, is lambda * headway at steady state.
  * the fixed-route wait uses zero headway variance (Poisson arrivals on a
    clockwork schedule); the on-demand wait adds the headway variance
    induced by detours and pickup dwells, at k_j = lambda * H.
  * mean_access is the fixed-route mean access time in hours and is always
    an explicit argument.  For screening, ``screening_mean_access`` (half
    the maximum access time) is the convention that reproduces the
    reference corridor rankings; a sampled estimate of the simulator's access
    distribution lives in :mod:`semibus.simulator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import CostParams, GridGeometry, ServiceConfig

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class Dispersion:
    """Perpendicular spread of demand around the route axis."""

    kind: str  # "uniform" | "normal" | "empirical"
    a: float = 0.0
    b: float = 0.0
    sigma: float = 0.0
    samples: tuple = ()

    @classmethod
    def uniform(cls, a: float, b: float) -> "Dispersion":
        if not a < b:
            raise ValueError(f"uniform dispersion requires a < b, got ({a}, {b})")
        return cls("uniform", a=a, b=b)

    @classmethod
    def normal(cls, sigma: float) -> "Dispersion":
        if not sigma > 0:
            raise ValueError(f"normal dispersion requires sigma > 0, got {sigma}")
        return cls("normal", sigma=sigma)

    @classmethod
    def empirical(cls, samples: Sequence[float]) -> "Dispersion":
        samples = tuple(float(s) for s in samples)
        if len(samples) < 2:
            raise ValueError("empirical dispersion requires at least 2 samples")
        return cls("empirical", samples=samples)


def mean_abs_diff(d: Dispersion) -> float:
    """Mean absolute difference of two independent draws, in km.

    uniform(a, b) -> (b - a)/3;  normal(sigma) -> 2*sigma/sqrt(pi);
    empirical -> the all-pairs estimator (every ordered pair i != j),
    computed in O(n log n) from the sorted sample.
    """
    if d.kind == "uniform":
        return (d.b - d.a) / 3.0
    if d.kind == "normal":
        return 2.0 * d.sigma / _SQRT_PI
    if d.kind == "empirical":
        y = np.sort(np.asarray(d.samples, dtype=float))
        n = y.size
        # sum over i<j of (y_j - y_i) = sum_k (2k - n + 1) * y_(k)
        coeff = 2.0 * np.arange(n) - (n - 1)
        pair_sum = float(np.dot(coeff, y))
        return 2.0 * pair_sum / (n * (n - 1))
    raise ValueError(f"unknown dispersion kind {d.kind!r}")


def expected_wait(headway: float, headway_variance: float) -> float:
    """Expected passenger wait: H/2 + variance/(2H), hours."""
    if not headway > 0:
        raise ValueError("non-positive headway")
    if headway_variance < 0:
        raise ValueError("negative headway variance")
    return headway / 2.0 + headway_variance / (2.0 * headway)


def expected_ivtt_fixed(route_length: float, v_d: float, t_s: float, n_stops: int) -> float:
    """Expected fixed-route in-vehicle time from the service-area midpoint.

    Half the route at street speed plus dwell at half the stops.
    """
    if v_d <= 0:
        raise ValueError("non-positive speed")
    return route_length / (2.0 * v_d) + t_s * n_stops / 2.0


def expected_ivtt_amsod(route_length: float, v_d: float, t_s_prime: float, k_j: float, md: float) -> float:
    """Expected on-demand in-vehicle time: adds the y-detour for the
    remaining pickups (k_j/2 of them on average, each costing md km) and
    their dwells."""
    if v_d <= 0:
        raise ValueError("non-positive speed")
    return route_length / (2.0 * v_d) + k_j * md / (2.0 * v_d) + t_s_prime * k_j / 2.0


def amsod_headway_variance(k_j: float, md: float, v_d: float, t_s_prime: float) -> float:
    """Variance of the residual trip time seen by a passenger, hours^2.

    Detours to k_j dispersed pickups plus a dwell per pickup make the
    effective headway noisy; this is the variance feeding expected_wait.
    """
    if v_d <= 0:
        raise ValueError("non-positive speed")
    return (md / v_d) ** 2 * (k_j * k_j + 6.0 * k_j + 2.0) / 12.0 + (k_j / 2.0) * t_s_prime**2


@dataclass(frozen=True)
class CostSummary:
    """Hourly generalized costs in $/h plus the underlying expected times."""

    access: float
    wait: float
    ride: float
    operator: float
    expected_wait_h: float
    expected_ivtt_h: float

    @property
    def total(self) -> float:
        return self.access + self.wait + self.ride + self.operator


def hourly_cost_fixed(
    cost: CostParams,
    grid: GridGeometry,
    svc: ServiceConfig,
    mean_access: float,
    headway_variance: float = 0.0,
) -> CostSummary:
    """Hourly generalized cost of the fixed-route service."""
    if mean_access < 0:
        raise ValueError("negative mean access time")
    lam, h = svc.demand_rate, svc.headway
    wait_h = expected_wait(h, headway_variance)
    ivtt_h = expected_ivtt_fixed(grid.gl_x, svc.v_d, svc.t_s, grid.n_stops)
    return CostSummary(
        access=cost.gamma_a * cost.vot * lam * mean_access,
        wait=cost.gamma_w * cost.vot * lam * wait_h,
        ride=cost.gamma_r * cost.vot * lam * ivtt_h,
        operator=cost.gamma_o * grid.gl_x / h,
        expected_wait_h=wait_h,
        expected_ivtt_h=ivtt_h,
    )


def hourly_cost_amsod(cost: CostParams, grid: GridGeometry, svc: ServiceConfig, md: float) -> CostSummary:
    """Hourly generalized cost of the semi-on-demand service.

    Access cost is zero by construction; the bus comes to the passenger.
    Operator distance gains lambda*md km/h of detour.
    """
    lam, h = svc.demand_rate, svc.headway
    k_j = lam * h
    var = amsod_headway_variance(k_j, md, svc.v_d, svc.t_s_prime)
    wait_h = expected_wait(h, var)
    ivtt_h = expected_ivtt_amsod(grid.gl_x, svc.v_d, svc.t_s_prime, k_j, md)
    return CostSummary(
        access=0.0,
        wait=cost.gamma_w * cost.vot * lam * wait_h,
        ride=cost.gamma_r * cost.vot * lam * ivtt_h,
        operator=cost.gamma_o * (grid.gl_x / h + lam * md),
        expected_wait_h=wait_h,
        expected_ivtt_h=ivtt_h,
    )


def delta_tc_hourly(
    cost: CostParams,
    grid: GridGeometry,
    svc: ServiceConfig,
    md: float,
    mean_access: float,
) -> float:
    """Hourly cost difference, on-demand minus fixed; negative favors
    conversion.

    Assumes comparable total dwell between the services, so the terms are:
    the access saving, the wait-variance penalty, the detour riding
    penalty, and the detour operator penalty.
    """
    lam, h = svc.demand_rate, svc.headway
    k_j = lam * h
    var = amsod_headway_variance(k_j, md, svc.v_d, svc.t_s_prime)
    return (
        cost.vot
        / h
        * (
            -cost.gamma_a * k_j * mean_access
            + cost.gamma_w * (lam / 2.0) * var
            + cost.gamma_r * k_j * k_j * md / (2.0 * svc.v_d)
        )
        + cost.gamma_o * lam * md
    )


def selection_indicator(cost: CostParams, svc: ServiceConfig, md: float, mean_access: float) -> float:
    """Added cost per unit of access-cost saving; below 1 favors conversion."""
    if not mean_access > 0:
        raise ValueError("zero mean access time")
    lam, h = svc.demand_rate, svc.headway
    k_j = lam * h
    var = amsod_headway_variance(k_j, md, svc.v_d, svc.t_s_prime)
    added = (
        cost.gamma_r * k_j * md / (2.0 * svc.v_d)
        + cost.gamma_w * var / (2.0 * h)
        + cost.gamma_o * md / cost.vot
    )
    return added / (cost.gamma_a * mean_access)


def demand_upper_bound(cost: CostParams, svc: ServiceConfig, md: float, mean_access: float) -> float:
    """Largest demand rate (per hour) at which conversion stays favorable.

    Ignores the wait-variance term, so it is the detour-versus-access
    trade: k_j*md/(2 v_d) riding plus md operator detour against the
    access saving.  md = 0 means no detour penalty at all: returns inf.
    """
    if md < 0:
        raise ValueError("negative dispersion")
    if md == 0.0:
        return math.inf
    bound_kj = (
        2.0 * cost.gamma_a * mean_access * svc.v_d / (cost.gamma_r * md)
        - 2.0 * cost.gamma_o * svc.v_d / (cost.gamma_r * cost.vot)
    )
    return max(0.0, bound_kj) / svc.headway


@dataclass(frozen=True)
class ParallelMetrics:
    si: float
    demand_bound: float


def parallel_metrics(
    cost: CostParams,
    svc: ServiceConfig,
    md: float,
    mean_access: float,
    n_p: int,
) -> ParallelMetrics:
    """Screening metrics for n_p parallel bands of the catchment.

    Each band keeps the trip size k_j = lambda*H (demand and frequency
    both split n_p ways) but sees dispersion md/n_p, a band headway of
    n_p*H, and therefore an extra deterministic wait of (n_p - 1)*H/2 per
    passenger relative to the fixed route.  The operator detour term is
    kept at the full md as a conservative allowance for the split routes'
    empty repositioning; with n_p = 1 both formulas reduce exactly to the
    single-route indicator and bound.
    """
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    if n_p == 1:
        return ParallelMetrics(
            si=selection_indicator(cost, svc, md, mean_access),
            demand_bound=demand_upper_bound(cost, svc, md, mean_access),
        )
    if not mean_access > 0:
        raise ValueError("zero mean access time")
    lam, h = svc.demand_rate, svc.headway
    k_j = lam * h
    md_band = md / n_p
    var_band = amsod_headway_variance(k_j, md_band, svc.v_d, svc.t_s_prime)
    added = (
        cost.gamma_w * (n_p - 1) * h / 2.0
        + cost.gamma_w * var_band / (2.0 * n_p * h)
        + cost.gamma_r * k_j * md_band / (2.0 * svc.v_d)
        + cost.gamma_o * md / cost.vot
    )
    si = added / (cost.gamma_a * mean_access)

    if md == 0.0:
        bound = math.inf
    else:
        bound_kj = (
            2.0 * n_p * cost.gamma_a * mean_access * svc.v_d / (cost.gamma_r * md)
            - n_p * (n_p - 1) * cost.gamma_w * h * svc.v_d / (cost.gamma_r * md)
            - 2.0 * n_p * cost.gamma_o * svc.v_d / (cost.gamma_r * cost.vot)
        )
        bound = max(0.0, bound_kj) / h
    return ParallelMetrics(si=si, demand_bound=bound)


@dataclass(frozen=True)
class ZonalCosts:
    n: int
    zone_headway: float
    wait: float
    ride: float
    operator: float

    @property
    def total(self) -> float:
        return self.wait + self.ride + self.operator


@dataclass(frozen=True)
class ZonalPlan:
    table: tuple  # ZonalCosts for n = 1..n_max
    n_continuous: float  # unconstrained real minimizer
    n_opt: int  # closed-form integer optimum
    n_opt_table: int  # brute-force argmin over the table

    @property
    def costs_at_optimum(self) -> ZonalCosts:
        return self.table[self.n_opt - 1]


def _zonal_cost(cost: CostParams, grid: GridGeometry, svc: ServiceConfig, md: float, n: int) -> ZonalCosts:
    lam, h = svc.demand_rate, svc.headway
    k_j = lam * h
    var = amsod_headway_variance(k_j, md, svc.v_d, svc.t_s_prime)
    v_h = svc.v_h if n > 1 else svc.v_d  # unused at n = 1
    wait = cost.gamma_w * cost.vot * lam * (n * h / 2.0 + var / (2.0 * n * h))
    ride = cost.gamma_r * cost.vot * lam * (
        grid.gl_x / (2.0 * n * svc.v_d)
        + (n - 1) * grid.gl_x / (2.0 * n * v_h)
        + k_j * md / (2.0 * svc.v_d)
        + svc.t_s_prime * k_j / 2.0
    )
    operator = cost.gamma_o * (grid.gl_x * (n + 1) / (2.0 * n * h) + lam * md)
    return ZonalCosts(n=n, zone_headway=n * h, wait=wait, ride=ride, operator=operator)


def zonal_plan(
    cost: CostParams,
    grid: GridGeometry,
    svc: ServiceConfig,
    md: float,
    n_max: int,
) -> ZonalPlan:
    """Cost table and optimal zone count for zonal-express operation.

    Zone z of n covers an equal n-th of the corridor with local headway
    n*H; its buses skip the zones nearer downtown on the highway at v_h
    and never enter the zones behind them, which is where the operator
    saving comes from.  The n-dependent part of the hourly cost is
    A*n + B/n with

        A = gamma_w VOT lambda H / 2
        B = gamma_w VOT lambda var/(2H)
            + gamma_r VOT lambda GL_x (1/v_d - 1/v_h) / 2
            + gamma_o GL_x / (2H)

    so the continuous optimum is sqrt(B/A).  The integer optimum compares
    the two neighboring zone counts on the actual cost table (ties take
    the smaller n: fewer zones, simpler service), which provably matches
    the brute-force argmin.  The variance term is kept inside B so the
    closed form minimizes exactly what the table tabulates; with it
    dropped the classical square-root rule reappears.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > 1 and svc.v_h is None:
        raise ValueError("missing v_h: highway speed required when n_max > 1")
    if not svc.demand_rate > 0:
        raise ValueError("zonal planning requires positive demand")

    table = tuple(_zonal_cost(cost, grid, svc, md, n) for n in range(1, n_max + 1))

    lam, h = svc.demand_rate, svc.headway
    k_j = lam * h
    var = amsod_headway_variance(k_j, md, svc.v_d, svc.t_s_prime)
    v_h = svc.v_h if svc.v_h is not None else svc.v_d
    a_coef = cost.gamma_w * cost.vot * lam * h / 2.0
    b_coef = (
        cost.gamma_w * cost.vot * lam * var / (2.0 * h)
        + cost.gamma_r * cost.vot * lam * grid.gl_x * (1.0 / svc.v_d - 1.0 / v_h) / 2.0
        + cost.gamma_o * grid.gl_x / (2.0 * h)
    )
    n_cont = math.sqrt(max(0.0, b_coef) / a_coef)

    lo = min(max(1, math.floor(n_cont)), n_max)
    hi = min(max(1, math.ceil(n_cont)), n_max)
    n_opt = lo if table[lo - 1].total <= table[hi - 1].total else hi

    best = min(range(1, n_max + 1), key=lambda n: (table[n - 1].total, n))
    return ZonalPlan(table=table, n_continuous=n_cont, n_opt=n_opt, n_opt_table=best)


# --- screening conventions ---------------------------------------------------


def screening_dispersion(grid: GridGeometry) -> float:
    """Worst-case demand dispersion: uniform across the widest catchment."""
    return mean_abs_diff(Dispersion.uniform(-grid.max_gl_y, grid.max_gl_y))


def screening_mean_access(svc: ServiceConfig) -> float:
    """Mean access time convention for screening: half the maximum access
    time, i.e. the average walk when demand fills the walkshed evenly."""
    return svc.s_o / 2.0
