"""Regenerate the bundled scenario files and CTA stop-boardings fixtures.

The CTA fixtures approximate the public "Avg. Weekday Bus Stop Boardings
in October 2012" dataset (Chicago data portal): stop spacing and totals
are realistic for the two corridors, catchment widths follow the
parallel-service geography (route 126 is pinned to ~200 m by neighboring
routes; route 84's walkshed widens west of the competing services).
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

from semibus.ingest import parse_boardings, build_route_model
from semibus.model import CostParams, GridGeometry, Scenario, ServiceConfig, save_scenario

DATA = Path(__file__).resolve().parents[1] / "src" / "semibus" / "data"


def model_scenario(name, gl_y, s_o_min, n_parallel):
    n_stops = 25
    return Scenario(
        name=name,
        cost=CostParams(gamma_a=2.0, gamma_w=1.5, gamma_r=1.0, gamma_o=1.0, vot=16.5),
        grid=GridGeometry(
            l_x=0.2,
            l_y=0.1,
            gl_x=10.0,
            gl_y=gl_y,
            stop_chainages=tuple(round(0.4 * i, 10) for i in range(n_stops)),
            stop_weights=(1.0 / n_stops,) * n_stops,
            d_xs=0.4,
        ),
        service=ServiceConfig(
            headway=15.0 / 60.0,
            capacity=30,
            v_d=35.0,
            v_w=4.0,
            t_s=0.4 / 60.0,
            t_s_prime=0.4 / 60.0,
            demand_rate=60.0,
            s_o=s_o_min / 60.0,
            n_parallel=n_parallel,
        ),
        seed=1729,
        replications=10_000,
    )


def cta_template(name, headway_min, demand_rate, s_o_min):
    # placeholder two-stop grid; ingest replaces it
    return Scenario(
        name=name,
        cost=CostParams(gamma_a=2.0, gamma_w=1.5, gamma_r=1.0, gamma_o=1.0, vot=16.5),
        grid=GridGeometry(
            l_x=0.2,
            l_y=0.1,
            gl_x=1.0,
            gl_y=0.2,
            stop_chainages=(0.0, 1.0),
            stop_weights=(0.5, 0.5),
            d_xs=0.2,
        ),
        service=ServiceConfig(
            headway=headway_min / 60.0,
            capacity=30,
            v_d=30.0,
            v_w=4.0,
            t_s=0.33 / 60.0,
            t_s_prime=0.4 / 60.0,
            demand_rate=demand_rate,
            s_o=s_o_min / 60.0,
        ),
        seed=1729,
        replications=10_000,
    )


def write_cta126_csv(path):
    n = 64
    spacing = 10.9 / (n - 1)
    rows = []
    for i in range(n):
        chainage = round(i * spacing, 6)
        boardings = 16 + round(8 * math.sin(i / 3.1)) + (6 if i % 7 == 0 else 0) + i // 9
        rows.append((f"126-{i:03d}", "126,20" if i % 11 == 0 else "126", chainage, boardings, ""))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stop_id", "routes", "chainage_km", "boardings", "catchment_km"])
        w.writerows(rows)


def write_cta84_csv(path):
    n = 41
    rows = []
    for i in range(n):
        chainage = round(i * 0.2, 6)
        x = chainage
        if x <= 3.0:
            catchment = 0.8
        elif x <= 5.4:
            catchment = 0.4
        else:
            catchment = 0.2
        boardings = 22 + round(7 * math.sin(i / 2.3)) + (5 if i % 5 == 0 else 0)
        rows.append((f"84-{i:03d}", "84", chainage, boardings, catchment))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stop_id", "routes", "chainage_km", "boardings", "catchment_km"])
        w.writerows(rows)


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    save_scenario(model_scenario("model1", gl_y=8.0 / 60.0 * 4.0, s_o_min=8.0, n_parallel=1), DATA / "model1.json")
    save_scenario(model_scenario("model2", gl_y=2.0, s_o_min=30.0, n_parallel=2), DATA / "model2.json")

    write_cta126_csv(DATA / "cta126_boardings.csv")
    write_cta84_csv(DATA / "cta84_boardings.csv")

    rec126 = parse_boardings(DATA / "cta126_boardings.csv", "126")
    scn126 = build_route_model(rec126, cta_template("cta126", 15.0, 80.0, 4.5), default_catchment_km=0.2)
    save_scenario(scn126, DATA / "cta126.json")

    rec84 = parse_boardings(DATA / "cta84_boardings.csv", "84")
    scn84 = build_route_model(rec84, cta_template("cta84", 20.0, 50.0, 13.5), default_catchment_km=0.2)
    save_scenario(scn84, DATA / "cta84.json")
    print("bundled data written to", DATA)


if __name__ == "__main__":
    main()
