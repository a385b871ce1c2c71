"""End-to-end acceptance checks, one test per criterion.

Each criterion is a producer that writes its results as CSV into a directory
and returns a verdict. The determinism criterion runs every producer a
second time and compares the files byte for byte. Each test prints a
``PASS``/``FAIL`` line, and the lines are repeated in the terminal summary.
"""
import csv
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from gasdr.baseline import aggregate_demand, peak_demand, simulate_baseline
from gasdr.cli import main as cli_main
from gasdr.milp import FEASIBLE_TIME_LIMIT, OPTIMAL, SolverOptions
from gasdr.ocp import (
    CENTRALIZED,
    DECENTRALIZED,
    MAX_DEVIATION,
    MEAN_DEVIATION,
    Type1Config,
    Type2Config,
    block_demand,
    build_centralized,
    build_decentralized,
    solve_problem,
)
from gasdr.report import (
    emit_boxplot_data,
    emit_demand_series,
    emit_run_report,
    emit_savings,
    generate_fleet,
    make_report,
    polar_vortex_profile,
    savings_projection,
    typical_day_profile,
)
from gasdr.rh import plan_windows, run_receding_horizon
from gasdr.thermal import (
    AmbientSeries,
    ControlSchedule,
    Grid,
    PhysicalConstants,
    compute_thermal_coefficients,
    fahrenheit_to_kelvin,
    simulate_trajectory,
)

from conftest import ACCEPTANCE_LINES, to_house
from oracle import centralized_optimum, decentralized_optimum, random_toy

pytestmark = pytest.mark.slow

EXACT = SolverOptions(gap_tol=1e-9, lp_backend="simplex")
CONSTANTS = PhysicalConstants()

# per-window budget for the 140-house centralized sweep: the node limit binds
# long before the time limit on this machine, which keeps the run reproducible
C3_TIME_LIMIT_S = 120.0
C3_NODE_LIMIT = 30
C8_NODE_LIMIT = 60


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def ambient_from(profile):
    return AmbientSeries(tuple(60.0 * m for m, _ in profile),
                         tuple(fahrenheit_to_kelvin(t) for _, t in profile))


def toy_instance(rng, n_houses, n_blocks):
    toys = random_toy(rng, n_houses)
    houses = [to_house(t, f"h{i}") for i, t in enumerate(toys)]
    grid = Grid(60.0, 180.0, 180.0 * n_blocks)
    a, b = float(rng.uniform(250, 275)), float(rng.uniform(250, 275))
    amb = AmbientSeries((0.0, grid.horizon), (a, b))
    # the oracle gets its own interpolation of the same straight line
    samples = np.interp(60.0 * np.arange(grid.n), [0.0, grid.horizon], [a, b])
    return toys, houses, grid, amb, samples


def coeffs_of(houses):
    return [compute_thermal_coefficients(CONSTANTS, h) for h in houses]


# -- producers --------------------------------------------------------------------------

def produce_1(out: Path):
    """Random toys, both builders and all objectives, against enumeration."""
    rows, worst = [], 0.0
    t0 = time.monotonic()
    for i in range(210):
        rng = np.random.default_rng(10_000 + i)
        kind = ("decentralized", "mean", "max")[i % 3]
        n_houses, n_blocks = int(rng.integers(1, 4)), int(rng.integers(2, 7))
        toys, houses, grid, amb, samples = toy_instance(rng, n_houses, n_blocks)
        coeffs = coeffs_of(houses)
        if kind == "decentralized":
            lam = float(rng.choice([0.0, 0.5, 0.65, 0.85, 1.0, rng.uniform()]))
            got = sum(solve_problem(build_decentralized(h, c, amb, Type1Config(lam), grid), EXACT).objective
                      for h, c in zip(houses, coeffs))
            ref = decentralized_optimum(toys, samples, lam, 3, 60.0, 180.0)
            param = lam
        else:
            gamma = float(rng.uniform(0.3, 1.0))
            cfg = Type2Config(gamma, sum(h.burn_rate for h in houses),
                              MEAN_DEVIATION if kind == "mean" else MAX_DEVIATION)
            got = solve_problem(build_centralized(houses, coeffs, amb, cfg, grid), EXACT).objective
            ref = centralized_optimum(toys, samples, cfg.cap, kind, 3, 60.0, 180.0)
            param = gamma
        worst = max(worst, abs(got - ref))
        rows.append((i, kind, n_houses, n_blocks, param, got, ref))
    elapsed = time.monotonic() - t0
    write_table(out / "c1_oracle.csv", ("instance", "kind", "houses", "blocks", "param", "milp", "oracle"), rows)
    kinds = {r[1] for r in rows}
    ok = len(rows) >= 200 and worst <= 1e-6 and elapsed < 120 and kinds == {"decentralized", "mean", "max"}
    return ok, f"{len(rows)} toys, max |milp - oracle| = {worst:.3g} (tol 1e-6), {elapsed:.1f} s (limit 120 s)"


def produce_2(out: Path):
    """Euler error against the constant-input closed form as the step halves."""
    from gasdr.thermal import HouseParams

    house = HouseParams("ref", 500.0, 200.0, 0.11, 6e-5, 285.0, 293.0)
    c = compute_thermal_coefficients(CONSTANTS, house)
    amb_k = 265.0
    ss = amb_k + c.beta * house.burn_rate / c.alpha
    rows = []
    for dt in (120.0, 60.0, 30.0):
        g = Grid(dt, 360.0, 24 * 3600.0)
        tr = simulate_trajectory(house, c, AmbientSeries.constant(amb_k, g.horizon),
                                 ControlSchedule((1,) * g.n_blocks), g)
        exact = ss + (house.theta0 - ss) * np.exp(-c.alpha * tr.times())
        rows.append((dt, float(np.max(np.abs(tr.theta - exact)))))
    ratios = [rows[0][1] / rows[1][1], rows[1][1] / rows[2][1]]
    write_table(out / "c2_ode.csv", ("dt_s", "max_error_k"), rows)
    ok = all(1.5 <= r <= 2.5 for r in ratios)
    return ok, f"error ratios {ratios[0]:.4f}, {ratios[1]:.4f} (band [1.5, 2.5])"


def produce_3(out: Path):
    """140-house cold snap, centralized max-deviation peak shaving."""
    t0 = time.monotonic()
    fleet, _ = generate_fleet(140, seed=0)
    amb = ambient_from(polar_vortex_profile(hours=6))
    grid = Grid.minutes(1, 3, 6 * 60)
    coeffs = coeffs_of(fleet)
    base = simulate_baseline(fleet, CONSTANTS, amb, grid)
    base_demand = aggregate_demand(fleet, [s for s, _ in base], grid)
    peak = peak_demand(base_demand)
    emit_demand_series(base_demand, grid, out / "c3_demand_baseline.csv")
    plan = plan_windows(grid.horizon, 3600.0, grid)
    options = SolverOptions(time_limit=C3_TIME_LIMIT_S, node_limit=C3_NODE_LIMIT)
    reports, box, windows, details, ok = [], {}, [], [], True
    for gamma in (0.85, 0.90, 0.95):
        cfg = Type2Config(gamma, peak, MAX_DEVIATION)
        res = run_receding_horizon(CENTRALIZED, fleet, coeffs, amb, cfg, grid, plan, options)
        demand = aggregate_demand(fleet, res.schedules, grid)
        excess = float(np.max(demand.samples)) - cfg.cap
        name = f"centralized_max_gamma={gamma!r}"
        feasible = all(w["status"] in (OPTIMAL, FEASIBLE_TIME_LIMIT) for w in res.windows)
        ok &= feasible and excess <= 1e-9
        slowest = max(w["elapsed"] for w in res.windows)
        details.append(f"gamma {gamma}: max demand - cap = {excess:.3g} kg/s, avg gap {100 * res.gap:.1f}%, "
                       f"slowest window {slowest:.0f} s")
        reports.append(make_report(name, res.delta, float(np.sum(res.gas)), len(fleet), 0.0, res.gap))
        box[name] = dict(zip(res.house_ids, res.delta))
        windows += [(name, w["start"], w["end"], w["status"], w["gap"], w["nodes"]) for w in res.windows]
        emit_demand_series(demand, grid, out / f"c3_demand_{name}.csv")
    emit_run_report(reports, out / "c3_report.csv")
    emit_boxplot_data(box, out / "c3_boxplot.csv")
    write_table(out / "c3_windows.csv", ("scenario", "start_s", "end_s", "status", "gap", "nodes"), windows)
    elapsed = time.monotonic() - t0
    ok &= elapsed < 1800
    return ok, f"peak D = {peak:.6g} kg/s; " + "; ".join(details) + f"; {elapsed:.0f} s (limit 1800 s)"


def produce_4(out: Path):
    """Exact decentralized solves across the trade-off weight."""
    t0 = time.monotonic()
    fleet, _ = generate_fleet(5, seed=1)
    amb = ambient_from(typical_day_profile(hours=2, start_hour=4))
    grid = Grid.minutes(1, 3, 60)
    coeffs = coeffs_of(fleet)
    rows = []
    for lam in (0.65, 0.75, 0.85, 0.95, 1.0):
        outs = [solve_problem(build_decentralized(h, c, amb, Type1Config(lam), grid), EXACT)
                for h, c in zip(fleet, coeffs)]
        if any(o.status != OPTIMAL for o in outs):
            return False, f"lambda {lam}: not every house solved to optimality"
        rows.append((lam, float(sum(o.delta[0] for o in outs)), float(sum(o.gas[0] for o in outs))))
    write_table(out / "c4_pareto.csv", ("lambda", "total_delta_k", "total_gas_kg"), rows)
    elapsed = time.monotonic() - t0
    tol = 1e-9
    mono = all(b[1] <= a[1] + tol and b[2] >= a[2] - tol for a, b in zip(rows, rows[1:]))
    ok = mono and elapsed < 600
    pts = ", ".join(f"({lam}: {d:.4f} K, {g:.4f} kg)" for lam, d, g in rows)
    return ok, f"delta non-increasing and gas non-decreasing: {mono}; {pts}; {elapsed:.0f} s"


def produce_5(out: Path):
    """Mean vs max objective, and tightening the cap."""
    t0 = time.monotonic()
    gammas = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
    rows, ok = [], True
    for i in range(20):
        rng = np.random.default_rng(20_000 + i)
        _, houses, grid, amb, _ = toy_instance(rng, int(rng.integers(2, 4)), int(rng.integers(3, 6)))
        coeffs = coeffs_of(houses)
        peak = sum(h.burn_rate for h in houses)
        best = {}
        for kind in (MEAN_DEVIATION, MAX_DEVIATION):
            best[kind] = [solve_problem(build_centralized(houses, coeffs, amb, Type2Config(g, peak, kind), grid),
                                        EXACT).objective for g in gammas]
            ok &= all(b >= a - 1e-9 for a, b in zip(best[kind], best[kind][1:]))
        ok &= all(m <= x + 1e-9 for m, x in zip(best[MEAN_DEVIATION], best[MAX_DEVIATION]))
        for g, m, x in zip(gammas, best[MEAN_DEVIATION], best[MAX_DEVIATION]):
            rows.append((i, g, m, x))
    write_table(out / "c5_ordering.csv", ("instance", "gamma", "mean_objective", "max_objective"), rows)
    elapsed = time.monotonic() - t0
    ok &= elapsed < 300
    return ok, f"20 toys x {len(gammas)} gammas: mean <= max and gamma-monotone: {ok}; {elapsed:.1f} s"


def chained_exactly(house, coeff, amb, sched, traj, grid, plan):
    """Each window's states are its own simulation from the previous window's last state.

    The stitched run also agrees with one uninterrupted simulation, up to the
    rounding of interpolating the shifted ambient series.
    """
    spb = grid.steps_per_block
    for start, end in plan.windows:
        k0, k1 = round(start / grid.dt_state), round(end / grid.dt_state)
        part = ControlSchedule(sched.values[k0 // spb:k1 // spb])
        seg = simulate_trajectory(replace(house, theta0=float(traj.theta[k0])), coeff, amb.shifted(start),
                                  part, grid.with_horizon(end - start))
        if seg.theta.tobytes() != traj.theta[k0:k1 + 1].tobytes():
            return False
    whole = simulate_trajectory(house, coeff, amb, sched, grid).theta
    return float(np.max(np.abs(whole - traj.theta))) <= 1e-9


def produce_6(out: Path):
    """Receding horizon against the direct full-horizon solve."""
    t0 = time.monotonic()
    rows, ok = [], True
    for i in range(20):
        rng = np.random.default_rng(30_000 + i)
        toys, houses, grid, amb, samples = toy_instance(rng, int(rng.integers(1, 4)), int(rng.integers(4, 7)))
        coeffs = coeffs_of(houses)
        if i % 2 == 0:
            kind, cfg = DECENTRALIZED, Type1Config(float(rng.choice([0.85, 1.0])))
            direct = [solve_problem(build_decentralized(h, c, amb, cfg, grid), EXACT) for h, c in zip(houses, coeffs)]
            direct_obj = sum(d.objective for d in direct)
            direct_sched = [d.schedules[0] for d in direct]
            oracle = decentralized_optimum(toys, samples, cfg.lam, 3, 60.0, 180.0)
        else:
            peak = sum(h.burn_rate for h in houses)
            kind, cfg = CENTRALIZED, Type2Config(float(rng.uniform(0.5, 0.9)), peak, MAX_DEVIATION)
            direct = solve_problem(build_centralized(houses, coeffs, amb, cfg, grid), EXACT)
            direct_obj, direct_sched = direct.objective, direct.schedules
            oracle = centralized_optimum(toys, samples, cfg.cap, "max", 3, 60.0, 180.0)
        single = run_receding_horizon(kind, houses, coeffs, amb, cfg, grid,
                                      plan_windows(grid.horizon, grid.horizon, grid), EXACT)
        plan = plan_windows(grid.horizon, 2 * grid.dt_control, grid)
        multi = run_receding_horizon(kind, houses, coeffs, amb, cfg, grid, plan, EXACT)
        same = single.objective == direct_obj and single.schedules == direct_sched
        above = multi.objective >= direct_obj - 1e-9 and abs(direct_obj - oracle) <= 1e-6
        continuous = all(chained_exactly(h, c, amb, s, tr, grid, plan)
                         for h, c, s, tr in zip(houses, coeffs, multi.schedules, multi.trajectories))
        if kind == CENTRALIZED:
            above &= block_demand(houses, multi.schedules).max() <= cfg.cap + 1e-9
        ok &= same and above and continuous
        rows.append((i, kind, direct_obj, single.objective, multi.objective, same, above, continuous))
    write_table(out / "c6_rh.csv", ("instance", "kind", "direct", "single_window", "multi_window",
                                    "single_equals_direct", "multi_at_least_direct", "continuous"), rows)
    elapsed = time.monotonic() - t0
    ok &= elapsed < 300
    return ok, f"20 toys: single window == direct, multi >= direct, continuity exact: {ok}; {elapsed:.1f} s"


def produce_7(out: Path):
    value = savings_projection(0.07, 0.0, 1, 10000)
    fleet_value = savings_projection(140 * 0.07 + 10.0, 10.0, 140, 10000)
    emit_savings([("per_house", 0.07, 0.0, 1, 10000, value)], out / "c7_savings.csv")
    ok = value == 700.0 and fleet_value == pytest.approx(700.0, abs=1e-9)
    return ok, f"0.07 kg/house x 10000 houses = {value!r} kg (expected 700.0)"


def produce_8(out: Path):
    """CLI run on a mild day: decentralized control vs the thermostat."""
    t0 = time.monotonic()
    assert cli_main(["generate-fleet", "--out", str(out / "houses.csv"), "--n-houses", "20"]) == 0
    assert cli_main(["generate-ambient", "--out", str(out / "ambient.csv"), "--profile", "typical-day"]) == 0
    code = cli_main(["--mode", "decentralized", "--houses", str(out / "houses.csv"),
                     "--ambient", str(out / "ambient.csv"), "--horizon-hours", "24", "--t-rh-hours", "3",
                     "--lambda", "0.85", "--node-limit", str(C8_NODE_LIMIT), "--deterministic",
                     "--out-dir", str(out / "c8")])
    rows = {r["scenario"]: r for r in read_table(out / "c8" / "report.csv")}
    base, dr = rows["baseline"], rows["decentralized_lambda=0.85_trh=3.0h"]
    bg, dg = float(base["total_gas_kg"]), float(dr["total_gas_kg"])
    bm, dm = float(base["mean_f"]), float(dr["mean_f"])
    elapsed = time.monotonic() - t0
    ok = code == 0 and dg <= bg and dm <= bm + 0.5 and elapsed < 900
    return ok, (f"gas {dg:.4f} kg vs baseline {bg:.4f} kg; mean deviation {dm:.3f} F vs baseline "
                f"{bm:.3f} F (+0.5 allowed); {elapsed:.0f} s (limit 900 s)")


PRODUCERS = {1: produce_1, 2: produce_2, 3: produce_3, 4: produce_4,
             5: produce_5, 6: produce_6, 7: produce_7, 8: produce_8}


@pytest.fixture(scope="module")
def first_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance_run1")
    cache = {}

    def get(number):
        if number not in cache:
            out = root / f"c{number}"
            out.mkdir()
            cache[number] = (out, PRODUCERS[number](out))
        return cache[number]

    return get


@pytest.mark.parametrize("number", sorted(PRODUCERS))
def test_criterion(number, first_runs):
    _, (ok, detail) = first_runs(number)
    assert record(number, ok, detail), detail


def csv_files(root: Path):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_criterion_9_determinism(first_runs, tmp_path):
    mismatched, compared = [], 0
    for number in sorted(PRODUCERS):
        out1, _ = first_runs(number)
        out2 = tmp_path / f"c{number}"
        out2.mkdir()
        PRODUCERS[number](out2)
        a, b = csv_files(out1), csv_files(out2)
        compared += len(a)
        if a != b or not a:
            mismatched.append(number)
    ok = not mismatched
    detail = (f"{compared} CSV files from criteria 1-8 re-emitted byte-identically" if ok
              else f"criteria {mismatched} emitted different bytes on repeat")
    assert record(9, ok, detail), detail
