from dataclasses import replace

import numpy as np
import pytest

from gasdr.errors import ConfigurationError, ValidationError
from gasdr.milp import SolverOptions
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
from gasdr.rh import plan_windows, run_receding_horizon, window_gap_mean
from gasdr.thermal import ControlSchedule, Grid, simulate_trajectory

from conftest import coeffs_of, ramp_ambient, to_house, toy_grid
from oracle import decentralized_optimum, random_toy

EXACT = SolverOptions(gap_tol=1e-9, lp_backend="simplex")


def instance(seed, n_houses, n_blocks):
    rng = np.random.default_rng(seed)
    toys = random_toy(rng, n_houses)
    houses = [to_house(t, f"h{i}") for i, t in enumerate(toys)]
    grid = toy_grid(n_blocks)
    amb = ramp_ambient(grid, float(rng.uniform(255, 275)), float(rng.uniform(250, 270)))
    return toys, houses, grid, amb


def test_plan_examples():
    g = Grid.minutes(1, 3, 24 * 60)
    assert len(plan_windows(24 * 3600.0, 3 * 3600.0, g)) == 8
    assert len(plan_windows(24 * 3600.0, 3600.0, g)) == 24
    p = plan_windows(5 * 3600.0, 3 * 3600.0, g)
    assert p.windows == ((0.0, 10800.0), (10800.0, 18000.0))


@pytest.mark.parametrize("horizon,t_rh", [(86400.0, 10800.0), (3600.0, 540.0), (7200.0, 5400.0), (900.0, 3600.0)])
def test_plan_partitions_horizon(horizon, t_rh):
    g = Grid(60.0, 180.0, horizon)
    p = plan_windows(horizon, t_rh, g)
    assert p.windows[0][0] == 0.0 and p.horizon == horizon
    for (a0, a1), (b0, _) in zip(p.windows, p.windows[1:]):
        assert a1 == b0
        assert a1 - a0 == t_rh
    for a, b in p.windows:
        assert (b - a) % 180.0 == 0 and b - a <= t_rh


def test_plan_rejects_bad_window():
    g = Grid.minutes(1, 3, 60)
    with pytest.raises(ConfigurationError):
        plan_windows(3600.0, 600.0, g)
    with pytest.raises(ConfigurationError):
        plan_windows(3600.0, 0.0, g)


def test_zero_horizon_plan_is_empty_and_rejected():
    g = Grid(60.0, 180.0, 0.0)
    p = plan_windows(0.0, 180.0, g)
    assert len(p) == 0
    _, houses, _, amb = instance(0, 1, 2)
    with pytest.raises(ConfigurationError):
        run_receding_horizon(DECENTRALIZED, houses, coeffs_of(houses), amb, Type1Config(1.0), g, p)


def test_config_kind_mismatch():
    _, houses, grid, amb = instance(0, 1, 2)
    plan = plan_windows(grid.horizon, grid.horizon, grid)
    with pytest.raises(ValidationError):
        run_receding_horizon(DECENTRALIZED, houses, coeffs_of(houses), amb, Type2Config(1.0, 1.0), grid, plan)
    with pytest.raises(ValidationError):
        run_receding_horizon(CENTRALIZED, houses, coeffs_of(houses), amb, Type1Config(1.0), grid, plan)


def test_single_window_equals_direct_solve():
    for seed in range(4):
        _, houses, grid, amb = instance(seed, 2, 4)
        coeffs = coeffs_of(houses)
        plan = plan_windows(grid.horizon, grid.horizon, grid)
        rh = run_receding_horizon(DECENTRALIZED, houses, coeffs, amb, Type1Config(0.8), grid, plan, EXACT)
        direct = [solve_problem(build_decentralized(h, c, amb, Type1Config(0.8), grid), EXACT)
                  for h, c in zip(houses, coeffs)]
        assert rh.schedules == [d.schedules[0] for d in direct]
        assert rh.objective == sum(d.objective for d in direct)

        cfg = Type2Config(0.6, sum(h.burn_rate for h in houses), MAX_DEVIATION)
        rh = run_receding_horizon(CENTRALIZED, houses, coeffs, amb, cfg, grid, plan, EXACT)
        direct = solve_problem(build_centralized(houses, coeffs, amb, cfg, grid), EXACT)
        assert rh.schedules == direct.schedules
        assert rh.objective == direct.objective


def test_multi_window_is_continuous_and_no_better_than_direct():
    for seed in range(4):
        toys, houses, grid, amb = instance(50 + seed, 2, 4)
        coeffs = coeffs_of(houses)
        plan = plan_windows(grid.horizon, 2 * grid.dt_control, grid)
        rh = run_receding_horizon(DECENTRALIZED, houses, coeffs, amb, Type1Config(1.0), grid, plan, EXACT)
        samples = amb.sample(grid.state_times()[:-1])
        assert rh.objective >= decentralized_optimum(toys, samples, 1.0, 3, 60.0, 180.0) - 1e-9
        assert len(rh.windows) == 2 * len(houses)
        for h, c, s, tr in zip(houses, coeffs, rh.schedules, rh.trajectories):
            assert len(s) == grid.n_blocks and len(tr) == grid.n + 1
            for start, _ in plan.windows[1:]:
                k = round(start / grid.dt_state)
                # the next window starts from exactly the state this one ends at
                seg = simulate_trajectory(replace(h, theta0=float(tr.theta[k])), c, amb.shifted(start),
                                          ControlSchedule(s.values[k // 3:]), grid.with_horizon(grid.horizon - start))
                assert seg.theta.tobytes() == tr.theta[k:].tobytes()
            whole = simulate_trajectory(h, c, amb, s, grid).theta
            np.testing.assert_allclose(tr.theta, whole, rtol=0, atol=1e-9)


def test_centralized_rh_respects_cap_in_every_window():
    _, houses, grid, amb = instance(77, 3, 6)
    cfg = Type2Config(0.5, sum(h.burn_rate for h in houses), MEAN_DEVIATION)
    plan = plan_windows(grid.horizon, 4 * grid.dt_control, grid)
    out = run_receding_horizon(CENTRALIZED, houses, coeffs_of(houses), amb, cfg, grid, plan, EXACT)
    assert [(w["start"], w["end"]) for w in out.windows] == list(plan.windows)
    assert block_demand(houses, out.schedules).max() <= cfg.cap + 1e-9
    assert out.gap == window_gap_mean(out)


def test_worker_pool_gives_identical_results():
    _, houses, grid, amb = instance(5, 3, 4)
    coeffs = coeffs_of(houses)
    plan = plan_windows(grid.horizon, 2 * grid.dt_control, grid)
    a = run_receding_horizon(DECENTRALIZED, houses, coeffs, amb, Type1Config(0.9), grid, plan, EXACT)
    b = run_receding_horizon(DECENTRALIZED, houses, coeffs, amb, Type1Config(0.9), grid, plan, EXACT, workers=2)
    assert a.schedules == b.schedules
    assert a.delta.tobytes() == b.delta.tobytes()
