"""Batch front end: ``gasdr --mode ...`` runs a scenario sweep and writes CSVs.

Every run starts with a baseline (thermostat) pass; it is the reference for
savings and supplies the fleet peak D for centralized runs. Output files in
``--out-dir``:

* ``report.csv``: one row per scenario, baseline first;
* ``boxplot.csv``: per-house deviations for every scenario;
* ``demand.csv``: baseline aggregate gas flow; each controlled scenario also
  writes ``demand_<tag>.csv``;
* ``savings.csv``: fleet-size projection of each controlled scenario's saving.

Errors end the process with a single JSON line on stderr and exit code 2
(validation), 3 (I/O) or 4 (internal consistency or solver failure).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .baseline import aggregate_demand, peak_demand, simulate_baseline
from .errors import ConsistencyError, GasDRError, LoadError, SolverError, ValidationError
from .milp import SolverOptions
from .ocp import (
    CENTRALIZED,
    DECENTRALIZED,
    MAX_DEVIATION,
    MEAN_DEVIATION,
    PEAK_TOL,
    Type1Config,
    Type2Config,
    compute_deviation,
    compute_gas,
)
from .report import (
    emit_boxplot_data,
    emit_demand_series,
    emit_run_report,
    emit_savings,
    generate_fleet,
    load_ambient,
    load_fleet,
    make_report,
    polar_vortex_profile,
    savings_projection,
    typical_day_profile,
    write_ambient,
    write_fleet,
)
from .rh import plan_windows, run_receding_horizon
from .thermal import Grid, PhysicalConstants, compute_thermal_coefficients

log = logging.getLogger("gasdr")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_CONSISTENCY = 0, 2, 3, 4
OBJECTIVES = {"mean": MEAN_DEVIATION, "max": MAX_DEVIATION}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _fail("usage", EXIT_VALIDATION, message)


def _fail(kind, code, message, **extra):
    print(json.dumps({"error": kind, "exit_code": code, "message": message, **extra}), file=sys.stderr)
    raise SystemExit(code)


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def run_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gasdr", description="Gas demand-response scenario runner.",
                epilog="Subcommands: 'gasdr generate-fleet', 'gasdr generate-ambient'.")
    p.add_argument("--mode", required=True, choices=("baseline", DECENTRALIZED, CENTRALIZED))
    p.add_argument("--houses", required=True, type=Path, help="houses.csv")
    p.add_argument("--ambient", required=True, type=Path, help="ambient.csv")
    p.add_argument("--horizon-hours", required=True, type=_positive)
    p.add_argument("--dt-state-min", type=_positive, default=1.0)
    p.add_argument("--dt-control-min", type=_positive, default=3.0)
    p.add_argument("--t-rh-hours", type=_positive, default=3.0)
    p.add_argument("--lambda", dest="lambdas", type=float, action="append",
                   help="decentralized trade-off weight; repeat for a sweep")
    p.add_argument("--gamma", dest="gammas", type=float, action="append",
                   help="centralized curtailment factor; repeat for a sweep")
    p.add_argument("--objective", choices=tuple(OBJECTIVES), default="max")
    p.add_argument("--time-limit-s", type=_positive, default=None, help="per MILP solve")
    p.add_argument("--node-limit", type=int, default=None, help="per MILP solve")
    p.add_argument("--gap-tol", type=float, default=1e-4)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--peak-override", type=_positive, default=None,
                   help="use this peak D (kg/s) instead of the baseline peak")
    p.add_argument("--target-houses", type=int, default=10000,
                   help="fleet size for the savings projection")
    p.add_argument("--workers", type=int, default=1,
                   help="processes for per-house decentralized solves")
    p.add_argument("--deterministic", action="store_true",
                   help="write time_s as 0 so repeated runs are byte-identical; "
                        "incompatible with --time-limit-s")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def generate_fleet_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gasdr generate-fleet", description="Write a synthetic houses.csv.")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n-houses", type=int, default=140)
    p.add_argument("--seed", type=int, default=0)
    return p


def generate_ambient_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gasdr generate-ambient", description="Write a synthetic ambient.csv.")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--profile", choices=("typical-day", "polar-vortex"), default="typical-day")
    p.add_argument("--hours", type=_positive, default=24.0)
    p.add_argument("--start-hour", type=float, default=0.0)
    return p


# -- scenario runner ---------------------------------------------------------------

def _check_args(args):
    if args.mode == DECENTRALIZED and not args.lambdas:
        raise ValidationError("--mode decentralized needs at least one --lambda")
    if args.mode == CENTRALIZED and not args.gammas:
        raise ValidationError("--mode centralized needs at least one --gamma")
    if args.deterministic and args.time_limit_s is not None:
        raise ValidationError("--deterministic cannot be combined with --time-limit-s "
                              "(use --node-limit to bound solves reproducibly)")
    if args.node_limit is not None and args.node_limit < 1:
        raise ValidationError("--node-limit must be at least 1")
    if not args.gap_tol >= 0:
        raise ValidationError("--gap-tol must be non-negative")
    if args.workers < 1:
        raise ValidationError("--workers must be at least 1")
    if args.target_houses < 0:
        raise ValidationError("--target-houses must be non-negative")


def _tag(value: float) -> str:
    return repr(float(value))


def run(args) -> int:
    _check_args(args)
    fleet = load_fleet(args.houses)
    ambient = load_ambient(args.ambient)
    grid = Grid.minutes(args.dt_state_min, args.dt_control_min, args.horizon_hours * 60.0)
    if grid.n_blocks == 0:
        raise ValidationError("--horizon-hours gives no control blocks")
    if not ambient.covers(grid.horizon):
        raise ValidationError(f"{args.ambient} covers {ambient.end / 60.0} min, "
                              f"horizon needs {grid.horizon / 60.0} min")
    constants = PhysicalConstants()
    coeffs = [compute_thermal_coefficients(constants, h) for h in fleet]
    for c in coeffs:
        c.check_step(grid.dt_state)
    options = SolverOptions(gap_tol=args.gap_tol, time_limit=args.time_limit_s,
                            node_limit=args.node_limit)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    n = len(fleet)

    def clock(t0):
        return 0.0 if args.deterministic else time.monotonic() - t0

    t0 = time.monotonic()
    base = simulate_baseline(fleet, constants, ambient, grid)
    base_sched = [s for s, _ in base]
    base_delta = [compute_deviation(tr, h.setpoint) for (_, tr), h in zip(base, fleet)]
    base_gas = float(np.sum([compute_gas(s, h.burn_rate, grid) for s, h in zip(base_sched, fleet)]))
    base_demand = aggregate_demand(fleet, base_sched, grid)
    peak = args.peak_override if args.peak_override is not None else peak_demand(base_demand)
    log.info("baseline: gas %.6g kg, peak %.6g kg/s", base_gas, peak)

    reports = [make_report("baseline", base_delta, base_gas, n, clock(t0), 0.0)]
    boxplot = {"baseline": {h.id: d for h, d in zip(fleet, base_delta)}}
    savings = []
    emit_demand_series(base_demand, grid, out / "demand.csv")

    if args.mode != "baseline":
        plan = plan_windows(grid.horizon, args.t_rh_hours * 3600.0, grid)
        trh = _tag(args.t_rh_hours)
        if args.mode == DECENTRALIZED:
            sweep = [(f"decentralized_lambda={_tag(lam)}_trh={trh}h", Type1Config(lam))
                     for lam in args.lambdas]
        else:
            obj = OBJECTIVES[args.objective]
            sweep = [(f"centralized_{args.objective}_gamma={_tag(g)}_trh={trh}h",
                      Type2Config(g, peak, obj)) for g in args.gammas]
        for name, cfg in sweep:
            t0 = time.monotonic()
            res = run_receding_horizon(args.mode, fleet, coeffs, ambient, cfg, grid, plan,
                                       options, workers=args.workers)
            demand = aggregate_demand(fleet, res.schedules, grid)
            if args.mode == CENTRALIZED:
                worst = float(np.max(demand.samples))
                if worst > cfg.cap + PEAK_TOL:
                    raise ConsistencyError(f"{name}: aggregate demand {worst!r} kg/s exceeds "
                                           f"cap {cfg.cap!r} kg/s")
            total = float(np.sum(res.gas))
            elapsed = clock(t0)
            log.info("%s: gas %.6g kg, max deviation %.4g K, %.1f s, avg gap %.3g",
                     name, total, float(np.max(res.delta)), time.monotonic() - t0, res.gap)
            reports.append(make_report(name, res.delta, total, n, elapsed, res.gap))
            boxplot[name] = dict(zip(res.house_ids, res.delta))
            savings.append((name, base_gas, total, n, args.target_houses,
                            savings_projection(base_gas, total, n, args.target_houses)))
            emit_demand_series(demand, grid, out / f"demand_{name}.csv")

    emit_run_report(reports, out / "report.csv")
    emit_boxplot_data(boxplot, out / "boxplot.csv")
    if args.mode != "baseline":
        emit_savings(savings, out / "savings.csv")
    return EXIT_OK


def _generate_fleet(argv) -> int:
    args = generate_fleet_parser().parse_args(argv)
    if args.n_houses < 1:
        raise ValidationError("--n-houses must be at least 1")
    houses, temps = generate_fleet(args.n_houses, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_fleet(houses, args.out, temps)
    return EXIT_OK


def _generate_ambient(argv) -> int:
    args = generate_ambient_parser().parse_args(argv)
    make = typical_day_profile if args.profile == "typical-day" else polar_vortex_profile
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_ambient(make(hours=args.hours, start_hour=args.start_hour), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "generate-fleet":
            return _generate_fleet(argv[1:])
        if argv and argv[0] == "generate-ambient":
            return _generate_ambient(argv[1:])
        args = run_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return run(args)
    except LoadError as exc:
        _fail("load", EXIT_IO, str(exc), path=None if exc.path is None else str(exc.path), row=exc.row)
    except ValidationError as exc:
        _fail("validation", EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail("io", EXIT_IO, str(exc))
    except (ConsistencyError, SolverError) as exc:
        _fail("consistency", EXIT_CONSISTENCY, str(exc))
    except GasDRError as exc:
        _fail("internal", EXIT_CONSISTENCY, str(exc))


if __name__ == "__main__":
    sys.exit(main())
