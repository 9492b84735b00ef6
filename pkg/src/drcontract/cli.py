"""Command-line front end.

    drcontract prices    --config C --out DIR
    drcontract table2    --config C --out DIR
    drcontract sweep     --config C --out DIR --sweep AXIS=lo:hi:n[,AXIS=lo:hi:n]
    drcontract simulate  --config C --out DIR --regime sb --paths N --steps M --seed S
    drcontract pde       --config C --out DIR --regime sb --fkind exp --k1 V --grid nx,nt
    drcontract calibrate --config C --out DIR --trial FILE.csv

Without --config the packaged nominal calibration is used.  CSV files carry a
header row, JSON files hold scalar summaries; floats have 10 significant
digits.  Exit status is 0 on success and 2 on bad input.
"""

import argparse
import os
import sys
import time

from . import calibration as cal
from . import config as cfg
from . import contracts as cc
from . import experiments as ex
from . import hjb_pde as hp
from . import simulation as sim
from .scalar_min import SolverError

REGIMES = ("fb", "sb", "sb0", "none")


class UsageError(ValueError):
    pass


def _grid(text):
    try:
        nx, nt = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected nx,nt") from None
    if nx < 5 or nt < 1:
        raise argparse.ArgumentTypeError("need nx >= 5 and nt >= 1")
    return nx, nt


def _positive_int(text):
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="drcontract", description="Demand-response contract solvers.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value parameter file (default: nominal calibration)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("prices", parents=[common], help="energy and volatility price curves")
    sub.add_parser("table2", parents=[common], help="three-regime comparison table")

    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    sw.add_argument("--sweep", required=True, help="AXIS=lo:hi:n[,AXIS=lo:hi:n], axes " + ",".join(ex.SWEEP_AXES))
    sw.add_argument("--fkind", choices=(hp.LINEAR, hp.EXP_CONCAVE), default=hp.EXP_CONCAVE)
    sw.add_argument("--grid", type=_grid, default=None, help="PDE grid nx,nt for k1 sweeps")

    si = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of a closed-form contract")
    si.add_argument("--regime", choices=REGIMES, default="sb")
    si.add_argument("--paths", type=_positive_int, default=100_000)
    si.add_argument("--steps", type=_positive_int, default=550)
    si.add_argument("--seed", type=int, default=0)

    pd = sub.add_parser("pde", parents=[common], help="finite-difference value function")
    pd.add_argument("--regime", choices=REGIMES, default="sb")
    pd.add_argument("--fkind", choices=(hp.LINEAR, hp.EXP_CONCAVE), default=hp.LINEAR)
    pd.add_argument("--k1", type=float, default=None)
    pd.add_argument("--grid", type=_grid, default=(401, 2000))

    ca = sub.add_parser("calibrate", parents=[common], help="re-estimate sigma and mu from a trial file")
    ca.add_argument("--trial", required=True, help="CSV with household_id,timestamp,consumption_kW,event_flag")
    ca.add_argument("--max-gap", type=float, default=1.0, help="hours separating two events")
    return parser


def _params(args):
    return cfg.load_config(args.config) if args.config else cfg.load_default()


def cmd_prices(params, args):
    energy, vol = ex.prices(params)
    cfg.write_csv(os.path.join(args.out, "prices_energy.csv"), energy[0], energy[1:])
    cfg.write_csv(os.path.join(args.out, "prices_volatility.csv"), vol[0], vol[1:])
    return ["prices_energy.csv", "prices_volatility.csv"]


def cmd_table2(params, args):
    cfg.write_json(os.path.join(args.out, "table2.json"), ex.table2(params))
    return ["table2.json"]


def cmd_sweep(params, args):
    try:
        axes = ex.parse_sweep(args.sweep)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    grid = hp.default_grid(params, *args.grid) if args.grid else None
    rows = ex.run_sweep(params, axes, grid=grid, kind=args.fkind)
    header = list(rows[0])
    cfg.write_csv(os.path.join(args.out, "sweep.csv"), header, [[r[k] for k in header] for r in rows])
    return ["sweep.csv"]


def cmd_simulate(params, args):
    sol = cc.solve(params, args.regime)
    ens = sim.simulate(params, sol, n_paths=args.paths, n_steps=args.steps, seed=args.seed, keep_paths=False)
    out = sim.summary(ens, sol, params)
    out["analytic"] = ex.table_column(sol) if args.regime != "none" else sol.stats
    name = f"simulate_{args.regime}.json"
    cfg.write_json(os.path.join(args.out, name), out)
    return [name]


def cmd_pde(params, args):
    if args.fkind == hp.EXP_CONCAVE and (args.k1 is None or args.k1 <= 0):
        raise UsageError("--fkind exp needs a positive --k1")
    k1 = args.k1 if args.fkind == hp.EXP_CONCAVE else None
    grid = hp.default_grid(params, *args.grid)
    summary = {"regime": args.regime, "fkind": args.fkind, "k1": k1, "nx": grid.nx, "nt": grid.nt}
    if args.regime == "none":
        sol = hp.solve_reservation(params, args.fkind, grid, k1)
    elif args.regime == "fb":
        sol = hp.solve_first_best(params, args.fkind, grid, k1)
    elif args.regime == "sb":
        sol = hp.solve_second_best(params, args.fkind, grid, k1)
    else:
        # the linear no-responsiveness contract, facing the true energy value
        schedule = cc.second_best_no_resp(params).schedule
        sol = hp.solve_consumer_response(params, schedule, args.fkind, grid, k1)
        producer = hp.evaluate_producer(params, schedule, sol, grid)
        summary["producer_value"] = producer.value_at(params.x0)
    summary["value_at_x0"] = sol.value_at(params.x0)
    summary["mean_path_volatility"] = hp.mean_path_volatility(params, sol)
    summary["a_max_binding"] = sol.a_max_binding
    summary["growth_constant"] = sol.growth_constant
    if args.fkind == hp.LINEAR and args.regime != "sb0":
        summary["closed_form"] = (cc.reservation_ce(params) if args.regime == "none"
                                  else cc.solve(params, args.regime).value)
    rows = zip(sol.x, sol.v[0], sol.z_field[0], sol.gamma_field[0])
    base = f"pde_{args.regime}"
    cfg.write_csv(os.path.join(args.out, base + ".csv"), ("x", "v", "z", "gamma"), rows)
    cfg.write_json(os.path.join(args.out, base + ".json"), summary)
    return [base + ".csv", base + ".json"]


def cmd_calibrate(params, args):
    agg = cal.ingest_trial_csv(args.trial, max_gap=args.max_gap)
    fitted = cal.calibrate(agg, params)
    cfg.atomic_write(os.path.join(args.out, "calibrated.cfg"), cfg.format_config(fitted))
    cfg.write_json(os.path.join(args.out, "calibration.json"),
                   dict(agg, sigma=fitted.sigma[0], mu_bar=fitted.mu_bar))
    return ["calibrated.cfg", "calibration.json"]


COMMANDS = {
    "prices": cmd_prices, "table2": cmd_table2, "sweep": cmd_sweep,
    "simulate": cmd_simulate, "pde": cmd_pde, "calibrate": cmd_calibrate,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        params = _params(args)
        start = time.perf_counter()
        written = COMMANDS[args.command](params, args)
    except (cfg.ConfigError, cal.CalibrationError, UsageError, OSError) as exc:
        print(f"drcontract {args.command}: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"drcontract {args.command}: solver failed: {exc}", file=sys.stderr)
        return 1
    for name in written:
        print(os.path.join(args.out, name))
    print(f"# {args.command} done in {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
