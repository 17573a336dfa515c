"""``apnet`` command-line front end.

Exit codes: 0 success, 1 property or bound failure, 2 usage/parse/I-O
error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Optional, TextIO

import numpy as np

from .analysis import BoundEstimate
from .builtins import BUILTINS, builtin
from .errors import ApnetError, DivergenceError, ScenarioError
from .graph import f_matrix_min_eig
from .network import Gains
from .scenario_file import dump_scenario, load_scenario, scenario_to_dict
from .sim import Scenario, Trajectory, dense_times, estimate_bound, integrate
from .verify import run_properties

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("apnet")


def csv_header(n: int) -> list[str]:
    return (["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"xi_{i}" for i in range(1, n + 1)]
            + ["epsilon", "epsilon_valid", "delta_norm", "lyapunov", "bound"])


def write_csv(traj: Trajectory, out: TextIO) -> None:
    """One row per recorded sample, numbers with 12 significant digits."""
    n = traj.x.shape[1]
    w = csv.writer(out, lineterminator="\n")
    w.writerow(csv_header(n))
    fmt = "{:.12g}".format
    for k in range(len(traj)):
        row = [fmt(traj.times[k])]
        row += [fmt(v) for v in traj.x[k]]
        row += [fmt(v) for v in traj.xi[k]]
        row += [fmt(traj.epsilon[k]), "1" if traj.epsilon_valid[k] else "0",
                fmt(traj.delta_norm[k]), fmt(traj.lyapunov[k]), fmt(traj.bound[k])]
        w.writerow(row)


def _load(args) -> Scenario:
    if args.builtin:
        sc = builtin(args.builtin)
    elif args.scenario:
        sc = load_scenario(args.scenario)
    else:
        raise ScenarioError("", "give --builtin NAME or --scenario FILE")
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.duration is not None:
        changes["duration"] = args.duration
    return sc.replace(**changes) if changes else sc


def _emit(traj: Trajectory, path: Optional[str]) -> None:
    if not path:
        return
    if path == "-":
        write_csv(traj, sys.stdout)
        return
    with open(path, "w", newline="") as fh:
        write_csv(traj, fh)
    log.info("wrote %d rows to %s", len(traj), path)


def _fmt_opt(v) -> str:
    return "n/a" if v is None else f"{v:.6g}"


def cmd_simulate(args) -> int:
    sc = _load(args)
    traj = integrate(sc)
    _emit(traj, args.output)
    final_err = float(np.max(np.abs(traj.x[-1] - traj.epsilon[-1])))
    print(f"scenario        {sc.name or args.scenario}")
    print(f"final epsilon   {traj.epsilon[-1]:.9g}")
    print(f"final states    {' '.join(f'{v:.9g}' for v in traj.x[-1])}")
    print(f"max |x_i - eps| {final_err:.3e}")
    print(f"empirical T     {_fmt_opt(traj.settling_time())}")
    if traj.estimate is not None:
        print(f"bound           {traj.estimate.bound:.6g}")
    else:
        print(f"bound           n/a ({traj.bound_note})")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_properties(args.trials, args.seed)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<30} trials={r.trials:<4} failures={r.failures:<3} worst={r.worst:.3e}")
        for note in r.notes:
            print(f"      {note}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _print_estimate(est: BoundEstimate) -> None:
    print(f"eps_dot*        {est.eps_dot_star:.6g}")
    print(f"p1*             {est.p1_star:.6g}")
    print(f"p2*             {est.p2_star:.6g}")
    print(f"lambda_min(F)   {est.lambda_min_f:.6g}")
    print(f"bound           {est.bound:.6g}")


def cmd_bound(args) -> int:
    sc = _load(args)
    if args.gains:
        for a, g in args.gains:
            est = estimate_bound(sc, gains=Gains(a, g, sc.gains.sigma))
            print(f"alpha={a:<8g} gamma={g:<8g} bound={est.bound:.6g}")
        return EXIT_OK
    traj = integrate(sc)
    _emit(traj, args.output)
    if traj.estimate is None:
        print(f"bound not computable: {traj.bound_note}")
        if traj.decomposition is None:
            k1 = sc.weights.k1_diag(dense_times(sc))
            lams = [f_matrix_min_eig(sc.graph.laplacian, k) for k in k1[:: max(1, len(k1) // 1000)]]
            print(f"per-sample lambda_min(L + K1(t)): min {min(lams):.6g}, max {max(lams):.6g}")
        return EXIT_FAIL
    _print_estimate(traj.estimate)
    t_emp = traj.settling_time()
    print(f"empirical T     {_fmt_opt(t_emp)}")
    if t_emp is None:
        print("||delta||^2 still exceeds the bound at the end of the horizon")
        return EXIT_FAIL
    tail = (traj.times >= t_emp) & traj.epsilon_valid
    print(f"max ||delta||^2 for t >= T  {float(np.max(traj.delta_norm[tail] ** 2)):.6g}")
    return EXIT_OK


def cmd_export(args) -> int:
    sc = _load(args)
    if args.output and args.output != "-":
        dump_scenario(sc, args.output)
    else:
        print(json.dumps(scenario_to_dict(sc), indent=2))
    return EXIT_OK


def _gain_pair(text: str):
    try:
        a, g = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ALPHA,GAMMA, got {text!r}") from None
    return a, g


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apnet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_opts(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--builtin", choices=sorted(BUILTINS))
        src.add_argument("--scenario", metavar="FILE")
        sp.add_argument("-o", "--output", metavar="FILE", help="CSV output ('-' for stdout)")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--duration", type=float)

    sp = sub.add_parser("simulate", help="integrate a scenario and write the trajectory CSV")
    scenario_opts(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bound", help="ultimate-bound estimate along a scenario")
    scenario_opts(sp)
    sp.add_argument("--gains", type=_gain_pair, action="append", metavar="ALPHA,GAMMA",
                    help="evaluate the bound for these gains instead (repeatable)")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("verify", help="randomized spectral and equivalence checks")
    sp.add_argument("--trials", type=_positive_int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export", help="write a scenario as JSON")
    scenario_opts(sp)
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    level = os.environ.get("APNET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"apnet: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ScenarioError, KeyError) as exc:
        print(f"apnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"apnet: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except ApnetError as exc:
        print(f"apnet: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
