"""Command line: ``stlbezier {plan,verify,plot,bench}``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .bezier import PiecewiseTrajectory
from .encoder import HorizonError, PlanConfig, build
from .milp import export_model
from .milp.lpformat import InfeasibleAssignment, LPFormatError
from .planner import SolverNotConfigured, diagnose, solve
from .scenarios import BUILTINS, ScenarioError, builtin, load
from .stl import STLSyntaxError
from .verifier import ResolutionTooCoarse, tube_test, verify_trajectory

EXIT_OK, EXIT_VERIFY, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3, 4
DEFAULT_TIME_LIMIT = 300.0

INPUT_ERRORS = (ScenarioError, STLSyntaxError, HorizonError, FileNotFoundError, LPFormatError, KeyError,
                InfeasibleAssignment, SolverNotConfigured, ResolutionTooCoarse, json.JSONDecodeError)


class InputError(Exception):
    pass


def _scenario(args):
    path = getattr(args, "scenario_path", None) or args.scenario
    if args.builtin and path:
        raise InputError("give either --builtin or a scenario file, not both")
    if args.builtin:
        s = builtin(args.builtin)
    elif path:
        s = load(path)
    else:
        raise InputError("no scenario: use --builtin NAME or --scenario FILE")
    changes = {}
    if getattr(args, "segments", None):
        changes["N"] = args.segments
    if getattr(args, "dt", None):
        n = s.T / args.dt
        if abs(n - round(n)) > 1e-9 * n or round(n) < 1:
            raise InputError(f"--dt {args.dt:g} does not divide T={s.T:g}")
        if "N" in changes and changes["N"] != round(n):
            raise InputError("--segments and --dt disagree")
        changes["N"] = int(round(n))
    if getattr(args, "degree", None):
        changes["n"] = args.degree
    if getattr(args, "rho_star", None) is not None:
        changes["rho_star"] = args.rho_star
    if getattr(args, "lam", None) is not None:
        changes["lam"] = args.lam
    if getattr(args, "spec", None):
        changes["formula"] = args.spec
    return s.with_(**changes) if changes else s


def _fmt(v, spec=".4g"):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return format(v, spec)


def _table(rows) -> str:
    w = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


def write_artifacts(out: Path, scenario, plan, resolution: int) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    traj = plan.trajectory
    paths = {
        "trajectory": out / "trajectory.json",
        "samples": out / "samples.csv",
        "robustness": out / "robustness.csv",
    }
    data = traj.to_dict()
    data["scenario"] = scenario.name
    paths["trajectory"].write_text(json.dumps(data, indent=1) + "\n")
    per = min(resolution, 100)
    t, pts = traj.sample(per)
    _, vel = traj.derivative().sample(per)
    _, acc = traj.derivative().derivative().sample(per)
    rho = plan.rho[np.minimum((np.arange(t.size) // per), traj.n_segments - 1)]
    d = traj.dim
    with open(paths["samples"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{j}" for j in range(d)] + [f"v{j}" for j in range(d)]
                   + [f"a{j}" for j in range(d)] + ["rho"])
        for row in zip(t, pts, vel, acc, rho):
            w.writerow([repr(float(row[0]))] + [repr(float(v)) for arr in row[1:4] for v in arr]
                       + [repr(float(row[4]))])
    write_rho(paths["robustness"], plan.r, plan.eps, traj.dt)
    return paths


def write_rho(path, r, eps, dt) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "t_start", "t_end", "r", "eps", "rho"])
        for k, (rk, ek) in enumerate(zip(r, eps)):
            w.writerow([k, repr(k * dt), repr((k + 1) * dt), repr(float(rk)), repr(float(ek)),
                        repr(float(rk - ek))])


def read_rho(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "rho" not in rows[0]:
        raise InputError(f"{path}: expected a robustness CSV with a 'rho' column")
    rows.sort(key=lambda r: int(r["k"]))
    return np.array([float(r["rho"]) for r in rows])


def _verify(traj, scenario, rho, args):
    rep = verify_trajectory(traj, scenario, rho, resolution=args.resolution)
    if args.trials > 0 and rho is not None:
        rep.tube = tube_test(traj, rho, scenario, trials=args.trials, seed=args.seed, resolution=args.resolution)
    if args.strict:
        rep.strict()
    return rep


# -- commands -------------------------------------------------------------

def cmd_plan(args) -> int:
    scenario = _scenario(args)
    out = Path(args.out_dir)
    cfg = PlanConfig.from_scenario(scenario)
    t0 = time.perf_counter()
    enc = build(scenario, cfg)
    for w in enc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.strict and enc.warnings:
        return EXIT_INPUT
    if args.export_lp:
        Path(args.export_lp).parent.mkdir(parents=True, exist_ok=True)
        export_model(enc.model, args.export_lp)
    st = enc.stats()
    rows = [("mission", scenario.name), ("N", enc.N), ("dt", _fmt(enc.dt)),
            ("binaries", st["binaries"]), ("continuous", st["continuous"]),
            ("constraints", st["constraints"])]
    if args.no_solve:
        rows.append(("status", "not solved"))
        if args.export_lp:
            rows.append(("model", args.export_lp))
        print(_table(rows))
        return EXIT_OK
    sol = solve(enc, args.solver, time_limit=args.time_limit, solution_file=args.solution_file)
    wall = time.perf_counter() - t0
    rows += [("status", sol.status), ("objective", _fmt(sol.objective)), ("gap", _fmt(sol.gap)),
             ("nodes", sol.nodes)]
    if sol.status == "infeasible":
        rows.append(("wall time [s]", _fmt(wall, ".2f")))
        print(_table(rows))
        if not args.no_diagnose:
            print("diagnosis (dropping one top-level conjunct at a time):")
            for part, verdict in diagnose(scenario, cfg, time_limit=args.time_limit):
                print(f"  {verdict:<24} {part}")
        return EXIT_INFEASIBLE
    if not sol.ok:
        rows.append(("wall time [s]", _fmt(wall, ".2f")))
        print(_table(rows))
        return EXIT_LIMIT
    plan = enc.decode(sol.x)
    paths = write_artifacts(out, scenario, plan, args.resolution)
    rep = _verify(plan.trajectory, scenario, plan.rho, args)
    rep.to_json(out / "report.json")
    paths["report"] = out / "report.json"
    if args.plot:
        from .plotting import plot_plan

        if scenario.dim == 2:
            plot_plan(scenario, out / "plot.svg", plan.trajectory, plan.rho)
            paths["plot"] = out / "plot.svg"
    rows += [("rho (min, max)", f"({plan.rho.min():.2f}, {plan.rho.max():.2f})"),
             ("stl margin", _fmt(rep.stl_margin)),
             ("wall time [s]", _fmt(wall, ".2f")),
             ("verification", "pass" if rep.passed else "FAIL: " + ", ".join(rep.failed()))]
    if rep.tube is not None:
        rows.append(("tube trials", f"{rep.tube.trials - rep.tube.failures}/{rep.tube.trials} satisfied"
                                    f" ({rep.tube.label})"))
    rows.append(("artifacts", str(out)))
    print(_table(rows))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_verify(args) -> int:
    scenario = _scenario(args)
    traj = PiecewiseTrajectory.load(args.trajectory)
    rho = read_rho(args.rho) if args.rho else None
    rep = _verify(traj, scenario, rho, args)
    if args.out:
        rep.to_json(args.out)
    rows = [(c.name, f"{'pass' if c.passed else 'FAIL'}  {_fmt(c.value, '.6g')}  (limit {_fmt(c.limit, '.6g')})")
            for c in rep.checks]
    if rep.tube is not None:
        rows.append(("tube", f"{'pass' if rep.tube.passed else 'FAIL'}  {rep.tube.failures} failures in"
                             f" {rep.tube.trials} trials ({rep.tube.label})"))
    rows.append(("result", "pass" if rep.passed else "FAIL"))
    print(_table(rows))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_plot(args) -> int:
    from .plotting import plot_plan

    scenario = _scenario(args)
    if scenario.dim != 2:
        raise InputError("plot needs a 2-D scenario")
    traj = PiecewiseTrajectory.load(args.trajectory) if args.trajectory else None
    rho = read_rho(args.rho) if args.rho else None
    plot_plan(scenario, args.out, traj, rho)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    missions = args.mission or list(BUILTINS)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in missions:
        row = {"mission": name, "T": "", "N": "", "runtime_s": "", "rho_min": "", "rho_max": "", "binaries": "",
               "nodes": "", "status": "", "verified": ""}
        try:
            s = builtin(name)
            if args.segments:
                s = s.with_(N=args.segments)
            row["T"], row["N"] = s.T, s.N
            t0 = time.perf_counter()
            enc = build(s)
            sol = solve(enc, args.solver, time_limit=args.time_limit)
            row["runtime_s"] = round(time.perf_counter() - t0, 2)
            row["binaries"] = enc.model.n_binary
            row["nodes"] = sol.nodes
            row["status"] = sol.status
            if sol.ok:
                plan = enc.decode(sol.x)
                row["rho_min"] = round(float(plan.rho.min()), 4)
                row["rho_max"] = round(float(plan.rho.max()), 4)
                rep = verify_trajectory(plan.trajectory, s, plan.rho, resolution=args.resolution)
                if args.trials > 0:
                    rep.tube = tube_test(plan.trajectory, plan.rho, s, trials=args.trials, seed=args.seed,
                                         resolution=args.resolution)
                row["verified"] = "pass" if rep.passed else "fail"
        except Exception as exc:  # one failing mission must not stop the table
            row["status"] = f"error: {exc}"
        rows.append(row)
    fields = list(rows[0])
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    md = ["| " + " | ".join(fields[:4]) + " | (min, max) rho | " + " | ".join(fields[6:]) + " |",
          "|" + "---|" * (len(fields) - 1)]
    for r in rows:
        rho = f"({r['rho_min']}, {r['rho_max']})" if r["rho_min"] != "" else "-"
        md.append("| " + " | ".join(str(r[k]) for k in fields[:4]) + f" | {rho} | "
                  + " | ".join(str(r[k]) for k in fields[6:]) + " |")
    (out / "bench.md").write_text("\n".join(md) + "\n")
    print("\n".join(md))
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def _scenario_flags(p):
    p.add_argument("scenario_path", nargs="?", help="scenario JSON file")
    p.add_argument("--builtin", choices=BUILTINS)
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--rho-star", type=float, dest="rho_star")
    p.add_argument("--spec", help="inline STL formula overriding the scenario's")


def _verify_flags(p):
    p.add_argument("--resolution", type=int, default=1000, help="samples per segment (>= 100)")
    p.add_argument("--trials", type=int, default=200, help="robustness-tube trials (0 disables)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--strict", action="store_true", help="treat warnings as failures")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stlbezier", description="STL motion planning with Bezier curves")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="encode, solve, verify and write artifacts")
    _scenario_flags(p)
    p.add_argument("--segments", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--export-lp", dest="export_lp")
    p.add_argument("--no-solve", action="store_true", dest="no_solve")
    p.add_argument("--no-diagnose", action="store_true", dest="no_diagnose")
    p.add_argument("--solver", choices=("builtin", "external"), default="builtin")
    p.add_argument("--solution-file", dest="solution_file")
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, dest="time_limit")
    p.add_argument("--out-dir", default="out", dest="out_dir")
    p.add_argument("--plot", action="store_true", help="also write plot.svg")
    _verify_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="check a trajectory against a scenario")
    _scenario_flags(p)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--rho", help="robustness CSV written by plan")
    p.add_argument("--out", help="write the JSON report here")
    _verify_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render a scenario and trajectory as SVG")
    _scenario_flags(p)
    p.add_argument("--trajectory")
    p.add_argument("--rho")
    p.add_argument("--out", default="plot.svg")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="run the builtin missions and tabulate")
    p.add_argument("--mission", action="append", choices=BUILTINS)
    p.add_argument("--segments", type=int)
    p.add_argument("--solver", choices=("builtin", "external"), default="builtin")
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, dest="time_limit")
    p.add_argument("--out-dir", default="bench", dest="out_dir")
    _verify_flags(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ValueError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
