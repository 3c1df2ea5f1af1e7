"""End-to-end planning: build the model, solve it, decode the trajectory."""
from __future__ import annotations

import copy
import os
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .encoder import DecodedPlan, Encoding, PlanConfig, build
from .milp import MilpModel, Solution, branch_and_bound, export_model, import_solution
from .milp.lpformat import InfeasibleAssignment, read_assignment
from .stl import And

SOLVER_ENV = "STLBEZIER_EXTERNAL_SOLVER"
DEFAULT_EXTERNAL = f"{shlex.quote(sys.executable)} -m stlbezier.milp.highs_solve {{lp}} {{sol}}"


class SolverNotConfigured(RuntimeError):
    pass


@dataclass
class PlanResult:
    encoding: Encoding
    solution: Solution
    plan: Optional[DecodedPlan] = None
    build_time: float = 0.0
    diagnosis: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def ok(self) -> bool:
        return self.solution.ok and self.plan is not None

    def summary(self) -> dict:
        st = self.encoding.stats()
        out = {
            "name": self.encoding.scenario.name,
            "status": self.status,
            "N": self.encoding.N,
            "T": self.encoding.config.T,
            "binaries": st["binaries"],
            "continuous": st["continuous"],
            "constraints": st["constraints"],
            "objective": self.solution.objective,
            "gap": self.solution.gap,
            "nodes": self.solution.nodes,
            "solve_time": self.solution.wall_time,
            "build_time": self.build_time,
        }
        if self.plan is not None:
            out["rho_min"] = float(self.plan.rho.min())
            out["rho_max"] = float(self.plan.rho.max())
        return out


def external_command() -> Optional[str]:
    return os.environ.get(SOLVER_ENV) or None


def solve_external(model: MilpModel, command: Optional[str] = None, workdir=None,
                   time_limit: Optional[float] = None) -> Solution:
    """Export ``model``, run ``command`` (with ``{lp}``/``{sol}`` placeholders) and read the result back."""
    command = command or external_command()
    if not command:
        raise SolverNotConfigured(f"set {SOLVER_ENV} to a command template using {{lp}} and {{sol}}")
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        lp_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "model.sol"
        export_model(model, lp_path)
        cmd = command.format(lp=shlex.quote(str(lp_path)), sol=shlex.quote(str(sol_path)))
        proc = subprocess.run(cmd, shell=True, capture_output=True, text=True, timeout=time_limit)
        elapsed = time.perf_counter() - t0
        if proc.returncode == 2:
            return Solution("infeasible", wall_time=elapsed, message=proc.stderr.strip())
        if proc.returncode not in (0, 4) or not sol_path.exists():
            return Solution("limit", wall_time=elapsed,
                            message=f"external solver exited with {proc.returncode}: {proc.stderr.strip()}")
        sol = import_solution(model, sol_path)
    sol.wall_time = elapsed
    # exit 4 with a solution file means a limit stopped the solver after it found an incumbent
    sol.status = "optimal" if proc.returncode == 0 else "feasible"
    sol.message = "external solver"
    return sol


def load_solution(model: MilpModel, path) -> Solution:
    """A validated solution file; optimality is unknown, so the status is ``feasible``."""
    return import_solution(model, path)


def warm_start(enc: Encoding, time_limit=None, node_limit=None, **bnb_kw) -> Solution:
    """First feasible plan of the model without the robustness reward.

    Dropping the reward removes the incentive for the relaxation to inflate
    every ``r_k`` through fractional selectors, so dives reach integral
    points far sooner; the robustness floor still holds for the result.
    """
    m = copy.deepcopy(enc.model)
    m.set_objective(enc.smoothness_objective())
    return branch_and_bound(m, time_limit=time_limit, node_limit=node_limit, first_solution=True, **bnb_kw)


def solve(enc: Encoding, solver: str = "builtin", time_limit=None, node_limit=None, gap_tol: float = 1e-6,
          solution_file=None, command: Optional[str] = None, warm: bool = True, **bnb_kw) -> Solution:
    if solution_file is not None:
        return load_solution(enc.model, solution_file)
    if solver == "builtin":
        t0 = time.perf_counter()
        first = None
        if warm and enc.config.lam > 0 and enc.model.n_binary:
            first = warm_start(enc, time_limit, node_limit, **bnb_kw)
            if first.status == "infeasible":
                return first
            if time_limit is not None:
                time_limit = max(time_limit - (time.perf_counter() - t0), 0.0)
            if node_limit is not None:
                node_limit = max(node_limit - first.nodes, 1)
        sol = branch_and_bound(enc.model, gap_tol=gap_tol, node_limit=node_limit, time_limit=time_limit,
                               incumbent=first.x if first is not None and first.ok else None, **bnb_kw)
        if first is not None:
            sol.nodes += first.nodes
            sol.wall_time = time.perf_counter() - t0
        return sol
    if solver == "external":
        return solve_external(enc.model, command, time_limit=time_limit)
    raise ValueError(f"unknown solver {solver!r}")


def plan(scenario, config: Optional[PlanConfig] = None, solver: str = "builtin", time_limit=None,
         node_limit=None, gap_tol: float = 1e-6, solution_file=None, command=None, **bnb_kw) -> PlanResult:
    t0 = time.perf_counter()
    enc = build(scenario, config)
    built = time.perf_counter() - t0
    sol = solve(enc, solver, time_limit, node_limit, gap_tol, solution_file, command, **bnb_kw)
    res = PlanResult(enc, sol, build_time=built)
    if sol.ok:
        res.plan = enc.decode(sol.x)
    return res


def top_conjuncts(f):
    return list(f.args) if isinstance(f, And) else [f]


def diagnose(scenario, config: Optional[PlanConfig] = None, time_limit=None, node_limit=None, **kw) -> list:
    """Which top-level conjuncts break feasibility.

    Each conjunct is dropped in turn; a conjunct whose removal makes the
    rest feasible is reported as blocking. When no single removal helps,
    the robustness floor and dynamics alone are tested with ``True``.
    Returns a list of ``(conjunct_text, verdict)`` pairs.
    """
    from .stl import TrueF, to_text

    f = scenario.stl()
    parts = top_conjuncts(f)
    out = []
    for i, part in enumerate(parts):
        rest = [p for j, p in enumerate(parts) if j != i]
        g = TrueF() if not rest else (rest[0] if len(rest) == 1 else And(tuple(rest)))
        enc = build(scenario, config, formula=g)
        sol = branch_and_bound(enc.model, time_limit=time_limit, node_limit=node_limit, **kw)
        if sol.ok:
            out.append((to_text(part), "blocking"))
        elif sol.status == "infeasible":
            out.append((to_text(part), "not sufficient alone"))
        else:
            out.append((to_text(part), "undecided (limit)"))
    if not any(v == "blocking" for _, v in out):
        enc = build(scenario, config, formula=TrueF())
        sol = branch_and_bound(enc.model, time_limit=time_limit, node_limit=node_limit, **kw)
        if sol.status == "infeasible":
            out.append(("True", "infeasible: the robustness floor or dynamics cannot be met at all"))
    return out


class BezierStlPlanner(BaseEstimator):
    """Estimator-style wrapper: ``fit`` solves a scenario, ``predict`` samples the plan at times ``t``."""

    def __init__(self, segments=None, degree=None, rho_star=None, lam=None, Q=None, R=None, solver="builtin",
                 time_limit=None, gap_tol=1e-6):
        self.segments = segments
        self.degree = degree
        self.rho_star = rho_star
        self.lam = lam
        self.Q = Q
        self.R = R
        self.solver = solver
        self.time_limit = time_limit
        self.gap_tol = gap_tol

    def _config(self, scenario) -> PlanConfig:
        over = {k: v for k, v in (("N", self.segments), ("n", self.degree), ("rho_star", self.rho_star),
                                   ("lam", self.lam), ("Q", self.Q), ("R", self.R)) if v is not None}
        return PlanConfig.from_scenario(scenario, **over)

    def fit(self, scenario, y=None):
        res = plan(scenario, self._config(scenario), solver=self.solver, time_limit=self.time_limit,
                   gap_tol=self.gap_tol)
        if not res.ok:
            raise RuntimeError(f"planning failed with status {res.status!r}")
        self.result_ = res
        self.trajectory_ = res.plan.trajectory
        self.rho_ = res.plan.rho
        self.objective_ = res.solution.objective
        return self

    def predict(self, t) -> np.ndarray:
        return self.trajectory_(np.asarray(t, dtype=float))


__all__ = ["BezierStlPlanner", "InfeasibleAssignment", "PlanResult", "SOLVER_ENV", "DEFAULT_EXTERNAL",
           "SolverNotConfigured", "diagnose", "load_solution", "plan", "read_assignment", "solve",
           "solve_external", "top_conjuncts"]
