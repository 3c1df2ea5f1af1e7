"""Compile a scenario into a mixed-integer linear program.

Decision variables per segment ``k``: control points ``c[k, i, :]``, per-axis
velocity and acceleration bounds ``v[k]``, ``a[k]``, the end-point clearance
``r[k]`` and the curve-excursion allowance ``eps[k]``. The segment robustness
is ``rho[k] = r[k] - eps[k]``.

Satisfaction literals are continuous variables in ``[0, 1]``; a literal at 1
forces its constraint group. Binaries appear only where a disjunction has to
pick a branch (``|``, ``F``, ``U`` and the faces of an avoided polytope).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import linprog

from .bezier import PiecewiseTrajectory
from .geometry import Polytope, support
from .milp.model import LinExpr, MilpModel, ModelError
from .stl import (And, Always, Eventually, FalseF, Formula, NegPred, Or, Pred, TrueF, Until,
                  formula_horizon, is_nnf)

WINDOW_EPS = 1e-9
# the floor row carries this margin so LP feasibility tolerances cannot leave r - eps below rho*
FLOOR_MARGIN = 1e-6


class HorizonError(ValueError):
    pass


@dataclass(frozen=True)
class PlanConfig:
    N: int
    T: float
    rho_star: float
    v_max: np.ndarray
    a_max: np.ndarray
    start: np.ndarray
    n: int = 5
    lam: float = 1.0
    Q: float = 0.01
    R: float = 0.01
    pin_start: bool = True
    pin_start_velocity: bool = True
    pin_start_acceleration: bool = True
    pin_end_velocity: bool = False
    allow_horizon_overrun: bool = False

    def __post_init__(self):
        for key in ("v_max", "a_max", "start"):
            arr = np.array(getattr(self, key), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.n < 3:
            raise ValueError("degree n must be at least 3")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.rho_star > 0:
            raise ValueError("rho_star must be positive")
        if np.any(self.v_max <= 0) or np.any(self.a_max <= 0):
            raise ValueError("v_max and a_max must be positive")
        if min(self.lam, self.Q, self.R) < 0:
            raise ValueError("objective weights must be nonnegative")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @classmethod
    def from_scenario(cls, s, **overrides) -> "PlanConfig":
        base = dict(N=s.N, T=s.T, n=s.n, rho_star=s.rho_star, v_max=s.v_max, a_max=s.a_max,
                    start=s.start, lam=s.lam, Q=s.Q, R=s.R,
                    allow_horizon_overrun=s.allow_horizon_overrun)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def with_(self, **changes) -> "PlanConfig":
        return replace(self, **changes)


@dataclass
class SegmentVars:
    k: int
    c: np.ndarray  # (n+1, d) variable indices
    v: np.ndarray  # (d,)
    a: np.ndarray  # (d,)
    r: int
    eps: int

    def all_indices(self) -> np.ndarray:
        return np.concatenate([self.c.ravel(), self.v, self.a, [self.r, self.eps]])


@dataclass(frozen=True)
class SatLiteral:
    var: int
    formula: Optional[Formula]
    k: int


def _x(model: MilpModel, idx) -> LinExpr:
    return LinExpr.var(int(idx))


def big_m(model: MilpModel, expr: LinExpr) -> float:
    """Smallest ``M >= 0`` with ``expr + M >= 0`` on the whole variable box."""
    low = expr.const
    for j, coef in expr.terms.items():
        lo, hi = model.lb[j], model.ub[j]
        bound = coef * lo if coef > 0 else coef * hi
        if not math.isfinite(bound):
            raise ModelError(f"cannot size big-M: variable {model.var_names[j]!r} is unbounded")
        low += bound
    return max(0.0, -low)


def add_implied(model: MilpModel, expr: LinExpr, z: Optional[int], group: str = "",
                log: Optional[list] = None) -> None:
    """Enforce ``expr >= 0`` whenever literal ``z`` is 1 (always when ``z`` is None).

    Relaxed rows read ``expr + M (1 - z) >= 0``; ``log`` collects
    ``(row, expr, z)`` so the rows can be re-sized after bounds tighten.
    """
    if z is None or model.lb[z] >= 1.0:
        model.add_constr(expr, ">=", 0.0, group=group)
        return
    M = big_m(model, expr)
    if M <= 0.0:
        return  # never violated inside the variable box
    row = model.add_constr(expr - LinExpr.var(z, M), ">=", -M, group=group)
    if log is not None:
        log.append((row, expr, z))


def apply_big_m(model: MilpModel, groups: List[List[LinExpr]], guard: Optional[int] = None,
                prefix: str = "y", group: str = "", log: Optional[list] = None,
                priority: int = 0) -> List[int]:
    """At least one of ``groups`` (each a list of ``expr >= 0``) holds when ``guard`` is 1.

    A single group is emitted as plain constraints implied by the guard and
    needs no binary. Otherwise each group gets a binary selector ``y_i`` with
    ``sum y_i >= guard`` (``>= 1`` without a guard).
    """
    if len(groups) == 1:
        for e in groups[0]:
            add_implied(model, e, guard, group, log)
        return []
    ys = []
    for g in groups:
        y = model.add_var(f"{prefix}{model.n_vars}", 0.0, 1.0, kind="binary", role="face",
                          priority=priority)
        ys.append(y)
        for e in g:
            add_implied(model, e, y, group, log)
    cover = LinExpr({y: 1.0 for y in ys})
    if guard is None:
        model.add_constr(cover, ">=", 1.0, group=group)
    else:
        model.add_constr(cover - LinExpr.var(guard), ">=", 0.0, group=group)
    return ys


def encode_continuity(model: MilpModel, seg_vars: List[SegmentVars]) -> int:
    """C0/C1/C2 joints on a uniform grid: equal end points, first and second differences."""
    count = 0
    for left, right in zip(seg_vars[:-1], seg_vars[1:]):
        cl, cr = left.c, right.c
        n = cl.shape[0] - 1
        for j in range(cl.shape[1]):
            model.add_constr(_x(model, cl[n, j]) - _x(model, cr[0, j]), "=", 0.0, group="continuity")
            d1 = (_x(model, cl[n, j]) - _x(model, cl[n - 1, j])) - (_x(model, cr[1, j]) - _x(model, cr[0, j]))
            model.add_constr(d1, "=", 0.0, group="continuity")
            d2 = (_x(model, cl[n, j]) - 2.0 * _x(model, cl[n - 1, j]) + _x(model, cl[n - 2, j])) \
                - (_x(model, cr[2, j]) - 2.0 * _x(model, cr[1, j]) + _x(model, cr[0, j]))
            model.add_constr(d2, "=", 0.0, group="continuity")
            count += 3
    return count


def encode_dynamics(model: MilpModel, seg_vars: List[SegmentVars], dt: float) -> int:
    """Control-point difference bounds implying ``|y'| <= v_k`` and ``|y''| <= a_k`` per axis."""
    count = 0
    for sv in seg_vars:
        c = sv.c
        n, d = c.shape[0] - 1, c.shape[1]
        kv = dt / n
        ka = dt * dt / (n * (n - 1))
        for j in range(d):
            for i in range(n):
                diff = _x(model, c[i + 1, j]) - _x(model, c[i, j])
                lim = LinExpr.var(int(sv.v[j]), kv)
                model.add_constr(lim - diff, ">=", 0.0, group="velocity")
                model.add_constr(lim + diff, ">=", 0.0, group="velocity")
                count += 2
            for i in range(n - 1):
                dd = _x(model, c[i + 2, j]) - 2.0 * _x(model, c[i + 1, j]) + _x(model, c[i, j])
                lim = LinExpr.var(int(sv.a[j]), ka)
                model.add_constr(lim - dd, ">=", 0.0, group="acceleration")
                model.add_constr(lim + dd, ">=", 0.0, group="acceleration")
                count += 2
    return count


class Encoding:
    """A model under construction plus the bookkeeping needed to decode it."""

    def __init__(self, scenario, config: PlanConfig):
        self.scenario = scenario
        self.config = config
        self.regions: Dict[str, Polytope] = dict(scenario.regions)
        self.workspace = scenario.workspace
        self.d = scenario.workspace.dim
        if config.v_max.size != self.d or config.a_max.size != self.d or config.start.size != self.d:
            raise ValueError(f"dynamic limits and start must have dimension {self.d}")
        for name, P in self.regions.items():
            if P.dim != self.d:
                raise ValueError(f"region {name!r} has dimension {P.dim}, workspace has {self.d}")
        self.model = MilpModel(getattr(scenario, "name", "plan").replace("-", "_") or "plan")
        self.seg: List[SegmentVars] = []
        self.memo: Dict[tuple, SatLiteral] = {}
        self.cap_literal: Dict[int, int] = {}
        self.warnings: List[str] = []
        self.relaxed: list = []  # big-M rows as (row, expr, literal)
        self._margin_cache: dict = {}
        self.top: Optional[SatLiteral] = None
        self.formula: Optional[Formula] = None

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def dt(self) -> float:
        return self.config.dt

    # -- variables ----------------------------------------------------------

    def add_segment_vars(self) -> List[SegmentVars]:
        m, cfg, d = self.model, self.config, self.d
        lo, hi = self.workspace.lo, self.workspace.hi
        cap = self.workspace.diameter
        for k in range(cfg.N):
            c = np.array([[m.add_var(f"c_{k}_{i}_{j}", lo[j], hi[j], role="segment") for j in range(d)]
                          for i in range(cfg.n + 1)], dtype=np.int64)
            v = np.array([m.add_var(f"v_{k}_{j}", 0.0, cfg.v_max[j], role="segment") for j in range(d)])
            a = np.array([m.add_var(f"a_{k}_{j}", 0.0, cfg.a_max[j], role="segment") for j in range(d)])
            r = m.add_var(f"r_{k}", 0.0, cap, role="segment")
            eps = m.add_var(f"eps_{k}", 0.0, cap, role="segment")
            self.seg.append(SegmentVars(k, c, v, a, r, eps))
        return self.seg

    def new_literal(self, f: Optional[Formula], k: int, forced: bool) -> SatLiteral:
        z = self.model.add_var(f"z{self.model.n_vars}_{k}", 1.0 if forced else 0.0, 1.0, role="literal")
        return SatLiteral(z, f, k)

    def force(self, lit: SatLiteral) -> None:
        self.model.lb[lit.var] = 1.0

    def imply(self, parent: SatLiteral, child: SatLiteral) -> None:
        """``parent = 1`` forces ``child = 1``."""
        if parent.var == child.var:
            return
        if self.model.lb[parent.var] >= 1.0:
            self.force(child)
        self.model.add_constr(_x(self.model, child.var) - _x(self.model, parent.var), ">=", 0.0,
                              group="logic")

    # -- predicates ---------------------------------------------------------

    def segment_caps(self, k: int, z: SatLiteral) -> None:
        """End-point velocity caps and the excursion allowance, shared by every predicate at ``k``."""
        if k not in self.cap_literal:
            w = self.new_literal(None, k, forced=False)
            self.cap_literal[k] = w.var
            m, sv, dt, d = self.model, self.seg[k], self.dt, self.d
            n = self.config.n
            cap = dt * dt / (2.0 * n)
            gain = 3.0 * math.sqrt(d) * dt * dt / 8.0
            exprs = []
            for j in range(d):
                for i0, i1 in ((0, 1), (n - 1, n)):
                    diff = _x(m, sv.c[i1, j]) - _x(m, sv.c[i0, j])
                    lim = LinExpr.var(int(sv.a[j]), cap)
                    exprs.append(lim - diff)
                    exprs.append(lim + diff)
                exprs.append(_x(m, sv.eps) - LinExpr.var(int(sv.a[j]), gain))
            if self.model.lb[z.var] >= 1.0:
                self.force(w)
            for e in exprs:
                add_implied(m, e, w.var, "caps", self.relaxed)
            self.imply(z, w)
        else:
            w = SatLiteral(self.cap_literal[k], None, k)
            self.imply(z, w)

    def encode_predicate(self, k: int, region: str, polarity: str, z: SatLiteral) -> SatLiteral:
        try:
            P = self.regions[region]
        except KeyError:
            raise KeyError(f"unknown region {region!r}") from None
        m, sv, n = self.model, self.seg[k], self.config.n
        self.segment_caps(k, z)

        def row_expr(i, j, sign):
            # sign=+1: inside margin of row i at end point j; sign=-1: outside margin
            h = P.H[i] / P.row_norms[i]
            e = LinExpr({int(sv.c[j, q]): -sign * h[q] for q in range(self.d) if h[q] != 0.0},
                        sign * P.b[i] / P.row_norms[i])
            return e - _x(m, sv.r)

        if polarity == "inside":
            for i in range(P.n_rows):
                for j in (0, n):
                    add_implied(m, row_expr(i, j, 1.0), z.var, f"pred:{region}", self.relaxed)
        elif polarity == "outside":
            groups = [[row_expr(i, j, -1.0) for j in (0, n)] for i in range(P.n_rows)]
            if P.n_rows == 1:
                for e in groups[0]:
                    add_implied(m, e, z.var, f"pred:!{region}", self.relaxed)
            else:
                apply_big_m(m, groups, guard=z.var, prefix="y", group=f"pred:!{region}", log=self.relaxed,
                            priority=-k)
        else:
            raise ValueError(f"polarity must be 'inside' or 'outside', got {polarity!r}")
        return z

    # -- formulas -----------------------------------------------------------

    def window(self, f, k):
        a, b = f.interval.a / self.dt, f.interval.b / self.dt
        last = self.N - 1
        if isinstance(f, Always):
            return k + math.floor(a + WINDOW_EPS), min(k + 1 + math.floor(b + WINDOW_EPS), last)
        return k + math.ceil(a - WINDOW_EPS), min(k + math.floor(b + WINDOW_EPS), last)

    def disjunction(self, z: SatLiteral, options: List[List[SatLiteral]]) -> None:
        """``z = 1`` forces every literal of at least one option."""
        if not options:
            self.model.ub[z.var] = 0.0
            return
        if len(options) == 1:
            for lit in options[0]:
                self.imply(z, lit)
            return
        ys = []
        for opt in options:
            y = self.model.add_var(f"y{self.model.n_vars}", 0.0, 1.0, kind="binary", role="choice",
                                    priority=1)
            ys.append(y)
            for lit in opt:
                self.imply(SatLiteral(y, None, z.k), lit)
        cover = LinExpr({y: 1.0 for y in ys})
        self.model.add_constr(cover - _x(self.model, z.var), ">=", 0.0, group="logic")

    def encode_formula(self, f: Formula, k: int, forced: bool = False) -> SatLiteral:
        key = (f, k)
        if key in self.memo:
            lit = self.memo[key]
            if forced:
                self.force(lit)
            return lit
        if not 0 <= k < self.N:
            raise IndexError(f"segment index {k} outside 0..{self.N - 1}")
        z = self.new_literal(f, k, forced)
        self.memo[key] = z
        if isinstance(f, TrueF):
            pass
        elif isinstance(f, FalseF):
            self.model.ub[z.var] = 0.0
        elif isinstance(f, Pred):
            self.encode_predicate(k, f.name, "inside", z)
        elif isinstance(f, NegPred):
            self.encode_predicate(k, f.name, "outside", z)
        elif isinstance(f, And):
            for child in f.args:
                self.imply(z, self.encode_formula(child, k, forced))
        elif isinstance(f, Or):
            self.disjunction(z, [[self.encode_formula(c, k)] for c in f.args])
        elif isinstance(f, Always):
            lo, hi = self.window(f, k)
            if lo > hi:
                msg = f"window of {f} at segment {k} lies past the horizon; treated as vacuously true"
                self.warnings.append(msg)
                warnings.warn(msg, stacklevel=2)
            for j in range(lo, hi + 1):
                self.imply(z, self.encode_formula(f.arg, j, forced))
        elif isinstance(f, Eventually):
            lo, hi = self.window(f, k)
            self.disjunction(z, [[self.encode_formula(f.arg, j)] for j in range(lo, hi + 1)])
        elif isinstance(f, Until):
            lo, hi = self.window(f, k)
            options = []
            for j in range(lo, hi + 1):
                opt = [self.encode_formula(f.right, j)]
                opt += [self.encode_formula(f.left, i) for i in range(k, j + 1)]
                options.append(opt)
            self.disjunction(z, options)
        else:
            raise TypeError(f"cannot encode {type(f).__name__}; formula must be in negation normal form")
        return z

    # -- bound tightening ---------------------------------------------------

    def max_margin(self, region: str, inside: bool) -> float:
        """Largest clearance any workspace point can have for the predicate."""
        key = (region, inside)
        if key not in self._margin_cache:
            P = self.regions[region]
            lo, hi = self.workspace.lo, self.workspace.hi
            Hn = P.H / P.row_norms[:, None]
            bn = P.b / P.row_norms
            if inside:
                # max t  s.t.  Hn x + t <= bn,  lo <= x <= hi
                c = np.zeros(self.d + 1)
                c[-1] = -1.0
                A = np.hstack([Hn, np.ones((P.n_rows, 1))])
                res = linprog(c, A_ub=A, b_ub=bn, bounds=list(zip(lo, hi)) + [(None, None)],
                              method="highs")
                val = -res.fun if res.status == 0 else -np.inf
            else:
                val = max(support(Hn[i], lo, hi) - bn[i] for i in range(P.n_rows))
            self._margin_cache[key] = float(val)
        return self._margin_cache[key]

    def tighten(self) -> None:
        """Cap ``r_k`` by the predicates certainly enforced at ``k`` and re-size every big-M row."""
        m = self.model
        cap = np.full(self.N, self.workspace.diameter)
        for (f, k), lit in self.memo.items():
            if m.lb[lit.var] >= 1.0 and isinstance(f, (Pred, NegPred)):
                cap[k] = min(cap[k], self.max_margin(f.name, isinstance(f, Pred)))
        for sv, ub in zip(self.seg, cap):
            m.ub[sv.r] = max(ub, 0.0)
            m.ub[sv.eps] = max(ub - self.config.rho_star, 0.0)
        for row, expr, z in self.relaxed:
            if m.lb[z] >= 1.0:
                m.replace_row(row, expr, 0.0)
            else:
                M = big_m(m, expr)
                m.replace_row(row, expr - LinExpr.var(z, M), -M)

    # -- objective and decoding ---------------------------------------------

    def smoothness_objective(self) -> LinExpr:
        """The objective without the robustness reward (``lam = 0``)."""
        cfg = self.config
        obj = LinExpr()
        for sv in self.seg:
            obj = obj + LinExpr({int(i): cfg.Q for i in sv.v}) + LinExpr({int(i): cfg.R for i in sv.a})
        return obj

    def encode_objective(self) -> LinExpr:
        cfg = self.config
        obj = self.smoothness_objective()
        for sv in self.seg:
            obj = obj + LinExpr({sv.r: -cfg.lam, sv.eps: cfg.lam})
        self.model.set_objective(obj)
        return obj

    def decode(self, x) -> "DecodedPlan":
        x = np.asarray(x, dtype=float)
        controls = np.stack([x[sv.c] for sv in self.seg])
        r = np.array([x[sv.r] for sv in self.seg])
        eps = np.array([x[sv.eps] for sv in self.seg])
        return DecodedPlan(
            trajectory=PiecewiseTrajectory(controls, self.dt),
            r=r, eps=eps, rho=r - eps,
            v=np.stack([x[sv.v] for sv in self.seg]),
            a=np.stack([x[sv.a] for sv in self.seg]),
        )

    def stats(self) -> dict:
        out = self.model.stats()
        out["segment_vars"] = self.model.count(role="segment")
        out["literals"] = self.model.count(role="literal")
        out["memo_pairs"] = len(self.memo)
        return out


@dataclass
class DecodedPlan:
    trajectory: PiecewiseTrajectory
    r: np.ndarray
    eps: np.ndarray
    rho: np.ndarray
    v: np.ndarray
    a: np.ndarray
    extra: dict = field(default_factory=dict)


def build(scenario, config: Optional[PlanConfig] = None, formula: Optional[Formula] = None) -> Encoding:
    """Full model for ``scenario``: variables, continuity, dynamics, formula, floor, objective."""
    cfg = config or PlanConfig.from_scenario(scenario)
    f = formula if formula is not None else scenario.stl()
    if not is_nnf(f):
        raise ValueError("formula must be in negation normal form")
    hz = formula_horizon(f)
    if hz > cfg.T + 1e-9:
        msg = f"formula horizon {hz:g} exceeds T={cfg.T:g}"
        if not cfg.allow_horizon_overrun:
            raise HorizonError(msg)
    missing = sorted(f.region_names() - set(scenario.regions))
    if missing:
        raise KeyError(f"unknown region {missing[0]!r}")

    enc = Encoding(scenario, cfg)
    m = enc.model
    seg = enc.add_segment_vars()
    start = cfg.start
    if not scenario.workspace.contains(start):
        raise ValueError("start position lies outside the workspace")
    c0 = seg[0].c
    if cfg.pin_start:
        for j in range(enc.d):
            m.lb[c0[0, j]] = m.ub[c0[0, j]] = float(start[j])
    for j in range(enc.d):
        if cfg.pin_start_velocity:
            m.add_constr(_x(m, c0[1, j]) - _x(m, c0[0, j]), "=", 0.0, group="start")
        if cfg.pin_start_acceleration:
            m.add_constr(_x(m, c0[2, j]) - 2.0 * _x(m, c0[1, j]) + _x(m, c0[0, j]), "=", 0.0, group="start")
        if cfg.pin_end_velocity:
            cl = seg[-1].c
            m.add_constr(_x(m, cl[-1, j]) - _x(m, cl[-2, j]), "=", 0.0, group="end")
    encode_continuity(m, seg)
    encode_dynamics(m, seg, enc.dt)
    for sv in seg:
        m.add_constr(LinExpr({sv.r: 1.0, sv.eps: -1.0}), ">=", cfg.rho_star + FLOOR_MARGIN, group="floor")
    enc.formula = f
    enc.top = enc.encode_formula(f, 0, forced=True)
    enc.tighten()
    enc.encode_objective()
    return enc
