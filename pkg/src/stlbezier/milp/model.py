"""Solver-agnostic MILP container.

A model is a list of bounded variables (continuous or binary), sparse linear
rows with a sense in ``{"<=", ">=", "="}``, and a linear objective to minimize.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp

SENSES = ("<=", ">=", "=")
FEAS_TOL = 1e-6
# LP-file safe: no leading digit/period, no leading e/E followed by a digit or e/E
_NAME_RE = re.compile(r"^(?![eE][0-9eE])[A-Za-z_][A-Za-z0-9_.]*$")


class ModelError(ValueError):
    pass


class LinExpr:
    """Sparse affine expression ``sum coef * x[idx] + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[Dict[int, float]] = None, const: float = 0.0):
        self.terms = dict(terms) if terms else {}
        self.const = float(const)

    @classmethod
    def var(cls, idx: int, coef: float = 1.0) -> "LinExpr":
        return cls({idx: coef})

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def _add(self, other, sign):
        out = self.copy()
        if isinstance(other, LinExpr):
            for k, v in other.terms.items():
                out.terms[k] = out.terms.get(k, 0.0) + sign * v
            out.const += sign * other.const
        else:
            out.const += sign * float(other)
        return out

    def __add__(self, other):
        return self._add(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._add(other, -1.0)

    def __rsub__(self, other):
        return (-self)._add(other, 1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        s = float(scalar)
        return LinExpr({k: s * v for k, v in self.terms.items()}, s * self.const)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def value(self, x) -> float:
        return self.const + sum(v * x[k] for k, v in self.terms.items())

    def __repr__(self):
        return f"LinExpr({self.terms}, {self.const})"


@dataclass
class Solution:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    bound: float = float("nan")
    gap: float = float("nan")
    nodes: int = 0
    wall_time: float = 0.0
    message: str = ""
    incumbent_history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible")

    def value(self, model: "MilpModel", name: str) -> float:
        return float(self.x[model.index(name)])


class MilpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list = []
        self.lb: list = []
        self.ub: list = []
        self.kinds: list = []
        self.roles: list = []
        self.priority: list = []
        self._index: dict = {}
        self.row_idx: list = []
        self.row_val: list = []
        self.senses: list = []
        self.rhs: list = []
        self.con_names: list = []
        self.con_groups: list = []
        self._con_index: dict = {}
        self.objective = LinExpr()

    # -- construction -------------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = float("inf"), kind: str = "continuous",
                role: str = "", priority: int = 0) -> int:
        """Declare a variable; among fractional binaries, higher ``priority`` is branched on first."""
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        if not _NAME_RE.match(name):
            raise ModelError(f"invalid variable name {name!r}")
        if kind not in ("continuous", "binary"):
            raise ModelError(f"unknown variable kind {kind!r}")
        lb, ub = float(lb), float(ub)
        if kind == "binary":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self.var_names)
        self._index[name] = idx
        self.var_names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.kinds.append(kind)
        self.roles.append(role)
        self.priority.append(int(priority))
        return idx

    def var(self, name_or_idx) -> LinExpr:
        idx = self.index(name_or_idx) if isinstance(name_or_idx, str) else int(name_or_idx)
        return LinExpr.var(idx)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def add_constr(self, expr: LinExpr, sense: str, rhs: float = 0.0, name: Optional[str] = None,
                   group: str = "") -> int:
        """Add ``expr <sense> rhs``; the expression's constant moves to the right side."""
        if sense not in SENSES:
            raise ModelError(f"unknown constraint sense {sense!r}")
        items = sorted((k, v) for k, v in expr.terms.items() if v != 0.0)
        n = len(self.var_names)
        for k, v in items:
            if not 0 <= k < n:
                raise ModelError(f"constraint references undeclared variable index {k}")
            if not np.isfinite(v):
                raise ModelError("constraint coefficients must be finite")
        idx = len(self.senses)
        name = name or f"r{idx}"
        if name in self._con_index:
            raise ModelError(f"duplicate constraint name {name!r}")
        if not _NAME_RE.match(name):
            raise ModelError(f"invalid constraint name {name!r}")
        self._con_index[name] = idx
        self.row_idx.append(np.array([k for k, _ in items], dtype=np.int64))
        self.row_val.append(np.array([v for _, v in items], dtype=float))
        self.senses.append(sense)
        self.rhs.append(float(rhs) - expr.const)
        self.con_names.append(name)
        self.con_groups.append(group)
        return idx

    def replace_row(self, i: int, expr: LinExpr, rhs: float) -> None:
        """Swap the coefficients and right-hand side of row ``i``; sense and name are kept."""
        items = sorted((k, v) for k, v in expr.terms.items() if v != 0.0)
        self.row_idx[i] = np.array([k for k, _ in items], dtype=np.int64)
        self.row_val[i] = np.array([v for _, v in items], dtype=float)
        self.rhs[i] = float(rhs) - expr.const

    def set_objective(self, expr: LinExpr) -> None:
        self.objective = expr.copy()

    # -- inspection ---------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_constraints(self) -> int:
        return len(self.senses)

    def count(self, kind: Optional[str] = None, role: Optional[str] = None) -> int:
        return sum(1 for k, r in zip(self.kinds, self.roles)
                   if (kind is None or k == kind) and (role is None or r == role))

    @property
    def n_binary(self) -> int:
        return self.count(kind="binary")

    def binary_indices(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k == "binary"], dtype=np.int64)

    def constraint_name(self, i: int) -> str:
        return self.con_names[i]

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for k, v in self.objective.terms.items():
            c[k] = v
        return c

    def matrix(self) -> sp.csr_matrix:
        indptr = np.zeros(self.n_constraints + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([r.size for r in self.row_idx])
        idx = np.concatenate(self.row_idx) if self.row_idx else np.zeros(0, dtype=np.int64)
        val = np.concatenate(self.row_val) if self.row_val else np.zeros(0)
        return sp.csr_matrix((val, idx, indptr), shape=(self.n_constraints, self.n_vars))

    def bounds(self):
        return np.array(self.lb, dtype=float), np.array(self.ub, dtype=float)

    def row_bounds(self):
        """Rows as ``row_lo <= A x <= row_hi``."""
        rhs = np.array(self.rhs, dtype=float)
        senses = np.array(self.senses)
        lo = np.where(senses == "<=", -np.inf, rhs)
        hi = np.where(senses == ">=", np.inf, rhs)
        return lo, hi

    def check(self) -> None:
        lb, ub = self.bounds()
        if np.any(~np.isfinite(lb)) or np.any(~np.isfinite(ub)):
            bad = [self.var_names[i] for i in np.flatnonzero(~np.isfinite(lb) | ~np.isfinite(ub))[:3]]
            raise ModelError(f"all variables need finite bounds; e.g. {bad}")

    # -- evaluation ---------------------------------------------------------

    def objective_value(self, x) -> float:
        return self.objective.value(np.asarray(x, dtype=float))

    def violations(self, x) -> np.ndarray:
        """Per-row violation on rows scaled to unit max coefficient."""
        x = np.asarray(x, dtype=float)
        if self.n_constraints == 0:
            return np.zeros(0)
        A = self.matrix()
        ax = A @ x
        rhs = np.array(self.rhs)
        senses = np.array(self.senses)
        scale = np.array([np.abs(v).max() if v.size else 1.0 for v in self.row_val])
        viol = np.where(senses == "<=", ax - rhs, np.where(senses == ">=", rhs - ax, np.abs(ax - rhs)))
        return np.maximum(viol, 0.0) / scale

    def worst_violation(self, x, tol: float = FEAS_TOL, integrality_tol: float = FEAS_TOL):
        """``(description, amount)`` of the worst violated requirement, or ``None``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise ModelError(f"assignment has {x.size} values, model has {self.n_vars} variables")
        worst = None
        lb, ub = self.bounds()
        bviol = np.maximum(lb - x, x - ub)
        if bviol.size and bviol.max() > tol:
            i = int(np.argmax(bviol))
            worst = (f"bound on {self.var_names[i]}", float(bviol[i]))
        b = self.binary_indices()
        if b.size:
            frac = np.abs(x[b] - np.round(x[b]))
            if frac.max() > integrality_tol and (worst is None or frac.max() > worst[1]):
                i = int(b[np.argmax(frac)])
                worst = (f"integrality of {self.var_names[i]}", float(frac.max()))
        viol = self.violations(x)
        if viol.size and viol.max() > tol and (worst is None or viol.max() > worst[1]):
            i = int(np.argmax(viol))
            worst = (f"constraint {self.con_names[i]}", float(viol[i]))
        return worst

    def stats(self) -> dict:
        return {
            "variables": self.n_vars,
            "binaries": self.n_binary,
            "continuous": self.count(kind="continuous"),
            "constraints": self.n_constraints,
            "nonzeros": int(sum(r.size for r in self.row_idx)),
        }
