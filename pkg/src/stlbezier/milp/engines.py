"""LP relaxation engines used by branch-and-bound.

Both engines solve the same relaxation and differ only in how: ``simplex``
rebuilds a dense tableau on every call, ``highs`` keeps one HiGHS instance
alive and re-solves from the previous basis after each bound change.
"""
from __future__ import annotations

import numpy as np

from .model import MilpModel
from .simplex import solve_dense


class LPEngine:
    def solve(self, lb: np.ndarray, ub: np.ndarray):
        """Return ``(status, x, objective)`` with status in optimal/infeasible/unbounded/error."""
        raise NotImplementedError

    def reduced_costs(self):
        """Reduced costs of the last optimal solve, or None when unavailable."""
        return None


class SimplexEngine(LPEngine):
    def __init__(self, model: MilpModel):
        self.c = model.objective_vector()
        self.A = model.matrix().toarray()
        self.senses = list(model.senses)
        self.b = np.array(model.rhs, dtype=float)

    def solve(self, lb, ub):
        if np.any(lb > ub):
            return "infeasible", None, np.inf
        res = solve_dense(self.c, self.A, self.senses, self.b, lb, ub)
        if res.status == "iteration_limit":
            return "error", None, np.nan
        return res.status, res.x, res.objective


class HighsEngine(LPEngine):
    def __init__(self, model: MilpModel):
        import highspy

        self._highspy = highspy
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("random_seed", 0)
        inf = highspy.kHighsInf
        n = model.n_vars
        lb, ub = model.bounds()
        self.n = n
        h.addCols(n, model.objective_vector(), lb, ub, 0,
                  np.zeros(0, dtype=np.int32), np.zeros(0, dtype=np.int32), np.zeros(0))
        if model.n_constraints:
            A = model.matrix()
            # scale rows to unit max coefficient
            scale = np.maximum(abs(A).max(axis=1).toarray().ravel(), 1e-300)
            A = (A.multiply(1.0 / scale[:, None])).tocsr()
            lo, hi = model.row_bounds()
            lo = np.where(np.isfinite(lo), lo / scale, -inf)
            hi = np.where(np.isfinite(hi), hi / scale, inf)
            h.addRows(A.shape[0], lo, hi, A.nnz, A.indptr[:-1].astype(np.int32),
                      A.indices.astype(np.int32), A.data)
        self.h = h
        self.cols = np.arange(n, dtype=np.int32)

    def solve(self, lb, ub):
        if np.any(lb > ub):
            return "infeasible", None, np.inf
        h = self.h
        h.changeColsBounds(self.n, self.cols, np.asarray(lb, float), np.asarray(ub, float))
        h.run()
        st = h.getModelStatus()
        S = self._highspy.HighsModelStatus
        if st == S.kOptimal:
            x = np.array(h.getSolution().col_value)
            return "optimal", x, float(h.getInfo().objective_function_value)
        if st == S.kInfeasible:
            return "infeasible", None, np.inf
        if st in (S.kUnbounded, S.kUnboundedOrInfeasible):
            return "unbounded", None, -np.inf
        # numerical trouble: retry once from scratch
        h.clearSolver()
        h.run()
        if h.getModelStatus() == S.kOptimal:
            return "optimal", np.array(h.getSolution().col_value), float(h.getInfo().objective_function_value)
        if h.getModelStatus() == S.kInfeasible:
            return "infeasible", None, np.inf
        return "error", None, np.nan

    def reduced_costs(self):
        return np.array(self.h.getSolution().col_dual)


ENGINES = {"simplex": SimplexEngine, "highs": HighsEngine}


def make_engine(model: MilpModel, name: str) -> LPEngine:
    try:
        return ENGINES[name](model)
    except KeyError:
        raise ValueError(f"unknown LP engine {name!r}; choose from {sorted(ENGINES)}") from None
