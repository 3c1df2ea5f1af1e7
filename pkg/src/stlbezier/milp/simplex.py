"""Dense bounded-variable primal simplex.

Two phases over ``A x + s = b`` with one slack per row and artificial
columns only where the starting slack basis is infeasible. Pricing is
Dantzig's largest reduced cost; after a run of degenerate pivots it falls
back to Bland's smallest-index rule until the objective moves again, which
rules out cycling. Everything is deterministic for a given input.

Meant for small and medium problems (and as an exact reference engine); the
tableau is stored densely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
PHASE1_TOL = 1e-7
DEGENERATE_RUN = 30

AT_LOWER, AT_UPPER, FREE_ZERO, BASIC = 0, 1, 2, 3


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, T, basis, x, lower, upper, state):
        self.T = T
        self.basis = basis
        self.x = x
        self.lower = lower
        self.upper = upper
        self.state = state
        self.iterations = 0

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.T

    def run(self, cost, eligible_mask, max_iter):
        T, basis, x, lower, upper, state = self.T, self.basis, self.x, self.lower, self.upper, self.state
        d = self.reduced_costs(cost)
        degenerate = 0
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            at_lo = (state == AT_LOWER) & (d < -OPT_TOL)
            at_hi = (state == AT_UPPER) & (d > OPT_TOL)
            free = (state == FREE_ZERO) & (np.abs(d) > OPT_TOL)
            cand = (at_lo | at_hi | free) & eligible_mask & (upper > lower)
            if not cand.any():
                return "optimal"
            idx = np.flatnonzero(cand)
            if degenerate >= DEGENERATE_RUN:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if (state[j] == AT_LOWER or (state[j] == FREE_ZERO and d[j] < 0)) else -1.0
            alpha = direction * T[:, j]

            theta = upper[j] - lower[j]
            leave = -1
            lb_b, ub_b, xb = lower[basis], upper[basis], x[basis]
            dec = alpha > PIVOT_TOL
            inc = alpha < -PIVOT_TOL
            ratios = np.full(alpha.size, np.inf)
            with np.errstate(invalid="ignore"):
                ratios[dec] = (xb[dec] - lb_b[dec]) / alpha[dec]
                ratios[inc] = (ub_b[inc] - xb[inc]) / -alpha[inc]
            ratios = np.maximum(ratios, 0.0)
            if ratios.size:
                rmin = ratios.min()
                if rmin < theta:
                    ties = np.flatnonzero(ratios <= rmin + 1e-12)
                    if degenerate >= DEGENERATE_RUN:
                        leave = int(ties[np.argmin(basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(alpha[ties]))])
                    theta = ratios[leave]
            if not np.isfinite(theta):
                return "unbounded"

            self.iterations += 1
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            x[j] += direction * theta  # nonbasic values sit exactly on their bound
            x[basis] = xb - theta * alpha
            if leave < 0:
                state[j] = AT_UPPER if state[j] == AT_LOWER else AT_LOWER
                continue
            out = basis[leave]
            if alpha[leave] > 0:
                x[out] = lower[out]
                state[out] = AT_LOWER
            else:
                x[out] = upper[out]
                state[out] = AT_UPPER
            piv = T[leave, j]
            T[leave] /= piv
            col = T[:, j].copy()
            col[leave] = 0.0
            T -= np.outer(col, T[leave])
            d = d - d[j] * T[leave]
            basis[leave] = j
            state[j] = BASIC


def solve_dense(c, A, senses, b, lower, upper, max_iter=None) -> LPResult:
    """Minimize ``c x`` subject to rows ``A x (<=|>=|=) b`` and ``lower <= x <= upper``."""
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float, ndmin=2)
    b = np.asarray(b, dtype=float).copy()
    senses = list(senses)
    m, n = A.shape if A.size else (0, c.size)
    if m == 0:
        return _box_only(c, np.asarray(lower, float), np.asarray(upper, float))

    scale = np.abs(A).max(axis=1)
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = b / scale

    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    s_lo = np.array([0.0 if s == "<=" else -np.inf if s == ">=" else 0.0 for s in senses])
    s_hi = np.array([np.inf if s == "<=" else 0.0 for s in senses])

    x0 = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
    resid = b - A @ x0
    slack_ok = (resid >= s_lo - 1e-12) & (resid <= s_hi + 1e-12)
    s_val = np.where(slack_ok, resid, np.clip(resid, s_lo, s_hi))
    art_val = resid - s_val
    sigma = np.where(art_val >= 0, 1.0, -1.0)

    ntot = n + 2 * m
    T = np.zeros((m, ntot))
    T[:, :n] = A
    T[:, n:n + m] = np.eye(m)
    T[:, n + m:] = np.diag(sigma)
    lo = np.concatenate([lower, s_lo, np.zeros(m)])
    hi = np.concatenate([upper, s_hi, np.where(slack_ok, 0.0, np.inf)])
    x = np.concatenate([x0, s_val, np.abs(art_val)])
    state = np.empty(ntot, dtype=np.int8)
    state[:n] = np.where(np.isfinite(lower), AT_LOWER, np.where(np.isfinite(upper), AT_UPPER, FREE_ZERO))
    state[n:n + m] = np.where(slack_ok, BASIC, np.where(s_val <= s_lo, AT_LOWER, AT_UPPER))
    state[n + m:] = np.where(slack_ok, AT_LOWER, BASIC)
    basis = np.where(slack_ok, n + np.arange(m), n + m + np.arange(m))
    # rows whose basic column is an artificial with coefficient -1 need sign flipping
    T[~slack_ok] *= sigma[~slack_ok, None]

    tab = _Tableau(T, basis, x, lo, hi, state)
    max_iter = max_iter or 50 * (m + n) + 1000
    structural = np.zeros(ntot, dtype=bool)
    structural[: n + m] = True

    if (~slack_ok).any():
        cost1 = np.zeros(ntot)
        cost1[n + m:] = 1.0
        status = tab.run(cost1, np.ones(ntot, dtype=bool), max_iter)
        if status == "iteration_limit":
            return LPResult(status, x[:n].copy(), float("nan"), tab.iterations)
        infeas = x[n + m:].sum()
        if infeas > PHASE1_TOL:
            return LPResult("infeasible", x[:n].copy(), float("nan"), tab.iterations)
        _drive_out_artificials(tab, n, m)
    hi[n + m:] = 0.0
    x[n + m:] = 0.0

    cost2 = np.zeros(ntot)
    cost2[:n] = c
    status = tab.run(cost2, structural, max_iter)
    xs = x[:n].copy()
    if status != "optimal":
        return LPResult(status, xs, float("nan"), tab.iterations)
    return LPResult("optimal", xs, float(c @ xs), tab.iterations)


def _drive_out_artificials(tab: _Tableau, n: int, m: int) -> None:
    """Pivot zero-valued basic artificials onto structural or slack columns."""
    T, basis, state = tab.T, tab.basis, tab.state
    for r in range(m):
        if basis[r] < n + m:
            continue
        row = T[r, : n + m]
        cand = np.flatnonzero((np.abs(row) > 1e-7) & (state[: n + m] != BASIC))
        if cand.size == 0:
            continue  # redundant row; the artificial stays basic at zero
        j = int(cand[0])
        out = basis[r]
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        basis[r] = j
        state[j] = BASIC
        state[out] = AT_LOWER
        tab.x[out] = 0.0


def _box_only(c, lower, upper) -> LPResult:
    x = np.where(c > 0, lower, np.where(c < 0, upper, np.where(np.isfinite(lower), lower, upper)))
    x = np.where(np.isfinite(x), x, 0.0)
    if np.any(~np.isfinite(np.where(c > 0, lower, np.where(c < 0, upper, 0.0)))):
        return LPResult("unbounded", x, float("nan"), 0)
    return LPResult("optimal", x, float(c @ x), 0)
