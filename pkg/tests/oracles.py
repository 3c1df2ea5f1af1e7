"""Independent reference implementations and small instances shared by the unit and acceptance tests."""
import itertools
import math

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from stlbezier.geometry import Polytope, normalized_margin
from stlbezier.milp import LinExpr, MilpModel


def build_model(c, A, b, lb, ub, n_bin=0, senses=None):
    m = MilpModel("t")
    for j in range(len(c)):
        kind = "binary" if j < n_bin else "continuous"
        m.add_var(f"x{j}", lb[j], ub[j], kind=kind)
    senses = senses or ["<="] * len(b)
    for i in range(len(b)):
        m.add_constr(LinExpr({j: float(A[i, j]) for j in range(len(c))}), senses[i], float(b[i]))
    m.set_objective(LinExpr({j: float(c[j]) for j in range(len(c))}))
    return m


def vertex_lp(c, A, b, lb, ub):
    """Minimum of ``c x`` over ``A x <= b``, box bounds, by enumerating basic points."""
    n = len(c)
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([b, ub, -np.asarray(lb)])
    best = math.inf
    for rows in itertools.combinations(range(len(h)), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


def random_lp(rng, n=None, m=None):
    n = n or int(rng.integers(2, 5))
    m = m or int(rng.integers(2, 7))
    A = rng.normal(size=(m, n))
    b = rng.uniform(-1, 3, size=m)
    lb = rng.uniform(-4, -1, size=n)
    ub = rng.uniform(1, 4, size=n)
    return rng.normal(size=n), A, b, lb, ub


def enumerate_milp(c, A, b, lb, ub, n_bin):
    """Exhaustive over binaries, continuous part by an LP oracle."""
    best = math.inf
    n = len(c)
    for bits in itertools.product((0.0, 1.0), repeat=n_bin):
        y = np.array(bits)
        if n_bin == n:
            if np.all(A @ y <= b + 1e-9):
                best = min(best, float(c @ y))
            continue
        rhs = b - A[:, :n_bin] @ y
        res = linprog(c[n_bin:], A_ub=A[:, n_bin:], b_ub=rhs, bounds=list(zip(lb[n_bin:], ub[n_bin:])),
                      method="highs")
        if res.status == 0:
            best = min(best, float(c[:n_bin] @ y + res.fun))
    return best


def random_milp(rng):
    n_bin = int(rng.integers(4, 13))
    n_cont = int(rng.integers(0, 3))
    n = n_bin + n_cont
    m = int(rng.integers(3, 7))
    A = rng.normal(size=(m, n))
    b = rng.uniform(0, 3, size=m)
    lb = np.r_[np.zeros(n_bin), -np.full(n_cont, 5.0)]
    ub = np.r_[np.ones(n_bin), np.full(n_cont, 5.0)]
    return rng.normal(size=n), A, b, lb, ub, n_bin


def enumerate_model(model):
    """Exhaustive minimum of a ``MilpModel`` over its binaries, continuous part by ``linprog``."""
    A = model.matrix()
    lo, hi = model.row_bounds()
    lb, ub = model.bounds()
    c = model.objective_vector()
    bins = model.binary_indices()
    A_ub = sp.vstack([A[np.isfinite(hi)], -A[np.isfinite(lo)]])
    b_ub = np.r_[hi[np.isfinite(hi)], -lo[np.isfinite(lo)]]
    best, arg = math.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=bins.size):
        l2, u2 = lb.copy(), ub.copy()
        l2[bins] = u2[bins] = bits
        if np.any(l2 > u2):
            continue
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=list(zip(l2, u2)), method="highs")
        if res.status == 0 and res.fun < best:
            best, arg = float(res.fun), bits
    return best, arg


def random_segment(rng, P, polarity, n=5, dt=0.8, face=0):
    """Rejection sampler for segments meeting the encoded predicate constraints."""
    while True:
        a = rng.uniform(0.2, 3.0, 2)
        r = rng.uniform(0.05, 0.6)
        cap = a * dt * dt / (2 * n)
        acc = a * dt * dt / (n * (n - 1))
        if polarity == "inside":
            c0 = rng.uniform(P_LO, P_HI)
        else:
            c0 = rng.uniform([-3.0, -3.0], [8.0, 8.0])
        c = np.zeros((n + 1, 2))
        c[0] = c0
        c[1] = c0 + rng.uniform(-1, 1, 2) * cap
        for i in range(1, n):
            c[i + 1] = 2 * c[i] - c[i - 1] + rng.uniform(-1, 1, 2) * acc
        if np.any(np.abs(c[n] - c[n - 1]) > cap):
            continue
        ends = c[[0, n]]
        if polarity == "inside":
            if normalized_margin(P, ends).min() < r:
                continue
        else:
            h = P.H[face] / P.row_norms[face]
            if (ends @ h - P.b[face] / P.row_norms[face]).min() < r:
                continue
        eps = 3 * math.sqrt(2) * dt * dt * a.max() / 8 * rng.uniform(1.0, 1.5)
        return c, r, eps, a, dt


P_LO, P_HI = np.array([0.5, 0.5]), np.array([3.5, 3.5])
PENT = Polytope([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1]], [4, 0, 4, 0, 6.5])


def reduced_reach_avoid(N=2):
    """The reach-avoid layout cut down to one obstacle and one goal: 10 binaries at ``N=2``."""
    from stlbezier.scenarios import builtin

    return builtin("reach-avoid").with_(T=float(N), N=N, formula=f"G[0,{N}] !B & F[0,{N}] R", a_max=[0.5, 0.5],
                                        start=[8.0, 5.2], allow_horizon_overrun=False)


def short_reach_avoid():
    """Reach-avoid over 10 s with both obstacles and a 2 s dwell in R; small enough to solve to optimality."""
    from stlbezier.scenarios import builtin

    return builtin("reach-avoid").with_(T=10.0, N=10, formula="G[0,10] !B & G[0,10] !Y & F[0,10] G[0,2] R",
                                        start=[1.0, 1.0])
