"""Best-bound branch-and-bound over binary variables."""
from __future__ import annotations

import heapq
import logging
import math
import time

import numpy as np

from .engines import make_engine
from .model import MilpModel, Solution
from .propagate import Propagator

log = logging.getLogger(__name__)

INT_TOL = 1e-6
BRANCHING = ("most_fractional", "pseudocost")


def _cutoff(inc_obj: float, gap_tol: float) -> float:
    if not math.isfinite(inc_obj):
        return math.inf
    return inc_obj - gap_tol * max(1.0, abs(inc_obj))


class _Pseudocosts:
    """Average objective change per unit of rounding, per binary and direction."""

    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n), dtype=np.int64)

    def update(self, j: int, up: bool, delta: float, frac: float) -> None:
        if frac > 1e-9 and math.isfinite(delta):
            self.sum[int(up), j] += max(delta, 0.0) / frac
            self.cnt[int(up), j] += 1

    def estimate(self, j: int, up: bool) -> float:
        c = self.cnt[int(up), j]
        if c:
            return self.sum[int(up), j] / c
        seen = self.cnt[int(up)] > 0
        return float(self.sum[int(up), seen].sum() / self.cnt[int(up), seen].sum()) if seen.any() else 1.0

    def reliable(self, j: int, threshold: int) -> bool:
        return self.cnt[0, j] >= threshold and self.cnt[1, j] >= threshold


def branch_and_bound(model: MilpModel, gap_tol: float = 1e-6, node_limit=None, time_limit=None,
                     lp: str = "highs", plunge: bool = True, branching: str = "pseudocost",
                     strong_candidates: int = 8, reliability: int = 1, dive_every: int = 100,
                     incumbent=None, first_solution: bool = False) -> Solution:
    """Solve ``model`` to within ``gap_tol`` relative optimality gap.

    Until the first incumbent exists the search is depth-first, branching on
    the fractional binary with the largest value and taking the up branch
    first. Afterwards open nodes are explored in best-bound order; with
    ``plunge`` the up child of each branched node is processed immediately.
    Neither choice affects the optimality guarantee.

    Branching candidates are the fractional binaries of the highest
    ``model.priority`` class present (all equal by default).
    ``branching="most_fractional"`` picks the binary farthest from integral,
    ties to the lowest index. ``"pseudocost"`` ranks fractional binaries by
    the product of their estimated up/down objective gains, measuring the
    gains by strong branching until each has ``reliability`` observations;
    ties again go to the lowest index.

    A diving heuristic runs at the root and every ``dive_every`` nodes
    (0 disables it): it repeatedly fixes the fractional binary with the
    largest value to 1, flipping it to 0 once if that makes the relaxation
    infeasible, until the relaxation is integral.

    ``incumbent`` warm-starts the search: its binaries are fixed and the
    remaining LP is solved, and the result (if feasible) becomes the first
    incumbent. With ``first_solution`` the search stops at the first
    incumbent it holds.

    When a node or time limit stops the search, the result carries the best
    incumbent with status ``feasible`` (and its gap), or status ``limit``
    when none was found.
    """
    if branching not in BRANCHING:
        raise ValueError(f"unknown branching rule {branching!r}; choose from {BRANCHING}")
    model.check()
    t_start = time.perf_counter()
    engine = make_engine(model, lp)
    base_lb, base_ub = model.bounds()
    bins = model.binary_indices()
    prio = np.array(model.priority, dtype=np.int64)[bins]
    pc = _Pseudocosts(model.n_vars)
    prop = None
    if bins.size and model.n_constraints:
        is_int = np.zeros(model.n_vars, bool)
        is_int[bins] = True
        prop = Propagator(model.matrix(), *model.row_bounds(), is_int)
        tight = prop(base_lb, base_ub)
        if tight is None:
            return Solution("infeasible", nodes=0, wall_time=time.perf_counter() - t_start,
                            message="bound propagation proved the model infeasible")
        base_lb, base_ub = tight

    inc_x, inc_obj = None, math.inf
    history = []
    root_bound = None
    root_rc = None
    nodes = 0
    seq = 0
    heap = []
    dive = []
    pending = (-math.inf, (), None)
    hit_limit = False

    if incumbent is not None and bins.size:
        lb0, ub0 = base_lb.copy(), base_ub.copy()
        lb0[bins] = ub0[bins] = np.round(np.asarray(incumbent, float)[bins])
        if np.all(lb0 >= base_lb) and np.all(ub0 <= base_ub):
            st0, x0, obj0 = engine.solve(lb0, ub0)
            if st0 == "optimal":
                inc_x, inc_obj = x0.copy(), obj0
                history.append((0, obj0))

    def out_of_budget():
        return (node_limit is not None and nodes >= node_limit) or \
            (time_limit is not None and time.perf_counter() - t_start > time_limit)

    while True:
        if first_solution and inc_x is not None:
            hit_limit = True
            break
        if pending is None:
            if inc_x is None and dive:
                # depth-first until the first incumbent exists
                bound, _, fixes, origin = dive.pop()
            else:
                for item in dive:
                    heapq.heappush(heap, item)
                dive.clear()
                if not heap:
                    break
                bound, _, fixes, origin = heapq.heappop(heap)
            if bound >= _cutoff(inc_obj, gap_tol):
                continue
        else:
            bound, fixes, origin = pending
            pending = None
        if out_of_budget():
            pending = (bound, fixes, origin)
            hit_limit = True
            break

        lb, ub = base_lb.copy(), base_ub.copy()
        if any(not lb[j] <= v <= ub[j] for j, v in fixes):
            continue  # contradicts a global fixing, so it cannot beat the incumbent
        for j, v in fixes:
            lb[j] = ub[j] = v
        tight = prop(lb, ub, passes=10) if prop is not None and fixes else (lb, ub)
        if tight is None:
            status, x, obj = "infeasible", None, math.inf
        else:
            lb, ub = tight
            status, x, obj = engine.solve(lb, ub)
        rc = engine.reduced_costs() if status == "optimal" and bins.size else None
        nodes += 1
        if nodes % 500 == 0:
            log.debug("node %d  incumbent %.6g  open %d", nodes, inc_obj, len(heap))
        if origin is not None:
            j0, up0, frac0, parent_obj = origin
            pc.update(j0, up0, (obj if status == "optimal" else math.inf) - parent_obj, frac0)
        if status == "unbounded" and root_bound is None:
            return Solution("unbounded", nodes=nodes, wall_time=time.perf_counter() - t_start,
                            message="LP relaxation is unbounded")
        if status != "optimal":
            if status == "error":
                log.warning("LP engine failed at node %d; node discarded", nodes)
            if root_bound is None:
                return Solution("infeasible", nodes=nodes, wall_time=time.perf_counter() - t_start,
                                message="root relaxation infeasible")
            continue
        if root_bound is None:
            root_bound = obj
            root_rc = (obj, x[bins].copy(), rc[bins].copy()) if rc is not None else None
            if inc_x is not None:
                _fix_globally(root_rc, bins, base_lb, base_ub, _cutoff(inc_obj, gap_tol))
        if obj >= _cutoff(inc_obj, gap_tol):
            continue
        if rc is not None and inc_x is not None:
            fixes = fixes + _reduced_cost_fixings(bins, lb, ub, x[bins], rc[bins], obj, _cutoff(inc_obj, gap_tol))
        if dive_every and bins.size and (nodes == 1 or nodes % dive_every == 0):
            found = _dive(engine, prop, lb, ub, bins, prio, x, _cutoff(inc_obj, gap_tol))
            if found is not None and found[1] < inc_obj:
                inc_x, inc_obj = found
                history.append((nodes, inc_obj))
                log.debug("dive incumbent %.8g at node %d", inc_obj, nodes)
                _fix_globally(root_rc, bins, base_lb, base_ub, _cutoff(inc_obj, gap_tol))
                if obj >= _cutoff(inc_obj, gap_tol):
                    continue

        xb = x[bins] if bins.size else np.zeros(0)
        frac = np.abs(xb - np.round(xb))
        if bins.size == 0 or frac.max() <= INT_TOL:
            if bins.size and frac.max() > 0.0:
                lb2, ub2 = lb.copy(), ub.copy()
                lb2[bins] = ub2[bins] = np.round(xb)
                status, x, obj = engine.solve(lb2, ub2)
                if status != "optimal":
                    continue
            if obj < inc_obj:
                inc_x, inc_obj = x.copy(), obj
                history.append((nodes, obj))
                log.debug("incumbent %.8g at node %d", obj, nodes)
                _fix_globally(root_rc, bins, base_lb, base_ub, _cutoff(inc_obj, gap_tol))
            continue

        fpart = xb - np.floor(xb)
        cand = _top_candidates(frac, prio)
        child_bounds = {}
        if inc_x is None:
            k = _dive_choice(xb, cand)
        elif branching == "most_fractional":
            score = np.round(np.minimum(fpart[cand], 1.0 - fpart[cand]), 9)
            k = int(cand[np.argmax(score)])
        else:
            k, child_bounds = _pick_pseudocost(engine, lb, ub, bins, cand, fpart, obj, pc, strong_candidates,
                                               reliability, _cutoff(inc_obj, gap_tol))
            if k < 0:
                continue  # strong branching proved both children dominated
        j = int(bins[k])
        f = float(fpart[k])
        down_b, up_b = child_bounds.get(0, obj), child_bounds.get(1, obj)
        cut = _cutoff(inc_obj, gap_tol)
        children = []
        if up_b < cut:
            children.append((up_b, fixes + ((j, 1.0),), (j, True, 1.0 - f, obj)))
        if down_b < cut:
            children.append((down_b, fixes + ((j, 0.0),), (j, False, f, obj)))
        if not children:
            continue
        rest = children
        if plunge:
            pending, rest = children[0], children[1:]
        for b, fx, org in reversed(rest):
            seq += 1
            if inc_x is None:
                dive.append((b, seq, fx, org))
            else:
                heapq.heappush(heap, (b, seq, fx, org))

    open_bounds = [b for b, _, _, _ in heap + dive]
    if pending is not None:
        pb = pending[0]
        open_bounds.append(pb if math.isfinite(pb) else (root_bound if root_bound is not None else -math.inf))
    open_bounds = [b for b in open_bounds if b < _cutoff(inc_obj, gap_tol)]
    best_bound = min(open_bounds) if open_bounds else inc_obj
    wall = time.perf_counter() - t_start

    if inc_x is None:
        if hit_limit:
            return Solution("limit", bound=best_bound, nodes=nodes, wall_time=wall,
                            message="limit reached before any feasible solution")
        return Solution("infeasible", nodes=nodes, wall_time=wall, message="no integer-feasible node")

    if root_bound is not None and root_bound > inc_obj + 1e-6 * max(1.0, abs(inc_obj)):
        raise RuntimeError(f"weak duality violated: relaxation {root_bound} > incumbent {inc_obj}")
    best_bound = min(best_bound, inc_obj)
    gap = (inc_obj - best_bound) / max(1.0, abs(inc_obj))
    status = "feasible" if hit_limit and gap > gap_tol else "optimal"
    return Solution(status, x=inc_x, objective=model.objective_value(inc_x), bound=best_bound, gap=gap,
                    nodes=nodes, wall_time=wall, incumbent_history=history,
                    message="limit reached" if hit_limit else "")


def _reduced_cost_fixings(bins, lb, ub, xb, d, obj, cutoff):
    """Binaries that cannot leave their current bound without pushing the bound past ``cutoff``."""
    free = lb[bins] < ub[bins]
    at_lo = free & (xb <= INT_TOL) & (obj + d >= cutoff)
    at_hi = free & (xb >= 1.0 - INT_TOL) & (obj - d >= cutoff)
    return tuple((int(j), 0.0) for j in bins[at_lo]) + tuple((int(j), 1.0) for j in bins[at_hi])


def _fix_globally(root_rc, bins, base_lb, base_ub, cutoff):
    if root_rc is None:
        return
    obj, xb, d = root_rc
    for j, v in _reduced_cost_fixings(bins, base_lb, base_ub, xb, d, obj, cutoff):
        base_lb[j] = base_ub[j] = v


def _top_candidates(frac, prio):
    """Positions of fractional binaries in the highest priority class present."""
    cand = np.flatnonzero(frac > INT_TOL)
    return cand[prio[cand] == prio[cand].max()]


def _dive_choice(xb, cand) -> int:
    """Largest fractional value first (it is fixed to 1); ties to the lowest index."""
    return int(cand[np.argmax(np.round(xb[cand], 9))])


def _dive(engine, prop, lb, ub, bins, prio, x, cutoff):
    """Fractional dive from a node solution; returns ``(x, objective)`` or None."""
    for _ in range(bins.size + 1):
        xb = x[bins]
        frac = np.abs(xb - np.round(xb))
        if frac.max() <= INT_TOL:
            lb[bins] = ub[bins] = np.round(xb)
            st, x, obj = engine.solve(lb, ub)
            return (x.copy(), obj) if st == "optimal" and obj < cutoff else None
        j = int(bins[_dive_choice(xb, _top_candidates(frac, prio))])
        for v in (1.0, 0.0):
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[j] = ub2[j] = v
            tight = prop(lb2, ub2, passes=10) if prop is not None else (lb2, ub2)
            if tight is None:
                continue
            st, x2, obj = engine.solve(*tight)
            if st == "optimal" and obj < cutoff:
                x, (lb, ub) = x2, tight
                break
        else:
            return None
    return None


def _pick_pseudocost(engine, lb, ub, bins, cand, fpart, obj, pc, n_strong, reliability, cutoff):
    """Return ``(candidate position, {direction: child bound})``; position -1 prunes the node."""
    unreliable = [int(k) for k in cand if not pc.reliable(int(bins[k]), reliability)]
    unreliable.sort(key=lambda k: (-round(min(fpart[k], 1.0 - fpart[k]), 9), k))
    strong = {}
    for k in unreliable[:n_strong]:
        j = int(bins[k])
        gains = []
        for up in (False, True):
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[j] = ub2[j] = 1.0 if up else 0.0
            st, _, o = engine.solve(lb2, ub2)
            o = o if st == "optimal" else math.inf
            pc.update(j, up, o - obj, (1.0 - fpart[k]) if up else fpart[k])
            gains.append(o)
        strong[k] = gains
        if gains[0] >= cutoff and gains[1] >= cutoff:
            return -1, {}
    best, best_score = -1, -1.0
    for k in cand:
        k = int(k)
        if k in strong:
            dn = max(strong[k][0] - obj, 0.0)
            upg = max(strong[k][1] - obj, 0.0)
        else:
            j = int(bins[k])
            dn = pc.estimate(j, False) * fpart[k]
            upg = pc.estimate(j, True) * (1.0 - fpart[k])
        dn, upg = min(dn, 1e12), min(upg, 1e12)
        score = round(max(dn, 1e-6) * max(upg, 1e-6), 12)
        if score > best_score:
            best, best_score = k, score
    bounds = {0: strong[best][0], 1: strong[best][1]} if best in strong else {}
    return best, bounds


def solve_lp(model: MilpModel, method: str = "simplex") -> Solution:
    """Solve the LP relaxation (integrality dropped)."""
    t0 = time.perf_counter()
    engine = make_engine(model, method)
    lb, ub = model.bounds()
    status, x, obj = engine.solve(lb, ub)
    wall = time.perf_counter() - t0
    if status != "optimal":
        return Solution(status if status != "error" else "limit", nodes=1, wall_time=wall)
    return Solution("optimal", x=x, objective=model.objective_value(x), bound=obj, gap=0.0, nodes=1,
                    wall_time=wall)
