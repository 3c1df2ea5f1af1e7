"""Activity-based bound propagation for linear rows lo <= A x <= hi."""
from __future__ import annotations

import numpy as np

INT_ROUND = 1e-6


class Propagator:
    def __init__(self, A, lo, hi, is_int):
        A = A.tocoo()
        self.r, self.c, self.a = A.row, A.col, A.data
        self.m = A.shape[0]
        self.lo = np.asarray(lo, float)[self.r]
        self.hi = np.asarray(hi, float)[self.r]
        self.is_int = np.asarray(is_int, bool)

    def __call__(self, lb, ub, passes: int = 20, tol: float = 1e-4):
        """Tightened ``(lb, ub)``, or None when some row cannot be satisfied."""
        r, c, a, m = self.r, self.c, self.a, self.m
        lb, ub = np.array(lb, float), np.array(ub, float)
        if np.any(lb > ub + INT_ROUND):
            return None
        pos = a > 0
        for _ in range(passes):
            cmin = np.where(pos, a * lb[c], a * ub[c])
            cmax = np.where(pos, a * ub[c], a * lb[c])
            inf_min, inf_max = ~np.isfinite(cmin), ~np.isfinite(cmax)
            smin = np.bincount(r, np.where(inf_min, 0.0, cmin), m)[r]
            smax = np.bincount(r, np.where(inf_max, 0.0, cmax), m)[r]
            nmin = np.bincount(r, inf_min, m)[r]
            nmax = np.bincount(r, inf_max, m)[r]
            # activity of the rest of the row; usable when at most this entry is unbounded
            rmin = np.where(inf_min, np.where(nmin == 1, smin, -np.inf), np.where(nmin == 0, smin - cmin, -np.inf))
            rmax = np.where(inf_max, np.where(nmax == 1, smax, np.inf), np.where(nmax == 0, smax - cmax, np.inf))
            if np.any((rmin + np.where(inf_min, 0.0, cmin) > self.hi + 1e-6) |
                      (rmax + np.where(inf_max, 0.0, cmax) < self.lo - 1e-6)):
                return None
            with np.errstate(invalid="ignore"):
                from_hi = (self.hi - rmin) / a
                from_lo = (self.lo - rmax) / a
            new_ub = np.where(pos, from_hi, from_lo)
            new_lb = np.where(pos, from_lo, from_hi)
            nub, nlb = ub.copy(), lb.copy()
            ok = np.isfinite(new_ub)
            np.minimum.at(nub, c[ok], new_ub[ok])
            ok = np.isfinite(new_lb)
            np.maximum.at(nlb, c[ok], new_lb[ok])
            cont = ~self.is_int
            nub[cont] += 1e-9 * (1.0 + np.abs(nub[cont]))  # slack against round-off in implied bounds
            nlb[cont] -= 1e-9 * (1.0 + np.abs(nlb[cont]))
            nub[self.is_int] = np.floor(nub[self.is_int] + INT_ROUND)
            nlb[self.is_int] = np.ceil(nlb[self.is_int] - INT_ROUND)
            if np.any(nlb > nub + INT_ROUND):
                return None
            nlb = np.minimum(nlb, nub)
            # only accept tightenings that matter, so continuous bounds cannot creep forever
            up = (ub - nub) > tol * np.maximum(1.0, np.abs(nub))
            dn = (nlb - lb) > tol * np.maximum(1.0, np.abs(nlb))
            if not (up.any() or dn.any()):
                break
            ub = np.where(up, nub, ub)
            lb = np.where(dn, nlb, lb)
        return lb, ub
