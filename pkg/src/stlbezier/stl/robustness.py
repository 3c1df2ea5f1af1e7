"""Quantitative STL semantics on uniformly sampled traces.

This is a verification oracle only; synthesis never calls it. Predicate
robustness is the normalized polytope margin, so a value ``>= 0`` means
(non-strict) satisfaction at sample resolution.

Evaluation is demand driven: each node is computed only on the sample range
its parent needs, which keeps a top-level query at ``t = 0`` linear in the
trace length even for Until.
"""
from __future__ import annotations

import math

import numpy as np

from ..geometry import normalized_margin
from .formula import (And, Always, Eventually, FalseF, Formula, Not, NegPred, Or, Pred, TrueF,
                      Until, formula_horizon)


class TraceTooShort(ValueError):
    pass


def _window_reduce(values: np.ndarray, width: int, op) -> np.ndarray:
    """``out[i] = op(values[i : i + width])`` for every full window (sparse table)."""
    n_out = values.size - width + 1
    if n_out <= 0:
        return np.empty(0)
    table = values
    span = 1
    while span * 2 <= width:
        table = op(table[:-span], table[span:])
        span *= 2
    return op(table[:n_out], table[width - span : width - span + n_out])


class _Evaluator:
    def __init__(self, points, h, regions, last):
        self.points = points
        self.h = h
        self.regions = regions
        self.last = last  # index of the last sample inside the evaluation domain

    def offsets(self, interval):
        ia = math.ceil(interval.a / self.h - 1e-9)
        ib = math.floor(interval.b / self.h + 1e-9)
        return ia, ib

    def region(self, name):
        try:
            return self.regions[name]
        except KeyError:
            raise KeyError(f"unknown region {name!r}") from None

    def pad(self, lo, hi, fill, f):
        """Child values on ``[lo, hi]``; indices past the domain end get ``fill``."""
        out = np.full(hi - lo + 1, fill)
        top = min(hi, self.last)
        if top >= lo:
            out[: top - lo + 1] = self.eval(f, lo, top)
        return out

    def eval(self, f: Formula, lo: int, hi: int) -> np.ndarray:
        if isinstance(f, TrueF):
            return np.full(hi - lo + 1, np.inf)
        if isinstance(f, FalseF):
            return np.full(hi - lo + 1, -np.inf)
        if isinstance(f, Pred):
            return normalized_margin(self.region(f.name), self.points[lo : hi + 1])
        if isinstance(f, NegPred):
            return -normalized_margin(self.region(f.name), self.points[lo : hi + 1])
        if isinstance(f, Not):
            return -self.eval(f.arg, lo, hi)
        if isinstance(f, And):
            return np.min([self.eval(a, lo, hi) for a in f.args], axis=0)
        if isinstance(f, Or):
            return np.max([self.eval(a, lo, hi) for a in f.args], axis=0)
        if isinstance(f, (Always, Eventually)):
            ia, ib = self.offsets(f.interval)
            always = isinstance(f, Always)
            fill = np.inf if always else -np.inf
            child = self.pad(lo + ia, hi + ib, fill, f.arg)
            return _window_reduce(child, ib - ia + 1, np.minimum if always else np.maximum)
        if isinstance(f, Until):
            ia, ib = self.offsets(f.interval)
            n = hi - lo + 1
            left = self.pad(lo, hi + ib, np.inf, f.left)
            right = self.pad(lo, hi + ib, -np.inf, f.right)
            best = np.full(n, -np.inf)
            running = np.full(n, np.inf)
            for o in range(ib + 1):
                running = np.minimum(running, left[o : o + n])
                if o >= ia:
                    best = np.maximum(best, np.minimum(right[o : o + n], running))
            return best
        raise TypeError(f"not a formula node: {f!r}")


def _grid_step(times: np.ndarray) -> float:
    if times.size < 2:
        return 1.0
    steps = np.diff(times)
    h = (times[-1] - times[0]) / (times.size - 1)
    if not np.allclose(steps, h, rtol=1e-6, atol=1e-12):
        raise ValueError("trace must be uniformly sampled")
    return float(h)


def robustness_signal(f: Formula, times, points, regions, horizon=None, lo=0, hi=None):
    """Robustness values at sample indices ``lo..hi``.

    With ``horizon`` given, every temporal window is intersected with
    ``[0, horizon]`` (bounded time domain semantics). Without it, the trace
    must extend ``formula_horizon(f)`` past ``hi``.
    """
    times = np.asarray(times, dtype=float)
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] != times.size:
        raise ValueError("points must have shape (len(times), d)")
    h = _grid_step(times)
    hi = times.size - 1 if hi is None else hi
    if horizon is None:
        last = times.size - 1
        needed = hi + math.floor(formula_horizon(f) / h + 1e-9)
        if needed > last:
            raise TraceTooShort(
                f"trace ends at t={times[-1]:g} but the formula needs samples up to "
                f"t={times[0] + needed * h:g}")
    else:
        last = min(times.size - 1, math.floor((horizon - times[0]) / h + 1e-9))
    return _Evaluator(points, h, regions, last).eval(f, lo, hi)


def sampled_robustness(f: Formula, trace, regions, t: float = 0.0, horizon=None) -> float:
    """Robustness of ``(trace, t) |= f``; ``trace`` is ``(times, points)``."""
    times, points = trace
    times = np.asarray(times, dtype=float)
    h = _grid_step(times)
    idx = int(round((t - times[0]) / h))
    if idx < 0 or idx >= times.size or abs(times[0] + idx * h - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"start time {t} is not a sample time of the trace")
    return float(robustness_signal(f, times, points, regions, horizon, idx, idx)[0])
