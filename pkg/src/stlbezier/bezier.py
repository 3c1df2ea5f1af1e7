"""Bezier segments and uniform piecewise trajectories.

Evaluation uses de Casteljau's recursion; :func:`bernstein_eval` sums the
Bernstein basis directly and is kept as an independent check.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb

import numpy as np

TIME_TOL = 1e-9


def bernstein(n: int, i: int, tau):
    """``C(n, i) (1 - tau)^(n - i) tau^i``."""
    if not 0 <= i <= n:
        raise IndexError(f"Bernstein index {i} out of range for degree {n}")
    tau = np.asarray(tau, dtype=float)
    return comb(n, i) * (1.0 - tau) ** (n - i) * tau**i


def de_casteljau(points: np.ndarray, tau):
    """Evaluate the Bezier curve with control ``points`` (shape ``(n+1, d)``) at ``tau``.

    ``tau`` may be a scalar or a 1-D array; the result has shape ``(d,)`` or
    ``(m, d)`` respectively.
    """
    pts = np.asarray(points, dtype=float)
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    t = np.atleast_1d(tau)[:, None, None]
    work = np.broadcast_to(pts, (t.shape[0],) + pts.shape).copy()
    for r in range(pts.shape[0] - 1, 0, -1):
        work = (1.0 - t) * work[:, :r] + t * work[:, 1 : r + 1]
    out = work[:, 0, :]
    return out[0] if scalar else out


def bernstein_eval(points: np.ndarray, tau):
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0] - 1
    tau = np.asarray(tau, dtype=float)
    basis = np.stack([bernstein(n, i, tau) for i in range(n + 1)], axis=-1)
    return basis @ pts


@dataclass(frozen=True)
class BezierSegment:
    """Degree-``n`` Bezier curve on ``[t0, t0 + dt]``."""

    controls: np.ndarray
    t0: float
    dt: float

    def __post_init__(self):
        c = np.atleast_2d(np.array(self.controls, dtype=float))
        if c.shape[0] < 1:
            raise ValueError("a segment needs at least one control point")
        if not np.all(np.isfinite(c)):
            raise ValueError("control points must be finite")
        if not self.dt > 0:
            raise ValueError("segment duration must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "controls", c)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def degree(self) -> int:
        return self.controls.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.controls.shape[1]

    @property
    def t1(self) -> float:
        return self.t0 + self.dt

    def local_time(self, t):
        t = np.asarray(t, dtype=float)
        tau = (t - self.t0) / self.dt
        if np.any(tau < -TIME_TOL / self.dt) or np.any(tau > 1 + TIME_TOL / self.dt):
            raise ValueError(f"time outside segment span [{self.t0}, {self.t1}]")
        return np.clip(tau, 0.0, 1.0)

    def evaluate(self, t):
        return de_casteljau(self.controls, self.local_time(t))

    def evaluate_local(self, tau):
        return de_casteljau(self.controls, tau)

    def derivative(self) -> "BezierSegment":
        n = self.degree
        if n < 1:
            raise ValueError("cannot differentiate a degree-0 segment")
        return BezierSegment(n / self.dt * np.diff(self.controls, axis=0), self.t0, self.dt)

    def second_difference(self, i: int) -> np.ndarray:
        if not 0 <= i <= self.degree - 2:
            raise IndexError(f"second difference index {i} out of range for degree {self.degree}")
        c = self.controls
        return c[i + 2] - 2.0 * c[i + 1] + c[i]

    def velocity_bound(self) -> np.ndarray:
        """Per-axis bound ``(n/dt) max_i |c_{i+1} - c_i|`` on ``|B'(t)|``."""
        return self.degree / self.dt * np.abs(np.diff(self.controls, axis=0)).max(axis=0)

    def acceleration_bound(self) -> np.ndarray:
        n = self.degree
        return n * (n - 1) / self.dt**2 * np.abs(np.diff(self.controls, n=2, axis=0)).max(axis=0)


def evaluate(segment: BezierSegment, t):
    return segment.evaluate(t)


def derivative(segment: BezierSegment) -> BezierSegment:
    return segment.derivative()


def second_difference(segment: BezierSegment, i: int) -> np.ndarray:
    return segment.second_difference(i)


class PiecewiseTrajectory:
    """``N`` segments of common degree on the uniform grid ``t_k = k dt``."""

    def __init__(self, controls, dt: float):
        c = np.array(controls, dtype=float)
        if c.ndim != 3:
            raise ValueError("controls must have shape (N, n+1, d)")
        if c.shape[0] < 1:
            raise ValueError("a trajectory needs at least one segment")
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.controls = c
        self.controls.setflags(write=False)
        self.dt = float(dt)
        self.segments = [BezierSegment(c[k], k * self.dt, self.dt) for k in range(c.shape[0])]

    @property
    def n_segments(self) -> int:
        return self.controls.shape[0]

    @property
    def degree(self) -> int:
        return self.controls.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.controls.shape[2]

    @property
    def horizon(self) -> float:
        return self.n_segments * self.dt

    def segment_index(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -TIME_TOL) or np.any(t > self.horizon + TIME_TOL):
            raise ValueError(f"time outside trajectory span [0, {self.horizon}]")
        return np.clip(np.floor(t / self.dt).astype(int), 0, self.n_segments - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        ts = np.atleast_1d(t)
        idx = self.segment_index(ts)
        out = np.empty((ts.size, self.dim))
        for k in np.unique(idx):
            mask = idx == k
            tau = np.clip((ts[mask] - k * self.dt) / self.dt, 0.0, 1.0)
            out[mask] = de_casteljau(self.controls[k], tau)
        return out[0] if scalar else out

    def derivative(self) -> "PiecewiseTrajectory":
        n = self.degree
        return PiecewiseTrajectory(n / self.dt * np.diff(self.controls, axis=1), self.dt)

    def sample(self, per_segment: int):
        """Dense samples ``(t, positions)`` with ``per_segment`` intervals per segment.

        Sample times are computed as ``j * dt / per_segment`` from integers so
        segment joints land exactly on the grid.
        """
        if per_segment < 1:
            raise ValueError("per_segment must be positive")
        h = self.dt / per_segment
        taus = np.arange(per_segment) / per_segment
        pts = [de_casteljau(self.controls[k], taus) for k in range(self.n_segments)]
        pts.append(self.controls[-1, -1][None, :])
        t = np.arange(self.n_segments * per_segment + 1) * h
        return t, np.vstack(pts)

    def to_dict(self) -> dict:
        return {"dt": self.dt, "degree": self.degree, "segments": self.controls.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewiseTrajectory":
        traj = cls(data["segments"], data["dt"])
        if "degree" in data and int(data["degree"]) != traj.degree:
            raise ValueError(f"declared degree {data['degree']} does not match {traj.degree} control points")
        return traj

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "PiecewiseTrajectory":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def continuity_residuals(traj: PiecewiseTrajectory) -> np.ndarray:
    """Per-joint ``(C0, C1, C2)`` residual norms, shape ``(N - 1, 3)``.

    Residuals are on control-point differences, so they vanish exactly when
    ``c_{k,n} = c_{k+1,0}``, the first differences match, and the second
    differences match across the joint.
    """
    c = traj.controls
    if c.shape[0] < 2:
        return np.zeros((0, 3))
    if traj.degree < 2:
        raise ValueError("C2 residuals need degree >= 2")
    left, right = c[:-1], c[1:]
    r0 = np.linalg.norm(left[:, -1] - right[:, 0], axis=1)
    r1 = np.linalg.norm((left[:, -1] - left[:, -2]) - (right[:, 1] - right[:, 0]), axis=1)
    d2l = left[:, -1] - 2 * left[:, -2] + left[:, -3]
    d2r = right[:, 2] - 2 * right[:, 1] + right[:, 0]
    r2 = np.linalg.norm(d2l - d2r, axis=1)
    return np.column_stack([r0, r1, r2])
