"""Encoder-free checks of a planned trajectory.

Everything here is recomputed from the control points, the scenario and a
per-segment robustness profile; nothing reads the MILP.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .bezier import BezierSegment, PiecewiseTrajectory, continuity_residuals
from .geometry import Polytope, halfspace_margin, normalized_margin
from .stl import sampled_robustness

MIN_RESOLUTION = 100
CONTINUITY_TOL = 1e-8
DYNAMICS_TOL = 1e-9
MARGIN_TOL = 1e-6
TUBE_TOL = 1e-9
N_SINES = 5


class ResolutionTooCoarse(ValueError):
    pass


class PreconditionViolation(ValueError):
    """The segment does not satisfy the constraints the bound is conditioned on."""


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""


@dataclass
class TubeResult:
    trials: int
    failures: int
    worst_margin: float
    seed: int
    scale: float = 1.0
    label: str = "statistical evidence"

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class VerificationReport:
    resolution: int
    continuity_max: list
    velocity_max: list
    velocity_limit: list
    acceleration_max: list
    acceleration_limit: list
    stl_margin: float
    rho: list
    rho_star: float
    prop1_slack: float
    checks: list = field(default_factory=list)
    tube: Optional[TubeResult] = None
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        ok = all(c.passed for c in self.checks)
        if self.tube is not None:
            ok = ok and self.tube.passed
        return ok

    def failed(self) -> list:
        out = [c.name for c in self.checks if not c.passed]
        if self.tube is not None and not self.tube.passed:
            out.append("tube")
        return out

    def strict(self) -> "VerificationReport":
        """Warnings become failing checks."""
        for w in self.warnings:
            self.checks.append(Check("warning", False, float("nan"), float("nan"), w))
        self.warnings = []
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["failed"] = self.failed()
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, default=_jsonable)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _require_resolution(resolution: int) -> None:
    if resolution < MIN_RESOLUTION:
        raise ResolutionTooCoarse(f"resolution {resolution} is below {MIN_RESOLUTION} samples per segment")


def implied_acceleration(seg_controls: np.ndarray, dt: float) -> np.ndarray:
    """Smallest per-axis ``a`` meeting both the end caps and the second-difference bounds."""
    c = np.asarray(seg_controls, dtype=float)
    n = c.shape[0] - 1
    dd = np.abs(np.diff(c, n=2, axis=0)).max(axis=0) * n * (n - 1) / dt**2
    caps = np.maximum(np.abs(c[1] - c[0]), np.abs(c[n] - c[n - 1])) * 2 * n / dt**2
    return np.maximum(dd, caps)


def endpoint_distance(seg_controls: np.ndarray) -> np.ndarray:
    """Distance of every control point to the nearer end control point."""
    c = np.asarray(seg_controls, dtype=float)
    d0 = np.linalg.norm(c - c[0], axis=1)
    dn = np.linalg.norm(c - c[-1], axis=1)
    return np.minimum(d0, dn)


def prop1_bound(a, dt: float) -> float:
    return 3.0 * dt * dt * float(np.linalg.norm(a)) / 8.0


def verify_trajectory(y: PiecewiseTrajectory, scenario, rho=None, resolution: int = 1000,
                      formula=None) -> VerificationReport:
    """Continuity, sampled dynamics, sampled STL margin and the per-segment robustness profile."""
    _require_resolution(resolution)
    d = scenario.workspace.dim
    if y.dim != d:
        raise ValueError(f"trajectory dimension {y.dim} does not match workspace dimension {d}")
    checks = []
    warns = []

    cont = continuity_residuals(y)
    cmax = cont.max(axis=0) if cont.size else np.zeros(3)
    for name, v in zip(("C0", "C1", "C2"), cmax):
        checks.append(Check(f"continuity_{name}", bool(v <= CONTINUITY_TOL), float(v), CONTINUITY_TOL))

    start_err = float(np.abs(y.controls[0, 0] - scenario.start).max())
    checks.append(Check("start", start_err <= CONTINUITY_TOL, start_err, CONTINUITY_TOL))

    vel = y.derivative()
    acc = vel.derivative()
    _, vs = vel.sample(resolution)
    _, acs = acc.sample(resolution)
    vmax = np.abs(vs).max(axis=0)
    amax = np.abs(acs).max(axis=0)
    for j in range(d):
        checks.append(Check(f"velocity_axis{j}", bool(vmax[j] <= scenario.v_max[j] + DYNAMICS_TOL),
                            float(vmax[j]), float(scenario.v_max[j])))
        checks.append(Check(f"acceleration_axis{j}", bool(amax[j] <= scenario.a_max[j] + DYNAMICS_TOL),
                            float(amax[j]), float(scenario.a_max[j])))

    t, pts = y.sample(resolution)
    lo, hi = scenario.workspace.lo, scenario.workspace.hi
    ws_err = float(max(np.max(lo - pts), np.max(pts - hi), 0.0))
    checks.append(Check("workspace", ws_err <= DYNAMICS_TOL, ws_err, DYNAMICS_TOL))

    f = formula if formula is not None else scenario.stl()
    if y.horizon + 1e-9 < scenario.T:
        warns.append(f"trajectory covers {y.horizon:g} s of the {scenario.T:g} s horizon")
    margin = sampled_robustness(f, (t, pts), scenario.regions, 0.0, horizon=scenario.T)

    rho_list = []
    if rho is not None:
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (y.n_segments,):
            raise ValueError(f"robustness profile needs {y.n_segments} entries, got {rho.shape}")
        rho_list = rho.tolist()
        rmin = float(rho.min())
        checks.append(Check("rho_floor", rmin >= scenario.rho_star - DYNAMICS_TOL, rmin, scenario.rho_star))
        checks.append(Check("stl_margin", margin >= rmin - MARGIN_TOL, margin, rmin,
                            "sampled margin against the smallest segment robustness"))
    else:
        checks.append(Check("stl_margin", margin >= scenario.rho_star - MARGIN_TOL, margin, scenario.rho_star,
                            "sampled margin against the required robustness"))

    slack = math.inf
    for k in range(y.n_segments):
        c = y.controls[k]
        bound = prop1_bound(implied_acceleration(c, y.dt), y.dt)
        slack = min(slack, bound - endpoint_distance(c).max())
    checks.append(Check("prop1_control_points", slack >= -1e-9, float(slack), 0.0,
                        "interior control points near the nearer end point"))

    return VerificationReport(
        resolution=resolution, continuity_max=cmax.tolist(), velocity_max=vmax.tolist(),
        velocity_limit=scenario.v_max.tolist(), acceleration_max=amax.tolist(),
        acceleration_limit=scenario.a_max.tolist(), stl_margin=float(margin), rho=rho_list,
        rho_star=float(scenario.rho_star), prop1_slack=float(slack), checks=checks, warnings=warns,
    )


# -- robustness tube ----------------------------------------------------------

def tube_envelope(rho, dt: float, t) -> np.ndarray:
    """Continuous radius ``A(t) <= rho_k`` on segment ``k``.

    Joint values are the smaller neighbour; each segment interpolates its
    two joint values linearly, which never exceeds ``rho_k``.
    """
    rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
    N = rho.size
    joints = np.empty(N + 1)
    joints[0], joints[-1] = rho[0], rho[-1]
    joints[1:-1] = np.minimum(rho[:-1], rho[1:])
    return np.interp(t, np.arange(N + 1) * dt, joints)


def random_perturbation(rng: np.random.Generator, t: np.ndarray, d: int, T: float) -> np.ndarray:
    """Smooth field with ``max_t ||u(t)|| = 1``: per axis a sum of random-phase sinusoids."""
    u = np.zeros((t.size, d))
    for j in range(d):
        freq = rng.uniform(0.2, 4.0, N_SINES) / T * 2 * np.pi
        phase = rng.uniform(0, 2 * np.pi, N_SINES)
        amp = rng.uniform(0.2, 1.0, N_SINES)
        u[:, j] = (amp[None, :] * np.sin(np.outer(t, freq) + phase[None, :])).sum(axis=1)
    peak = np.linalg.norm(u, axis=1).max()
    return u / peak if peak > 0 else u


def tube_test(y: PiecewiseTrajectory, rho, scenario, trials: int = 200, seed: int = 42,
              resolution: int = 1000, scale: float = 1.0, formula=None) -> TubeResult:
    """Perturb ``y`` inside the tube ``scale * rho`` and count traces whose sampled robustness is negative."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    _require_resolution(resolution)
    f = formula if formula is not None else scenario.stl()
    t, pts = y.sample(resolution)
    env = scale * tube_envelope(rho, y.dt, t)
    rng = np.random.default_rng(seed)
    failures = 0
    worst = math.inf
    for _ in range(trials):
        u = random_perturbation(rng, t, y.dim, y.horizon)
        m = sampled_robustness(f, (t, pts + env[:, None] * u), scenario.regions, 0.0, horizon=scenario.T)
        worst = min(worst, m)
        if m < -TUBE_TOL:
            failures += 1
    return TubeResult(trials, failures, float(worst), seed, scale)


# -- the geometric bound ------------------------------------------------------

@dataclass
class Prop1Result:
    bound: float
    max_distance: float
    bound_slack: float
    curve_margin: float
    curve_slack: float
    face: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.bound_slack >= -1e-9 and self.curve_slack >= -1e-9


def _controls(segment) -> np.ndarray:
    if isinstance(segment, BezierSegment):
        return segment.controls
    return np.asarray(segment, dtype=float)


def check_preconditions(c: np.ndarray, region: Polytope, r: float, eps: float, a, dt: float, polarity: str,
                        tol: float = 1e-9) -> Optional[int]:
    """Raise :class:`PreconditionViolation` unless the segment meets the encoded constraints.

    Returns the separating face for the outside polarity.
    """
    n, d = c.shape[0] - 1, c.shape[1]
    a = np.broadcast_to(np.asarray(a, dtype=float), (d,))
    ends = c[[0, n]]
    face = None
    if polarity == "inside":
        m = normalized_margin(region, ends).min()
        if m < r - tol:
            raise PreconditionViolation(f"end control point margin {m:.6g} below r={r:.6g}")
    elif polarity == "outside":
        per_face = np.array([halfspace_margin(region, i, ends).min() for i in range(region.n_rows)])
        face = int(np.argmax(per_face))
        if per_face[face] < r - tol:
            raise PreconditionViolation(f"no face keeps both end points {r:.6g} away (best {per_face[face]:.6g})")
    else:
        raise ValueError(f"polarity must be 'inside' or 'outside', got {polarity!r}")
    cap = a * dt * dt / (2 * n)
    if np.any(np.abs(c[1] - c[0]) > cap + tol) or np.any(np.abs(c[n] - c[n - 1]) > cap + tol):
        raise PreconditionViolation("end control point differences exceed a dt^2 / (2n)")
    dd = np.abs(np.diff(c, n=2, axis=0))
    if np.any(dd > a * dt * dt / (n * (n - 1)) + tol):
        raise PreconditionViolation("second differences exceed a dt^2 / (n (n - 1))")
    need = 3 * math.sqrt(d) * dt * dt * a / 8
    if np.any(eps < need - tol):
        raise PreconditionViolation(f"eps={eps:.6g} below the per-axis allowance {need.max():.6g}")
    return face


def check_proposition1(segment, region: Polytope, r: float, eps: float, a, polarity: str, dt=None,
                       samples: int = 2000) -> Prop1Result:
    """Check the control-point bound and the curve clearance ``r - eps`` for one segment."""
    if isinstance(segment, BezierSegment):
        dt = segment.dt if dt is None else dt
    if dt is None:
        raise ValueError("dt is required for a bare control array")
    c = _controls(segment)
    d = c.shape[1]
    a = np.broadcast_to(np.asarray(a, dtype=float), (d,))
    face = check_preconditions(c, region, r, eps, a, dt, polarity)
    bound = prop1_bound(a, dt)
    dist = float(endpoint_distance(c).max())
    pts = BezierSegment(c, 0.0, dt).evaluate_local(np.linspace(0, 1, samples + 1))
    if polarity == "inside":
        cm = float(normalized_margin(region, pts).min())
    else:
        cm = float(halfspace_margin(region, face, pts).min())
    return Prop1Result(bound, dist, bound - dist, cm, cm - (r - eps), face)
