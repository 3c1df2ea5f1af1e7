"""SVG rendering of a scenario and (optionally) a planned trajectory."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon as PolygonPatch  # noqa: E402
from scipy.optimize import linprog  # noqa: E402
from scipy.spatial import HalfspaceIntersection  # noqa: E402


def polygon_vertices(P, lo, hi) -> np.ndarray:
    """Vertices of ``P`` clipped to the box ``[lo, hi]``, counter-clockwise."""
    H = np.vstack([P.H, np.eye(2), -np.eye(2)])
    b = np.concatenate([P.b, hi, -np.asarray(lo)])
    # interior point: Chebyshev centre
    norms = np.linalg.norm(H, axis=1)
    res = linprog([0, 0, -1], A_ub=np.hstack([H, norms[:, None]]), b_ub=b, bounds=[(None, None)] * 2 + [(0, None)],
                  method="highs")
    if res.status != 0 or res.x[2] <= 1e-12:
        return np.zeros((0, 2))
    hs = HalfspaceIntersection(np.hstack([H, -b[:, None]]), res.x[:2])
    v = hs.intersections
    ang = np.arctan2(v[:, 1] - res.x[1], v[:, 0] - res.x[0])
    return v[np.argsort(ang)]


def _color(name: str, avoided: set) -> str:
    if name in avoided:
        return "#d9534f"
    low = name.lower()
    if low.startswith("chg"):
        return "#f0ad4e"
    if low.startswith("k"):
        return "#5bc0de"
    return "#5cb85c"


def plot_plan(scenario, path, trajectory=None, rho=None, samples: int = 200):
    """Write an SVG; regions carry gid ``region-<name>``, the curve ``trajectory``."""
    if scenario.workspace.dim != 2:
        raise ValueError("plotting needs a 2-D scenario")
    from .stl import NegPred

    avoided = {f.name for f in scenario.stl().walk() if isinstance(f, NegPred)}
    lo, hi = scenario.workspace.lo, scenario.workspace.hi
    if rho is not None and trajectory is not None:
        fig, (ax, side) = plt.subplots(1, 2, figsize=(10, 5), gridspec_kw={"width_ratios": [1.4, 1]})
    else:
        fig, ax = plt.subplots(figsize=(6, 6))
        side = None
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    for name, P in scenario.regions.items():
        v = polygon_vertices(P, lo, hi)
        if not len(v):
            continue
        patch = PolygonPatch(v, closed=True, facecolor=_color(name, avoided), edgecolor="black", alpha=0.55, lw=0.8)
        patch.set_gid(f"region-{name}")
        ax.add_patch(patch)
        cx, cy = v.mean(axis=0)
        ax.text(cx, cy, name, ha="center", va="center", fontsize=8)
    st = ax.plot(*scenario.start, "o", ms=9, mfc="white", mec="black")[0]
    st.set_gid("start")
    if trajectory is not None:
        t, pts = trajectory.sample(samples)
        line = ax.plot(pts[:, 0], pts[:, 1], "-", color="#1f4e9c", lw=1.6)[0]
        line.set_gid("trajectory")
        joints = trajectory.controls[:, 0]
        ax.plot(joints[:, 0], joints[:, 1], ".", color="#1f4e9c", ms=3)
        goal = ax.plot(*pts[-1], "*", ms=14, color="gold", mec="black")[0]
        goal.set_gid("goal")
    ax.set_title(scenario.name)
    if side is not None:
        rho = np.asarray(rho, dtype=float)
        edges = np.arange(rho.size + 1) * trajectory.dt
        steps = side.stairs(rho, edges, color="#1f4e9c")
        steps.set_gid("rho-profile")
        side.axhline(scenario.rho_star, color="#d9534f", ls="--", lw=1)
        side.set_xlabel("t [s]")
        side.set_ylabel("rho(t) [m]")
        side.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
