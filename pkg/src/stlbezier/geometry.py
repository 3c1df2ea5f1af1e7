"""Convex polytopes ``{x : Hx <= b}`` and the signed margins used by the encoder
and the verifier.

Rows of ``H`` are kept exactly as supplied; every margin divides by the row
norm on the fly, so scaling a row ``(H_i, b_i)`` by a positive factor never
changes a result.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned bounding box ``[lo, hi]`` in ``R^d``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).ravel()
        hi = np.asarray(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size < 1:
            raise ValueError("workspace lo/hi must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("workspace bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("workspace requires lo < hi element-wise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def as_polytope(self) -> "Polytope":
        return Polytope.box(self.lo, self.hi)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Workspace":
        return cls(data["lo"], data["hi"])


@dataclass(frozen=True)
class Polytope:
    """Convex region ``Poly(H, b) = {x : H x <= b}``; may be unbounded."""

    H: np.ndarray
    b: np.ndarray
    _norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        H = np.atleast_2d(np.array(self.H, dtype=float))
        b = np.array(self.b, dtype=float).ravel()
        if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
            raise ValueError("H must be a non-empty r x d matrix")
        if b.shape != (H.shape[0],):
            raise ValueError(f"b has shape {b.shape}, expected ({H.shape[0]},)")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(b))):
            raise ValueError("polytope data must be finite")
        norms = np.linalg.norm(H, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("every row of H must be nonzero")
        H.setflags(write=False)
        b.setflags(write=False)
        norms.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_norms", norms)

    @classmethod
    def box(cls, lo, hi) -> "Polytope":
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        d = lo.size
        eye = np.eye(d)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def n_rows(self) -> int:
        return self.H.shape[0]

    @property
    def row_norms(self) -> np.ndarray:
        return self._norms

    def _check_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point dimension {x.shape[-1]} does not match polytope dimension {self.dim}")
        return x

    def row_margins(self, x) -> np.ndarray:
        """Per-row inside margins ``(b_i - H_i x) / ||H_i||``; shape ``(..., r)``."""
        x = self._check_points(x)
        return (self.b - x @ self.H.T) / self._norms

    def contains(self, x, tol: float = 0.0):
        return normalized_margin(self, x) >= -tol

    def to_dict(self) -> dict:
        return {"H": self.H.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Polytope":
        return cls(data["H"], data["b"])

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return self.H.shape == other.H.shape and np.array_equal(self.H, other.H) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.H.tobytes(), self.b.tobytes()))


def normalized_margin(P: Polytope, x):
    """Minimum over rows of ``(b_i - H_i x) / ||H_i||``.

    Positive iff ``x`` is strictly inside; for a point inside a bounded
    polytope this is the Euclidean distance to the nearest face plane.
    Accepts a single point or an ``(m, d)`` array of points.
    """
    return P.row_margins(x).min(axis=-1)


def halfspace_margin(P: Polytope, i: int, x):
    """Signed distance ``(H_i x - b_i) / ||H_i||`` beyond face ``i`` (0-based)."""
    if not 0 <= i < P.n_rows:
        raise IndexError(f"row index {i} out of range for polytope with {P.n_rows} rows")
    x = P._check_points(x)
    return (x @ P.H[i] - P.b[i]) / P.row_norms[i]


def outside_margin(P: Polytope, x):
    """Largest half-space margin over the faces; positive iff ``x`` is outside."""
    return -normalized_margin(P, x)


def shrink(P: Polytope, c: float) -> Polytope:
    """Inner parallel body: ``x in shrink(P, c)`` iff ``normalized_margin(P, x) >= c``."""
    if c < 0:
        raise ValueError("shrink amount must be nonnegative")
    return Polytope(P.H, P.b - c * P.row_norms)


def support(h: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Maximum of ``h . x`` over the box ``[lo, hi]``."""
    return float(np.sum(np.where(h > 0, h * hi, h * lo)))
