import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from stlbezier.geometry import (Polytope, Workspace, halfspace_margin, normalized_margin, outside_margin,
                                shrink, support)

SQ = Polytope.box([-1, -1], [1, 1])


def random_polytope(rng, d=2, r=6):
    """Bounded polytope: hull of random points around the origin, given by its facets."""
    pts = rng.normal(size=(r * 3, d))
    hull = ConvexHull(pts)
    eq = hull.equations  # a.x + c <= 0
    scale = rng.uniform(0.5, 3.0, size=len(eq))[:, None]
    return Polytope(eq[:, :-1] * scale, -eq[:, -1] * scale[:, 0]), hull


def test_margin_center_and_outside():
    assert normalized_margin(SQ, [0, 0]) == 1.0
    assert normalized_margin(SQ, [2, 0]) == -1.0


def test_margin_dimension_mismatch():
    with pytest.raises(ValueError):
        normalized_margin(SQ, [0, 0, 0])


def test_margin_matches_boundary_sampling():
    rng = np.random.default_rng(3)
    for _ in range(10):
        P, hull = random_polytope(rng)
        x = hull.points[hull.vertices].mean(axis=0)
        # dense boundary samples along every facet edge
        verts = hull.points
        samples = []
        for a, b in hull.simplices:
            s = np.linspace(0, 1, 4000)[:, None]
            samples.append(verts[a] + s * (verts[b] - verts[a]))
        dist = np.linalg.norm(np.vstack(samples) - x, axis=1).min()
        assert abs(normalized_margin(P, x) - dist) < 1e-3


def test_shrink_square():
    assert shrink(SQ, 0.0) == SQ
    P = shrink(SQ, 0.5)
    assert P.contains([0.4, 0])
    assert not P.contains([0.6, 0])
    with pytest.raises(ValueError):
        shrink(SQ, -0.1)


def test_shrink_membership_matches_margin():
    rng = np.random.default_rng(7)
    for _ in range(5):
        P, _ = random_polytope(rng)
        c = rng.uniform(0, 0.5)
        x = rng.uniform(-2, 2, size=(1000, 2))
        assert np.array_equal(shrink(P, c).contains(x), normalized_margin(P, x) >= c)


def test_halfspace_margin():
    assert halfspace_margin(SQ, 0, [3, 0]) == 2.0
    assert halfspace_margin(SQ, 0, [1, 0.3]) == 0.0
    with pytest.raises(IndexError):
        halfspace_margin(SQ, 4, [0, 0])


def test_halfspace_margin_is_negated_row_margin():
    rng = np.random.default_rng(11)
    P, _ = random_polytope(rng)
    x = rng.normal(size=(200, 2))
    rows = P.row_margins(x)
    for i in range(P.n_rows):
        np.testing.assert_allclose(halfspace_margin(P, i, x), -rows[:, i], atol=1e-12)
    np.testing.assert_allclose(outside_margin(P, x), -normalized_margin(P, x))


def test_unbounded_halfspace_is_legal():
    P = Polytope([[0.0, 2.0]], [4.0])
    assert normalized_margin(P, [100.0, 0.0]) == 2.0


def test_invalid_polytopes():
    with pytest.raises(ValueError):
        Polytope([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        Polytope([[1.0, np.inf]], [1.0])
    with pytest.raises(ValueError):
        Workspace([0, 0], [0, 1])


def test_support_of_box():
    assert support(np.array([1.0, -2.0]), np.array([0.0, 0.0]), np.array([3.0, 1.0])) == 3.0


coords = st.floats(-5, 5, allow_nan=False)
points = st.tuples(coords, coords)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), points)
def test_shrink_composes(a, b, x):
    P = Polytope([[1, 2], [-1, 0.5], [0.3, -1], [-0.2, -0.7]], [3, 2, 1, 2])
    assert shrink(shrink(P, a), b).contains(x) == shrink(P, a + b).contains(x) or \
        abs(normalized_margin(P, x) - (a + b)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(points, points, st.floats(0, 1))
def test_margin_concave(x, y, th):
    P = Polytope([[1, 2], [-1, 0.5], [0.3, -1], [-0.2, -0.7]], [3, 2, 1, 2])
    x, y = np.array(x), np.array(y)
    mid = normalized_margin(P, th * x + (1 - th) * y)
    assert mid >= min(normalized_margin(P, x), normalized_margin(P, y)) - 1e-12


@settings(max_examples=100, deadline=None)
@given(points, st.integers(0, 3), st.floats(0.01, 100))
def test_row_scaling_invariant(x, i, lam):
    H = np.array([[1, 2], [-1, 0.5], [0.3, -1], [-0.2, -0.7]], dtype=float)
    b = np.array([3, 2, 1, 2], dtype=float)
    H2, b2 = H.copy(), b.copy()
    H2[i] *= lam
    b2[i] *= lam
    assert abs(normalized_margin(Polytope(H, b), x) - normalized_margin(Polytope(H2, b2), x)) < 1e-12
