import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from stlbezier.bezier import PiecewiseTrajectory
from stlbezier.geometry import Workspace
from stlbezier.scenarios import Scenario, box
from stlbezier.verifier import (PreconditionViolation, ResolutionTooCoarse, check_proposition1, prop1_bound,
                                tube_envelope, tube_test, verify_trajectory)

from oracles import PENT, random_segment

WS = Workspace([0, 0], [10, 10])
GOAL = box([4, 4], [6, 6])
OBS = box([6, 4], [8, 6])


def stationary(p, N=3, dt=1.0, n=5):
    return PiecewiseTrajectory(np.broadcast_to(np.asarray(p, float), (N, n + 1, 2)).copy(), dt)


def scen(formula, start, rho_star=0.3, T=3.0, N=3):
    return Scenario(WS, {"Goal": GOAL, "Obs": OBS}, formula, T, N, rho_star, [1, 1], [1, 1], start)


def test_stationary_in_goal_passes_with_center_margin():
    s = scen("G[0,3] Goal", [5, 5])
    rep = verify_trajectory(stationary([5, 5]), s)
    assert rep.passed
    assert rep.stl_margin == pytest.approx(1.0)


def test_grazing_obstacle_fails_named_check():
    s = scen("G[0,3] !Obs", [5.71, 5])
    rep = verify_trajectory(stationary([5.71, 5]), s)
    assert rep.stl_margin == pytest.approx(0.29)
    assert not rep.passed and rep.failed() == ["stl_margin"]


def test_broken_joint_fails_continuity():
    c = stationary([5, 5]).controls.copy()
    c[1] += [0.01, 0.0]
    c[0, 0] -= [0.01, 0.0]
    y = PiecewiseTrajectory(c, 1.0)
    rep = verify_trajectory(y, scen("G[0,3] Goal", [5, 5]))
    assert "continuity_C0" in rep.failed()
    assert "start" in rep.failed()


def test_speed_violation_detected():
    c = np.zeros((1, 6, 2))
    c[0, :, 0] = np.linspace(4.5, 5.5, 6)
    c[0, :, 1] = 5.0
    y = PiecewiseTrajectory(c, 0.5)  # 2 m/s on a 1 m/s limit
    s = Scenario(WS, {"Goal": GOAL}, "Goal", 0.5, 1, 0.1, [1, 1], [1, 1], [4.5, 5])
    rep = verify_trajectory(y, s, resolution=100)
    assert "velocity_axis0" in rep.failed()
    assert rep.velocity_max[0] == pytest.approx(2.0)


def test_resolution_floor():
    with pytest.raises(ResolutionTooCoarse):
        verify_trajectory(stationary([5, 5]), scen("Goal", [5, 5]), resolution=99)


def test_report_json(tmp_path):
    rep = verify_trajectory(stationary([5, 5]), scen("G[0,3] Goal", [5, 5]), rho=[1.0, 1.0, 1.0])
    text = rep.to_json(tmp_path / "r.json")
    assert '"passed": true' in text
    rep.warnings.append("x")
    assert not rep.strict().passed


def test_tube_envelope_bounded_by_segment_rho():
    rho = np.array([0.5, 0.2, 0.9, 0.4])
    t = np.linspace(0, 4, 4001)
    env = tube_envelope(rho, 1.0, t)
    seg = np.minimum((t / 1.0).astype(int), 3)
    assert np.all(env <= rho[seg] + 1e-12)
    assert np.all(env >= 0)


def test_zero_tube_is_identity():
    s = scen("G[0,3] !Obs", [5.0, 5])
    res = tube_test(stationary([5.0, 5]), [0, 0, 0], s, trials=5)
    assert res.passed and res.worst_margin == pytest.approx(1.0)


def test_tube_passes_inside_and_fails_at_double_radius():
    # parked exactly rho away from the obstacle face
    s = scen("G[0,3] !Obs", [5.7, 5])
    y = stationary([5.7, 5])
    rho = [0.3, 0.3, 0.3]
    ok = tube_test(y, rho, s, trials=200, seed=42)
    assert ok.failures == 0 and ok.label == "statistical evidence"
    bad = tube_test(y, rho, s, trials=200, seed=42, scale=2.0)
    assert bad.failures >= 1


def test_tube_is_seeded():
    s = scen("G[0,3] !Obs", [5.7, 5])
    a = tube_test(stationary([5.7, 5]), [0.5] * 3, s, trials=20, seed=3)
    b = tube_test(stationary([5.7, 5]), [0.5] * 3, s, trials=20, seed=3)
    assert a == b


def test_margin_tightens_with_resolution():
    # a curve that dips toward the obstacle between coarse samples
    rng = np.random.default_rng(0)
    for _ in range(5):
        c = np.cumsum(rng.normal(scale=0.05, size=(3, 6, 2)), axis=1) + [5.0, 5.0]
        for k in range(1, 3):
            c[k] += c[k - 1, -1] - c[k, 0]
        y = PiecewiseTrajectory(c, 1.0)
        s = scen("G[0,3] !Obs & G[0,3] Goal", c[0, 0].tolist())
        # only nested grids are comparable: the 300-sample grid is not a subset of the 1000-sample one
        for chain in ((100, 300), (100, 200, 1000)):
            m = [verify_trajectory(y, s, resolution=r).stl_margin for r in chain]
            assert all(a >= b - 1e-12 for a, b in zip(m, m[1:]))


# -- the geometric bound ------------------------------------------------------

@pytest.mark.parametrize("polarity", ["inside", "outside"])
def test_proposition1_random_segments(polarity):
    rng = np.random.default_rng(11 if polarity == "inside" else 12)
    for i in range(100):
        c, r, eps, a, dt = random_segment(rng, PENT, polarity, face=i % PENT.n_rows)
        res = check_proposition1(c, PENT, r, eps, a, polarity, dt=dt)
        assert res.max_distance <= 3 * dt * dt * np.linalg.norm(a) / 8 + 1e-9
        assert res.curve_margin >= r - eps - 1e-9
        assert res.passed


def test_proposition1_degenerate_and_affine():
    c = np.tile([2.0, 2.0], (6, 1))
    res = check_proposition1(c, box([0, 0], [4, 4]), 1.0, 0.6, [1, 1], "inside", dt=1.0)
    assert res.bound_slack == pytest.approx(res.bound)
    assert res.curve_margin == pytest.approx(2.0)
    line = np.column_stack([np.linspace(1, 3, 6), np.full(6, 5.0)])  # 1 m from the top face y <= 4
    res = check_proposition1(line, box([0, 0], [4, 4]), 1.0, 2.2, [0.04, 0.04], "outside", dt=10.0)
    assert res.curve_margin == pytest.approx(1.0)
    assert res.curve_slack == pytest.approx(2.2)


def test_precondition_violation_is_distinct():
    c = np.tile([2.0, 2.0], (6, 1))
    c[1] += 0.5
    with pytest.raises(PreconditionViolation, match="end control point differences"):
        check_proposition1(c, box([0, 0], [4, 4]), 0.1, 1.0, [1, 1], "inside", dt=1.0)
    with pytest.raises(PreconditionViolation):
        check_proposition1(np.tile([2.0, 2.0], (6, 1)), box([0, 0], [4, 4]), 3.0, 1.0, [1, 1], "inside",
                           dt=1.0)


def worst_case_ratio(n):
    """Largest nearer-end distance the difference constraints allow, over the bound, by LP (1-D)."""
    dt, a = 1.0, 1.0
    cap = a * dt * dt / (2 * n)
    acc = a * dt * dt / (n * (n - 1))
    best = 0.0
    for i, far in itertools.product(range(1, n), (1, -1)):
        # variables c_0..c_n, t; maximise t <= c_i - c_0, t <= far * (c_i - c_n)
        nv = n + 2
        A, b = [], []

        def row(coefs, rhs):
            r = np.zeros(nv)
            for j, v in coefs:
                r[j] += v
            A.append(r)
            b.append(rhs)
        row([(n + 1, 1), (i, -1), (0, 1)], 0)
        row([(n + 1, 1), (i, -far), (n, far)], 0)
        for s in (1, -1):
            row([(1, s), (0, -s)], cap)
            row([(n, s), (n - 1, -s)], cap)
            for j in range(n - 1):
                row([(j + 2, s), (j + 1, -2 * s), (j, s)], acc)
        cost = np.zeros(nv)
        cost[-1] = -1
        bounds = [(0, 0)] + [(None, None)] * n + [(None, None)]
        res = linprog(cost, A_ub=np.array(A), b_ub=b, bounds=bounds, method="highs")
        best = max(best, -res.fun)
    return best / (3 * dt * dt * a / 8)


def closed_form_ratio(n):
    vals = [i / (2 * n) + i * (i - 1) / (2 * n * (n - 1)) for i in range(1, n // 2 + 1)]
    return max(vals) / (3 / 8)


def test_control_point_bound_tightness():
    assert worst_case_ratio(5) == pytest.approx(2 / 3, abs=1e-9)
    for n in (4, 5, 6, 7, 8):
        assert worst_case_ratio(n) == pytest.approx(closed_form_ratio(n), abs=1e-9)
        assert worst_case_ratio(n) <= 1.0 + 1e-12
    assert worst_case_ratio(6) >= 0.9
    assert worst_case_ratio(12) >= 0.9


def test_prop1_bound_value():
    assert prop1_bound([3.0, 4.0], 2.0) == pytest.approx(3 * 4 * 5 / 8)
