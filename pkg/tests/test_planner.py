import numpy as np
import pytest
from sklearn.base import clone

from stlbezier.geometry import Workspace
from stlbezier.milp import write_solution
from stlbezier.planner import DEFAULT_EXTERNAL, BezierStlPlanner, diagnose, plan, solve_external
from stlbezier.scenarios import Scenario, box
from stlbezier.verifier import verify_trajectory


def small(**kw):
    d = dict(rho_star=0.2, v_max=[3, 3], a_max=[4, 4], start=[4.0, 5.0], name="small")
    d.update(kw)
    return Scenario(Workspace([0, 0], [10, 10]), {"Goal": box([5, 4], [7, 6]), "Obs": box([1, 7], [3, 9])},
                    "F[0,3] Goal & G[0,4] !Obs", 4.0, 4, **d)


def test_estimator_fit_predict():
    est = BezierStlPlanner(rho_star=0.25)
    assert est.get_params()["rho_star"] == 0.25
    other = clone(est).set_params(segments=5)
    assert other.segments == 5 and est.segments is None
    est.fit(small())
    assert est.rho_.min() >= 0.25 - 1e-9
    np.testing.assert_allclose(est.predict([0.0]), [[4.0, 5.0]])
    assert est.predict(np.linspace(0, 4, 9)).shape == (9, 2)


def test_estimator_raises_when_infeasible():
    with pytest.raises(RuntimeError, match="infeasible"):
        BezierStlPlanner(rho_star=50.0).fit(small())


def test_plan_result_and_verification():
    res = plan(small())
    assert res.ok and res.status == "optimal"
    summ = res.summary()
    assert summ["binaries"] == res.encoding.model.n_binary and summ["rho_min"] >= 0.2 - 1e-9
    rep = verify_trajectory(res.plan.trajectory, small(), res.plan.rho)
    assert rep.passed


def test_external_matches_builtin():
    res = plan(small())
    ext = solve_external(res.encoding.model, DEFAULT_EXTERNAL)
    assert ext.status == "optimal"
    assert ext.objective == pytest.approx(res.solution.objective, abs=1e-5)


def test_solution_file_round_trip(tmp_path):
    res = plan(small())
    path = tmp_path / "x.sol"
    write_solution(res.encoding.model, res.solution.x, path)
    again = plan(small(), solution_file=path)
    assert again.status == "feasible"
    assert again.solution.objective == pytest.approx(res.solution.objective, abs=1e-12)


def test_diagnose_names_blocking_conjunct():
    s = Scenario(Workspace([0, 0], [10, 10]), {"Goal": box([8, 8], [10, 10]), "Obs": box([1, 7], [3, 9])},
                 "F[0,1] Goal & G[0,2] !Obs", 2.0, 2, 0.2, [1, 1], [1, 1], [1.0, 1.0])
    verdicts = diagnose(s)
    assert [v for k, v in verdicts if "Goal" in k] == ["blocking"]
    assert [v for k, v in verdicts if "Obs" in k] == ["not sufficient alone"]


def test_lambda_monotone_on_small_mission():
    sums = []
    for lam in (0.1, 1.0, 10.0):
        res = plan(small(lam=lam))
        assert res.status == "optimal"
        sums.append(res.plan.rho.sum())
    assert sums[0] <= sums[1] + 1e-6 and sums[1] <= sums[2] + 1e-6


def test_warm_start_is_feasible_and_keeps_the_optimum():
    from stlbezier.encoder import build
    from stlbezier.planner import warm_start

    enc = build(small())
    first = warm_start(enc)
    assert first.ok and enc.model.worst_violation(first.x, tol=1e-6) is None
    cold = plan(small(), warm=False)
    warm = plan(small())
    assert warm.solution.objective == pytest.approx(cold.solution.objective, abs=1e-7)
