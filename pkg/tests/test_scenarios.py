import json
import warnings
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stlbezier.encoder import build
from stlbezier.geometry import Workspace
from stlbezier.scenarios import BUILTINS, Scenario, ScenarioError, box, builtin, diagram_path, load, save
from stlbezier.stl import Until, formula_horizon

MINIMAL = {
    "schema": 1,
    "workspace": {"lo": [0, 0], "hi": [10, 10]},
    "regions": {"R": {"H": [[1, 0], [-1, 0], [0, 1], [0, -1]], "b": [8, -6, 8, -6]}},
    "formula": "F[0,5] R",
    "T": 5,
    "N": 5,
    "rho_star": 0.2,
    "v_max": [2, 2],
    "a_max": [2, 2],
    "start": [1, 1],
}


def test_minimal_round_trip(tmp_path):
    s = Scenario.from_dict(MINIMAL)
    path = tmp_path / "s.json"
    save(s, path)
    back = load(path)
    assert back.to_dict() == s.to_dict()
    assert back.regions["R"] == s.regions["R"]
    save(back, tmp_path / "t.json")
    assert (tmp_path / "t.json").read_text() == path.read_text()


def test_missing_region_names_it():
    data = dict(MINIMAL, formula="F[0,5] Goal")
    with pytest.raises(ScenarioError, match="Goal") as e:
        Scenario.from_dict(data)
    assert e.value.pointer == "/formula"


def test_schema_errors_carry_pointer():
    data = json.loads(json.dumps(MINIMAL))
    data["regions"]["R"]["b"] = "oops"
    with pytest.raises(ScenarioError) as e:
        Scenario.from_dict(data)
    assert e.value.pointer == "/regions/R/b"
    with pytest.raises(ScenarioError) as e:
        Scenario.from_dict(dict(MINIMAL, schema=2))
    assert e.value.pointer == "/schema"
    with pytest.raises(ScenarioError) as e:
        Scenario.from_dict(dict(MINIMAL, start=[20, 1]))
    assert e.value.pointer == "/start"


def test_horizon_override_flag():
    with pytest.raises(ScenarioError, match="horizon"):
        Scenario.from_dict(dict(MINIMAL, formula="F[0,5] G[0,2] R"))
    s = Scenario.from_dict(dict(MINIMAL, formula="F[0,5] G[0,2] R", allow_horizon_overrun=True))
    assert s.allow_horizon_overrun


def test_bad_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load(p)


EXPECTED = {"reach-avoid": (0.60, 15), "complex-reach-avoid": (0.30, 20), "narrow-passing": (0.15, 15),
            "door-puzzle": (0.25, 25)}


@pytest.mark.parametrize("name", BUILTINS)
def test_builtins_load_and_build_cleanly(name):
    s = builtin(name)
    rho_star, T = EXPECTED[name]
    assert s.rho_star == rho_star and s.T == T
    assert s.metadata.get("layout") == "invented"
    ws = s.workspace
    assert np.all(ws.lo == 0) and np.all(ws.hi == 10)
    for P in s.regions.values():
        # every region lies inside the workspace box
        from scipy.optimize import linprog
        for j in range(2):
            for sign in (1, -1):
                c = np.zeros(2)
                c[j] = -sign
                res = linprog(c, A_ub=P.H, b_ub=P.b, bounds=[(None, None)] * 2, method="highs")
                assert res.status == 0
                v = -res.fun * sign
                assert ws.lo[j] - 1e-9 <= v <= ws.hi[j] + 1e-9
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        enc = build(s)
    assert not enc.warnings
    assert formula_horizon(s.stl()) <= T or s.allow_horizon_overrun


@pytest.mark.parametrize("name", BUILTINS)
def test_builtin_diagram_is_svg(name):
    path = diagram_path(name)
    root = ET.fromstring(path.read_text())
    assert root.tag.endswith("svg")
    ids = {el.get("id") for el in root.iter()}
    for region in builtin(name).regions:
        assert f"region-{region}" in ids


def test_reach_avoid_structure():
    s = builtin("reach-avoid")
    assert s.rho_star == 0.60
    assert set(s.regions) == {"B", "Y", "R", "G"}


def test_door_has_four_untils():
    f = builtin("door-puzzle").stl()
    count = 0
    stack = [f]
    while stack:
        g = stack.pop()
        count += isinstance(g, Until)
        stack.extend(g.children())
    assert count == 4
    assert builtin("door-puzzle").formula.count("U[0,2]") == 4


def test_charging_station_groups():
    s = builtin("complex-reach-avoid")
    assert {f"Chg1_{i}" for i in range(1, 5)} <= set(s.regions)
    assert {f"Chg2_{i}" for i in range(1, 4)} <= set(s.regions)


def test_unknown_builtin():
    with pytest.raises(ScenarioError):
        builtin("maze")


def test_with_and_dimension_checks():
    s = Scenario.from_dict(MINIMAL)
    assert s.with_(N=10).dt == 0.5
    with pytest.raises(ScenarioError):
        Scenario(Workspace([0, 0, 0], [1, 1, 1]), {"R": box([0, 0], [1, 1])}, "R", 1.0, 1, 0.1, 1, 1, [0, 0, 0])
