"""Robust STL motion planning with piecewise Bezier curves and a mixed-integer encoding."""
from .bezier import BezierSegment, PiecewiseTrajectory
from .encoder import PlanConfig, build
from .geometry import Polytope, Workspace
from .planner import BezierStlPlanner, plan
from .scenarios import Scenario, builtin
from .stl import parse
from .verifier import check_proposition1, tube_test, verify_trajectory

__version__ = "0.1.0"

__all__ = [
    "BezierSegment", "BezierStlPlanner", "PiecewiseTrajectory", "PlanConfig", "Polytope", "Scenario",
    "Workspace", "build", "builtin", "check_proposition1", "parse", "plan", "tube_test", "verify_trajectory",
]
