"""Scenario data model and its versioned JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict

import jsonschema
import numpy as np

from ..geometry import Polytope, Workspace
from ..stl import formula_horizon, parse, to_nnf

SCHEMA_VERSION = 1

_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_POS = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "required": ["schema", "workspace", "regions", "formula", "T", "N", "rho_star", "v_max", "a_max",
                 "start"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "workspace": {
            "type": "object",
            "required": ["lo", "hi"],
            "properties": {"lo": _VEC, "hi": _VEC},
            "additionalProperties": False,
        },
        "regions": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["H", "b"],
                "properties": {
                    "H": {"type": "array", "items": _VEC, "minItems": 1},
                    "b": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                },
                "additionalProperties": False,
            },
        },
        "formula": {"type": "string", "minLength": 1},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "N": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 3},
        "rho_star": {"type": "number", "exclusiveMinimum": 0},
        "v_max": _POS,
        "a_max": _POS,
        "start": _VEC,
        "weights": {
            "type": "object",
            "properties": {k: {"type": "number", "minimum": 0} for k in ("lambda", "Q", "R")},
            "additionalProperties": False,
        },
        "allow_horizon_overrun": {"type": "boolean"},
        "metadata": {"type": "object"},
    },
    "additionalProperties": False,
}


class ScenarioError(ValueError):
    """Invalid scenario; ``pointer`` is the JSON pointer of the offending value."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


@dataclass(frozen=True)
class Scenario:
    workspace: Workspace
    regions: Dict[str, Polytope]
    formula: str
    T: float
    N: int
    rho_star: float
    v_max: np.ndarray
    a_max: np.ndarray
    start: np.ndarray
    n: int = 5
    lam: float = 1.0
    Q: float = 0.01
    R: float = 0.01
    name: str = "scenario"
    allow_horizon_overrun: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.workspace.dim
        for key in ("v_max", "a_max", "start"):
            arr = np.array(getattr(self, key), dtype=float).ravel()
            if arr.size == 1 and key != "start":
                arr = np.full(d, arr[0])
            if arr.size != d:
                raise ScenarioError(f"expected {d} values, got {arr.size}", f"/{key}")
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)
        if np.any(self.v_max <= 0) or np.any(self.a_max <= 0):
            raise ScenarioError("dynamic limits must be positive", "/v_max")
        if not self.rho_star > 0:
            raise ScenarioError("rho_star must be positive", "/rho_star")
        if self.N < 1:
            raise ScenarioError("need at least one segment", "/N")
        if self.n < 3:
            raise ScenarioError("degree must be at least 3 for C2 joints", "/n")
        if not self.workspace.contains(self.start):
            raise ScenarioError("start position lies outside the workspace", "/start")
        for name, P in self.regions.items():
            if P.dim != d:
                raise ScenarioError(f"region has dimension {P.dim}, workspace has {d}", f"/regions/{name}")
        f = self.stl()
        missing = sorted(f.region_names() - set(self.regions))
        if missing:
            raise ScenarioError(f"formula references undefined region {missing[0]!r}", "/formula")
        if formula_horizon(f) > self.T + 1e-9 and not self.allow_horizon_overrun:
            raise ScenarioError(f"formula horizon {formula_horizon(f):g} exceeds T={self.T:g}"
                                " (set allow_horizon_overrun to accept)", "/formula")

    @property
    def dim(self) -> int:
        return self.workspace.dim

    @property
    def dt(self) -> float:
        return self.T / self.N

    def stl(self):
        """The formula parsed and in negation normal form."""
        return to_nnf(parse(self.formula))

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "workspace": self.workspace.to_dict(),
            "regions": {k: P.to_dict() for k, P in self.regions.items()},
            "formula": self.formula,
            "T": self.T,
            "N": self.N,
            "n": self.n,
            "rho_star": self.rho_star,
            "v_max": self.v_max.tolist(),
            "a_max": self.a_max.tolist(),
            "start": self.start.tolist(),
            "weights": {"lambda": self.lam, "Q": self.Q, "R": self.R},
        }
        if self.allow_horizon_overrun:
            out["allow_horizon_overrun"] = True
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            raise ScenarioError(e.message, _pointer(e.absolute_path))
        regions = {}
        for name, r in data["regions"].items():
            try:
                regions[name] = Polytope(r["H"], r["b"])
            except ValueError as exc:
                raise ScenarioError(str(exc), f"/regions/{name}") from None
        try:
            ws = Workspace.from_dict(data["workspace"])
        except ValueError as exc:
            raise ScenarioError(str(exc), "/workspace") from None
        w = data.get("weights", {})
        try:
            return cls(
                workspace=ws, regions=regions, formula=data["formula"], T=float(data["T"]),
                N=int(data["N"]), n=int(data.get("n", 5)), rho_star=float(data["rho_star"]),
                v_max=data["v_max"], a_max=data["a_max"], start=data["start"],
                lam=float(w.get("lambda", 1.0)), Q=float(w.get("Q", 0.01)), R=float(w.get("R", 0.01)),
                name=data.get("name", "scenario"),
                allow_horizon_overrun=bool(data.get("allow_horizon_overrun", False)),
                metadata=dict(data.get("metadata", {})),
            )
        except ScenarioError:
            raise
        except ValueError as exc:  # parse errors and geometry checks
            raise ScenarioError(str(exc), "/formula" if "line" in str(exc) else "") from None


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def load(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    return Scenario.from_dict(data)


def save(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2) + "\n")


def box(lo, hi) -> Polytope:
    return Polytope.box(lo, hi)

