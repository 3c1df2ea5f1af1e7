"""Scenario model, JSON I/O and the four shipped benchmark missions."""
from __future__ import annotations

import json
from importlib import resources

from .model import SCHEMA, SCHEMA_VERSION, Scenario, ScenarioError, box, load, save

BUILTINS = ("reach-avoid", "complex-reach-avoid", "narrow-passing", "door-puzzle")


def builtin(name: str) -> Scenario:
    if name not in BUILTINS:
        raise ScenarioError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files(__package__).joinpath("data", f"{name}.json").read_text()
    return Scenario.from_dict(json.loads(text))


def diagram_path(name: str):
    """Path of the SVG sidecar documenting a builtin layout."""
    if name not in BUILTINS:
        raise ScenarioError(f"unknown builtin {name!r}")
    return resources.files(__package__).joinpath("data", f"{name}.svg")


__all__ = ["BUILTINS", "SCHEMA", "SCHEMA_VERSION", "Scenario", "ScenarioError", "box", "builtin",
           "diagram_path", "load", "save"]
