"""Scenario documents: schema, invariant checks, loading.

A scenario is a JSON document describing the world (bounds, static boxes and
cylinders, scripted dynamic obstacles), the robot start, the goal script and
the episode length. Two presets ship with the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from ..errors import ScenarioError

PEDESTRIAN_SPEED_BAND = (0.5, 1.5)

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_VEC2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["name", "bounds", "robot_start", "episode_length", "robot_radius"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "tag": {"type": "string"},
        "description": {"type": "string"},
        "bounds": {
            "type": "object", "required": ["min", "max"], "additionalProperties": False,
            "properties": {"min": _VEC3, "max": _VEC3},
        },
        "static_obstacles": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "object", "required": ["type", "min", "max"], "additionalProperties": False,
                     "properties": {"type": {"const": "box"}, "min": _VEC3, "max": _VEC3}},
                    {"type": "object", "required": ["type", "center", "radius", "height"],
                     "additionalProperties": False,
                     "properties": {"type": {"const": "cylinder"}, "center": _VEC2,
                                    "radius": _POS, "height": _POS}},
                ]
            },
        },
        "dynamic_obstacles": {
            "type": "array",
            "items": {
                "type": "object", "required": ["waypoints", "speed", "radius", "height"],
                "additionalProperties": False,
                "properties": {
                    "waypoints": {"type": "array", "items": _VEC2, "minItems": 2},
                    "speed": {"type": "number", "minimum": 0},
                    "radius": _POS,
                    "height": _POS,
                    "label": {"type": "string"},
                },
            },
        },
        "robot_start": {
            "type": "object", "required": ["position"], "additionalProperties": False,
            "properties": {"position": _VEC3, "heading": {"type": "number"}},
        },
        "goals": {
            "type": "array",
            "items": {
                "type": "object", "required": ["position"], "additionalProperties": False,
                "properties": {
                    "position": _VEC3,
                    "trigger": {"enum": ["reach", "timed"]},
                    "radius": _POS,
                    "time": {"type": "number", "minimum": 0},
                },
            },
        },
        "goal_script": {
            "type": "object", "required": ["type"], "additionalProperties": False,
            "properties": {
                "type": {"const": "respawn_opposite"},
                "reach_radius": _POS,
                "max_events": {"type": "integer", "minimum": 1},
                "altitude": {"type": "number"},
                "clearance": {"type": "number", "minimum": 0},
            },
        },
        "episode_length": _POS,
        "robot_radius": _POS,
        "sensor_preset": {"enum": ["sim", "real"]},
        "overrides": {"type": "object"},
    },
}


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray


@dataclass
class Cylinder:
    center: np.ndarray   # (x, y); base at z = 0
    radius: float
    height: float


@dataclass
class DynamicSpec:
    waypoints: np.ndarray
    speed: float
    radius: float
    height: float
    label: str = "pedestrian"


@dataclass
class Goal:
    position: np.ndarray
    trigger: str = "reach"
    radius: float = 1.0
    time: float | None = None


@dataclass
class GoalScript:
    reach_radius: float = 1.0
    max_events: int = 20
    altitude: float = 1.0
    clearance: float = 0.8


@dataclass
class Scenario:
    name: str
    bounds: tuple
    robot_start: np.ndarray
    episode_length: float
    robot_radius: float
    start_heading: float = 0.0
    tag: str = ""
    static_obstacles: list = field(default_factory=list)
    dynamic_obstacles: list = field(default_factory=list)
    goals: list = field(default_factory=list)
    goal_script: GoalScript | None = None
    sensor_preset: str = "sim"
    overrides: dict = field(default_factory=dict)


def _path(path: str) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def validate_document(doc) -> tuple[list[str], list[str]]:
    """Schema and invariant diagnostics as ``(errors, warnings)``, each with a field path."""
    errors, warnings = [], []
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path)):
        errors.append(f"{_path(err.absolute_path)}: {err.message}")
    if errors:
        return errors, warnings
    lo, hi = np.array(doc["bounds"]["min"]), np.array(doc["bounds"]["max"])
    if np.any(lo >= hi):
        errors.append("bounds: min must be below max on every axis")
    for i, ob in enumerate(doc.get("static_obstacles", [])):
        if ob["type"] == "box" and np.any(np.array(ob["min"]) >= np.array(ob["max"])):
            errors.append(f"static_obstacles/{i}/min: must be below max on every axis")
    start = np.array(doc["robot_start"]["position"])
    if np.any(start < lo) or np.any(start > hi):
        errors.append("robot_start/position: outside bounds")
    for i, g in enumerate(doc.get("goals", [])):
        if g.get("trigger") == "timed" and "time" not in g:
            errors.append(f"goals/{i}/time: required for a timed trigger")
    if not doc.get("goals") and "goal_script" not in doc:
        warnings.append("goals: no goals and no goal_script; the robot will hover")
    if doc.get("tag") == "pedestrian_street":
        a, b = PEDESTRIAN_SPEED_BAND
        for i, ob in enumerate(doc.get("dynamic_obstacles", [])):
            if not a <= ob["speed"] <= b:
                warnings.append(f"dynamic_obstacles/{i}/speed: {ob['speed']} outside the "
                                f"{a}-{b} m/s pedestrian band")
    return errors, warnings


def scenario_from_document(doc) -> Scenario:
    errors, _ = validate_document(doc)
    if errors:
        raise ScenarioError(errors)
    statics = []
    for ob in doc.get("static_obstacles", []):
        if ob["type"] == "box":
            statics.append(Box(np.array(ob["min"], float), np.array(ob["max"], float)))
        else:
            statics.append(Cylinder(np.array(ob["center"], float), ob["radius"], ob["height"]))
    dynamics = [DynamicSpec(np.array(ob["waypoints"], float), ob["speed"], ob["radius"],
                            ob["height"], ob.get("label", "pedestrian"))
                for ob in doc.get("dynamic_obstacles", [])]
    goals = [Goal(np.array(g["position"], float), g.get("trigger", "reach"),
                  g.get("radius", 1.0), g.get("time")) for g in doc.get("goals", [])]
    script = None
    if "goal_script" in doc:
        gs = doc["goal_script"]
        script = GoalScript(gs.get("reach_radius", 1.0), gs.get("max_events", 20),
                            gs.get("altitude", 1.0), gs.get("clearance", 0.8))
    rs = doc["robot_start"]
    return Scenario(
        name=doc["name"],
        tag=doc.get("tag", ""),
        bounds=(np.array(doc["bounds"]["min"], float), np.array(doc["bounds"]["max"], float)),
        robot_start=np.array(rs["position"], float),
        start_heading=float(rs.get("heading", 0.0)),
        episode_length=float(doc["episode_length"]),
        robot_radius=float(doc["robot_radius"]),
        static_obstacles=statics,
        dynamic_obstacles=dynamics,
        goals=goals,
        goal_script=script,
        sensor_preset=doc.get("sensor_preset", "sim"),
        overrides=dict(doc.get("overrides", {})),
    )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file. Raises ``OSError`` or :class:`ScenarioError`."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<root>: invalid JSON ({exc})"]) from exc
    return scenario_from_document(doc)


def preset_path(name: str) -> Path:
    """Filesystem path of a shipped preset (``pedestrian_street`` or ``small_arena``)."""
    ref = resources.files("asaa.sim") / "presets" / f"{name}.json"
    return Path(str(ref))


def load_preset(name: str) -> Scenario:
    return load_scenario(preset_path(name))


def heading_deg(rad: float) -> float:
    return math.degrees(rad)
