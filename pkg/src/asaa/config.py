"""Episode configuration tree and dotted-path overrides.

Every tunable constant lives in one nested dataclass so experiments can
vary any of them with ``section.field=value`` strings, e.g.
``weights.lambda4=0.1`` or ``check.d_min_dynamic=0.8``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .errors import InvalidArgument
from .flight_planner import CheckConfig, SampleConfig
from .head_planner import PlannerWeights
from .static_map import GridConfig
from .sud import SudConfig
from .timesync import SyncConfig
from .tracker import TrackerConfig


@dataclass
class HeadLimits:
    xi_min: float = -1.25 * math.pi
    xi_max: float = 1.25 * math.pi
    xi_dot_max: float = 1.2

    def __post_init__(self):
        if not self.xi_min < self.xi_max or self.xi_dot_max <= 0:
            raise InvalidArgument("invalid head limits")


@dataclass
class SensorConfig:
    theta_h_deg: float = 80.0
    L_h: float = 10.0
    depth_noise_0: float = 0.02
    # None: derived so the mean absolute depth error is 0.2 m at |v_cam| = 4.5 m/s.
    depth_noise_k: float | None = None
    detection_delay: float = 0.18
    image_width: int = 640
    image_height: int = 480


@dataclass
class SimConfig:
    control_dt: float = 0.05
    physics_dt: float = 0.01
    yaw_rate_max: float = 0.8
    kp: float = 6.0
    kd: float = 5.0
    moving_speed: float = 0.05
    refractory: float = 1.0
    pose_rate_hz: float = 100.0
    angle_rate_hz: float = 50.0
    randomize_phase: bool = True
    # Candidates must lie in a direction whose SUD is at least this; 0 disables.
    observe_gate: float = 0.0
    # Charge out-of-view directions for the turn a cable-limited head can make.
    seam_aware: bool = True
    # A hovering robot whose position fails the dynamic check over this many
    # seconds may take an ungated plan.
    threat_horizon: float = 2.0


@dataclass
class EpisodeConfig:
    sud: SudConfig = field(default_factory=SudConfig)
    weights: PlannerWeights = field(default_factory=PlannerWeights)
    head: HeadLimits = field(default_factory=HeadLimits)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    sampling: SampleConfig = field(default_factory=SampleConfig)
    check: CheckConfig = field(default_factory=CheckConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(text, current):
    if not isinstance(text, str):
        return text
    if isinstance(current, bool):
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidArgument(f"not a boolean: {text!r}")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float) or current is None:
        return float(text)
    if isinstance(current, (dict, list)):
        return json.loads(text)
    return text


def apply_overrides(cfg: EpisodeConfig, overrides) -> EpisodeConfig:
    """Return a copy of ``cfg`` with ``{"a.b": value}`` overrides applied.

    Values may be strings (CLI) or already-typed (JSON). Dataclass invariants
    are re-checked after each section is rebuilt.
    """
    out = cfg
    items = overrides.items() if isinstance(overrides, dict) else overrides
    for key, value in items:
        parts = key.split(".")
        if len(parts) != 2:
            raise InvalidArgument(f"override key must be section.field: {key!r}")
        section, name = parts
        if not any(f.name == section for f in dataclasses.fields(out)):
            raise InvalidArgument(f"unknown config section {section!r}")
        sub = getattr(out, section)
        if not any(f.name == name for f in dataclasses.fields(sub)):
            raise InvalidArgument(f"unknown config field {key!r}")
        new_sub = dataclasses.replace(sub, **{name: _coerce(value, getattr(sub, name))})
        out = dataclasses.replace(out, **{section: new_sub})
    return out


def parse_override(text: str):
    if "=" not in text:
        raise InvalidArgument(f"override must look like key=value: {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()
