"""Deterministic kinematic simulation for comparing observation-steering policies."""

from .episode import EpisodeMetrics, EpisodeResult, episode_config, run_episode
from .paradigms import PARADIGMS, Paradigm, parse_paradigm, route_paradigm
from .scenario import Scenario, load_preset, load_scenario, preset_path, validate_document
from .world import step_world

__all__ = [
    "EpisodeMetrics", "EpisodeResult", "PARADIGMS", "Paradigm", "Scenario", "episode_config",
    "load_preset", "load_scenario", "parse_paradigm", "preset_path", "route_paradigm",
    "run_episode", "step_world", "validate_document",
]
