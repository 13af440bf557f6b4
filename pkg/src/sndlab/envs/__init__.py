"""Procedural gridworld environments, vectorized stepping, preprocessing."""

from .gridworld import FRAME_STACK, GRAY, OBS_HW, GridWorld
from .stats import PREPROCESS_MODES, RunningStats, preprocess
from .statelog import generate_tour_log, read_state_log, write_state_log
from .vec import VecEnv
from .world import (
    ACTIONS,
    DEFAULT_WORLD_CONFIG,
    World,
    generate_world,
    solvable,
)

__all__ = [
    "ACTIONS",
    "DEFAULT_WORLD_CONFIG",
    "FRAME_STACK",
    "GRAY",
    "OBS_HW",
    "GridWorld",
    "PREPROCESS_MODES",
    "RunningStats",
    "VecEnv",
    "World",
    "generate_tour_log",
    "generate_world",
    "preprocess",
    "read_state_log",
    "solvable",
    "write_state_log",
]
