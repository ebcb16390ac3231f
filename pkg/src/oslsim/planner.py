"""Surge / cast / search waypoint planner.

Mode selection is driven by the agent's own detection, the group's most
recent detection, and a group no-detection timeout.  Waypoints are computed
against the current predicted source position; with no prediction available
the caller keeps its previous waypoint.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = ["Mode", "PlannerState", "classify_mode", "update_mode", "next_waypoint"]


class Mode(enum.Enum):
    SURGING = "surging"
    CASTING = "casting"
    SEARCHING = "searching"


@dataclass
class PlannerState:
    """Planner memory: current mode, group detection clock, and search shape.

    delta0 is the group no-detection timeout in seconds; search draws are
    normal with per-axis mean search_mean and spread search_std around the
    predicted source.  casting_literal selects the scalar-offset casting rule
    instead of the default midpoint rule.
    """

    mode: Mode = Mode.CASTING
    last_detection_time: float = 0.0
    delta0: float = 5.0
    search_mean: float = 0.0
    search_std: float = 0.0
    casting_literal: bool = False

    def __post_init__(self) -> None:
        if self.delta0 <= 0.0:
            raise ValueError(f"delta0 must be > 0, got {self.delta0}")
        if self.search_std < 0.0:
            raise ValueError(f"search_std must be >= 0, got {self.search_std}")


def classify_mode(own_detect: bool, group_detect: bool, now: float, ps: PlannerState) -> Mode:
    """Select the behavior mode for this sensor instant.

    Own detection surges; otherwise a fresh group detection (or one within
    the delta0 timeout) casts, and a stale group clock searches.
    """
    if own_detect:
        return Mode.SURGING
    if group_detect:
        return Mode.CASTING
    if now - ps.last_detection_time > ps.delta0:
        return Mode.SEARCHING
    return Mode.CASTING


def update_mode(ps: PlannerState, own_detect: bool, group_detect: bool, now: float) -> Mode:
    """Advance the planner state: refresh the group clock, then classify."""
    if group_detect:
        ps.last_detection_time = now
    ps.mode = classify_mode(own_detect, group_detect, now, ps)
    return ps.mode


def next_waypoint(
    mode: Mode,
    position: np.ndarray,
    predicted_source: np.ndarray | None,
    rng: np.random.Generator,
    ps: PlannerState,
) -> np.ndarray | None:
    """Waypoint for the given mode, or None when no prediction is available.

    Surging heads straight for the predicted source.  Casting moves to the
    midpoint between the agent and the prediction by default; the literal
    variant offsets the prediction by half the scalar distance on every axis.
    Searching perturbs the prediction with a per-axis normal draw.
    """
    if predicted_source is None:
        return None
    x = np.asarray(position, dtype=float)
    target = np.asarray(predicted_source, dtype=float)
    if mode is Mode.SURGING:
        return target.copy()
    if mode is Mode.CASTING:
        if ps.casting_literal:
            return float(np.linalg.norm(x - target)) / 2.0 + target
        return (x + target) / 2.0
    if mode is Mode.SEARCHING:
        return target + rng.normal(ps.search_mean, ps.search_std, size=target.shape)
    raise ValueError(f"unknown mode: {mode!r}")
