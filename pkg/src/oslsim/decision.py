"""Swarm decision layer: concentration-driven bests and reference fusion.

Each agent keeps a personal best and a neighborhood best scored by sensed
concentration, collapses them into an oscillation center, and blends that
center with the wind-history source estimate into the tracking reference.
The proportional swarm law is retained for analysis and cross-checks only;
the closed loop is driven by the sliding-manifold controller.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "PsoParams",
    "DecisionState",
    "update_bests",
    "oscillation_center",
    "pso_control",
    "pso_velocity_step",
    "fuse_reference",
]


@dataclass(frozen=True)
class PsoParams:
    """Swarm weighting parameters.

    alpha1 weighs the personal best, alpha2 the neighborhood best; c1 in
    (0, 1) sets the swarm share of the fused reference.  inertia_omega is the
    configured inertia rate; it is exposed for the analysis-only velocity
    update and is not used by the tracking controller.
    """

    alpha1: float = 0.25
    alpha2: float = 0.25
    inertia_omega: float = 2.0
    c1: float = 0.5

    def __post_init__(self) -> None:
        if self.alpha1 <= 0.0:
            raise ValueError(f"alpha1 must be > 0, got {self.alpha1}")
        if self.alpha2 <= 0.0:
            raise ValueError(f"alpha2 must be > 0, got {self.alpha2}")
        if not 0.0 <= self.c1 <= 1.0:
            raise ValueError(f"c1 must lie in [0, 1], got {self.c1}")


@dataclass(frozen=True)
class DecisionState:
    """Per-agent decision memory between sensor instants."""

    best_local_pos: np.ndarray
    best_local_score: float
    best_global_pos: np.ndarray
    best_global_score: float
    center: np.ndarray
    wind_estimate: np.ndarray | None = None
    reference: np.ndarray | None = None
    last_update: float = 0.0

    @classmethod
    def initial(cls, position: np.ndarray, t: float = 0.0) -> "DecisionState":
        """Start both bests at the agent's position with zero score."""
        pos = np.array(position, dtype=float)
        return cls(
            best_local_pos=pos.copy(),
            best_local_score=0.0,
            best_global_pos=pos.copy(),
            best_global_score=0.0,
            center=pos.copy(),
            last_update=t,
        )


def update_bests(
    d: DecisionState,
    own: tuple[np.ndarray, float],
    neighbor_reports: list[tuple[np.ndarray, float, float]],
    now: float = 0.0,
) -> DecisionState:
    """Refresh personal and neighborhood bests from this instant's readings.

    own is (position, concentration); each neighbor report is
    (position, concentration, edge weight).  The personal best moves only on
    a strictly higher own reading; the neighborhood best moves only on a
    strictly higher weighted reading, so ties keep the incumbent and
    zero-weight reports can never win.
    """
    own_pos, own_conc = own
    if own_conc < 0.0:
        raise ValueError(f"concentrations must be >= 0, got {own_conc}")
    best_l_pos, best_l_score = d.best_local_pos, d.best_local_score
    if own_conc > best_l_score:
        best_l_pos, best_l_score = np.array(own_pos, dtype=float), float(own_conc)

    best_g_pos, best_g_score = d.best_global_pos, d.best_global_score
    for pos, conc, weight in neighbor_reports:
        if conc < 0.0:
            raise ValueError(f"concentrations must be >= 0, got {conc}")
        if weight < 0.0:
            raise ValueError(f"edge weights must be >= 0, got {weight}")
        scored = weight * conc
        if scored > best_g_score:
            best_g_pos, best_g_score = np.array(pos, dtype=float), float(scored)

    return replace(
        d,
        best_local_pos=best_l_pos,
        best_local_score=best_l_score,
        best_global_pos=best_g_pos,
        best_global_score=best_g_score,
        last_update=now,
    )


def oscillation_center(x_l: np.ndarray, x_g: np.ndarray, pp: PsoParams) -> np.ndarray:
    """Convex combination of the two bests: (a1*x_l + a2*x_g) / (a1 + a2)."""
    total = pp.alpha1 + pp.alpha2
    if total <= 0.0:
        raise ValueError("alpha1 + alpha2 must be > 0")
    return (pp.alpha1 * np.asarray(x_l, dtype=float) + pp.alpha2 * np.asarray(x_g, dtype=float)) / total


def pso_control(center: np.ndarray, x: np.ndarray, pp: PsoParams) -> np.ndarray:
    """Proportional pull toward the oscillation center: (a1 + a2)(p - x).

    Analysis-only; provided for cross-checks and comparison runs, never as
    the production tracking law.
    """
    return (pp.alpha1 + pp.alpha2) * (np.asarray(center, dtype=float) - np.asarray(x, dtype=float))


def pso_velocity_step(
    velocity: np.ndarray,
    x: np.ndarray,
    x_l: np.ndarray,
    x_g: np.ndarray,
    pp: PsoParams,
) -> tuple[np.ndarray, np.ndarray]:
    """One step of the classic swarm velocity/position update (analysis only)."""
    v_next = (
        pp.inertia_omega * np.asarray(velocity, dtype=float)
        + pp.alpha1 * (np.asarray(x_l, dtype=float) - x)
        + pp.alpha2 * (np.asarray(x_g, dtype=float) - x)
    )
    return v_next, np.asarray(x, dtype=float) + v_next


def fuse_reference(center: np.ndarray, wind_estimate: np.ndarray, c1: float) -> np.ndarray:
    """Blend swarm center and wind-history estimate: c1*p + (1 - c1)*q."""
    if not 0.0 <= c1 <= 1.0:
        raise ValueError(f"c1 must lie in [0, 1], got {c1}")
    return c1 * np.asarray(center, dtype=float) + (1.0 - c1) * np.asarray(wind_estimate, dtype=float)
