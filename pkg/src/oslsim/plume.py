"""Filament-based plume transport and wind-history source estimation.

Filaments are point puffs released periodically at the source and advected by
the mean wind plus white noise.  Each filament carries its accumulated mean
drift, so subtracting that drift from the current position recovers the
release point exactly when the noise term is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "WindField",
    "Filament",
    "PlumeState",
    "release_filament",
    "step_filaments",
    "concentration_at",
    "concentration_contributions",
    "wind_source_estimate",
]

MeanWind = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class WindField:
    """Mean wind as a function of time, with a hard magnitude cap.

    The base mean (constant vector or callable) is modulated by a
    deterministic multiplicative factor 1 + multiplicative_scale*sin(2*pi*f*t)
    and a deterministic additive gust of size additive_scale, then clipped to
    norm <= v_max.  Both modulations are part of the *mean* wind and are
    therefore tracked by filament drift bookkeeping; noise_sigma scales the
    untracked white-noise component used during advection.
    """

    mean: np.ndarray | MeanWind
    v_max: float = 1.0
    noise_sigma: float = 0.0
    additive_scale: float = 0.0
    additive_freq_hz: float = 0.3
    multiplicative_scale: float = 0.0
    multiplicative_freq_hz: float = 0.17

    def __post_init__(self) -> None:
        if self.v_max <= 0.0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not callable(self.mean):
            object.__setattr__(self, "mean", np.atleast_1d(np.array(self.mean, dtype=float)))

    def mean_at(self, t: float) -> np.ndarray:
        """Effective mean wind at time t, capped to norm <= v_max."""
        base = self.mean(t) if callable(self.mean) else self.mean
        base = np.atleast_1d(np.asarray(base, dtype=float))
        v = base.copy()
        if self.multiplicative_scale != 0.0:
            v = v * (1.0 + self.multiplicative_scale * math.sin(2.0 * math.pi * self.multiplicative_freq_hz * t))
        if self.additive_scale != 0.0:
            d = base.shape[0]
            phases = np.arange(d) * (math.pi / 2.0)
            v = v + self.additive_scale * np.sin(2.0 * math.pi * self.additive_freq_hz * t + phases)
        norm = float(np.linalg.norm(v))
        if norm > self.v_max:
            v = v * (self.v_max / norm)
        return v


@dataclass(frozen=True)
class Filament:
    """One puff: current position, release time, and accumulated mean drift."""

    position: np.ndarray
    release_time: float
    accumulated_mean_drift: np.ndarray


@dataclass(frozen=True)
class PlumeState:
    """Source location, kernel parameters, and the filament population.

    Filament data is stored column-wise in arrays so advection and
    concentration queries vectorize; the `filaments` property exposes
    per-filament views.
    """

    source_position: np.ndarray
    release_period: float = 0.1
    kernel_width: float = 0.5
    kernel_amplitude: float = 1.0
    positions: np.ndarray = field(default=None)  # type: ignore[assignment]
    release_times: np.ndarray = field(default=None)  # type: ignore[assignment]
    drifts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        src = np.atleast_1d(np.array(self.source_position, dtype=float))
        object.__setattr__(self, "source_position", src)
        if self.release_period <= 0.0:
            raise ValueError(f"release_period must be > 0, got {self.release_period}")
        if self.kernel_width <= 0.0:
            raise ValueError(f"kernel_width must be > 0, got {self.kernel_width}")
        if self.kernel_amplitude <= 0.0:
            raise ValueError(f"kernel_amplitude must be > 0, got {self.kernel_amplitude}")
        d = src.shape[0]
        if self.positions is None:
            object.__setattr__(self, "positions", np.zeros((0, d)))
            object.__setattr__(self, "release_times", np.zeros(0))
            object.__setattr__(self, "drifts", np.zeros((0, d)))
        else:
            object.__setattr__(self, "positions", np.array(self.positions, dtype=float))
            object.__setattr__(self, "release_times", np.array(self.release_times, dtype=float))
            object.__setattr__(self, "drifts", np.array(self.drifts, dtype=float))
        if not (len(self.positions) == len(self.release_times) == len(self.drifts)):
            raise ValueError("filament arrays must have matching lengths")

    @property
    def dim(self) -> int:
        return self.source_position.shape[0]

    @property
    def n_filaments(self) -> int:
        return self.positions.shape[0]

    @property
    def filaments(self) -> list[Filament]:
        return [
            Filament(self.positions[k].copy(), float(self.release_times[k]), self.drifts[k].copy())
            for k in range(self.n_filaments)
        ]

    def filament(self, k: int) -> Filament:
        return Filament(self.positions[k].copy(), float(self.release_times[k]), self.drifts[k].copy())


def release_filament(p: PlumeState, t: float) -> PlumeState:
    """Append a filament at the source with zero accumulated drift."""
    return replace(
        p,
        positions=np.vstack([p.positions, p.source_position[None, :]]),
        release_times=np.append(p.release_times, float(t)),
        drifts=np.vstack([p.drifts, np.zeros((1, p.dim))]),
    )


def step_filaments(
    p: PlumeState, w: WindField, t: float, dt: float, rng: np.random.Generator
) -> PlumeState:
    """Advect all filaments over [t, t + dt] with the explicit Euler rule.

    Positions gain mean_wind*dt plus sqrt(dt)*noise_sigma*xi per axis; the
    accumulated mean drift gains exactly the mean_wind*dt term, which keeps
    position - drift an exact source recovery in the noiseless case.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if p.n_filaments == 0:
        return p
    v = w.mean_at(t)
    if v.shape[0] != p.dim:
        raise ValueError(f"wind dimension {v.shape[0]} does not match plume dimension {p.dim}")
    drift_step = v * dt
    positions = p.positions + drift_step
    if w.noise_sigma > 0.0:
        positions = positions + math.sqrt(dt) * w.noise_sigma * rng.standard_normal(p.positions.shape)
    return replace(p, positions=positions, drifts=p.drifts + drift_step)


def concentration_contributions(p: PlumeState, x: np.ndarray) -> np.ndarray:
    """Per-filament Gaussian kernel contribution at point x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if p.n_filaments == 0:
        return np.zeros(0)
    sq = np.sum((p.positions - x[None, :]) ** 2, axis=1)
    return p.kernel_amplitude * np.exp(-sq / (2.0 * p.kernel_width**2))


def concentration_at(p: PlumeState, x: np.ndarray) -> float:
    """Total instantaneous concentration at x: sum of filament kernels."""
    return float(concentration_contributions(p, x).sum())


def wind_source_estimate(f: Filament) -> np.ndarray:
    """Source estimate from wind-history bookkeeping: position minus drift."""
    return f.position - f.accumulated_mean_drift
