"""Closed-loop simulator: plant, sensing cadence, decision fusion, control.

One run advances n agents under x_dot = f(x) + u + disturbance with a fixed
Euler step (RK4 optional for smooth studies).  Sensor work happens only at
the sensing cadence: the plume advances and releases, agents read
concentration at their offset-corrected positions, exchange readings along
the digraph, refresh bests, estimate the source from filament drift
bookkeeping, and fuse the group reference.  Between sensor instants the
reference is zero-order-held.

The group reference comes from the best-informed estimating agent (highest
personal-best score among agents holding a drift-based source estimate,
ties to the lowest index); until any agent detects, each agent holds its
planner waypoint.  Formation runs sense and decide in offset-corrected
coordinates y_i = x_i - delta_i and track reference + delta_i, which makes a
formation run the exact coordinate shift of its consensus twin.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .decision import (
    DecisionState,
    PsoParams,
    fuse_reference,
    oscillation_center,
    pso_control,
    update_bests,
)
from .graph import Digraph, GraphMatrices, build_matrices, h_is_nonsingular
from .planner import PlannerState, next_waypoint, update_mode
from .plume import (
    PlumeState,
    WindField,
    concentration_at,
    concentration_contributions,
    release_filament,
    step_filaments,
    wind_source_estimate,
)
from .smc import (
    SmcParams,
    control_law,
    evaluate_manifold,
    gain_check,
    gamma_values,
    reachability_margin,
    topological_error,
)
from .trace import Trace, trace_columns

__all__ = [
    "SimulationError",
    "AgentDynamics",
    "PlumeConfig",
    "PlannerConfig",
    "SimConfig",
    "SimMetrics",
    "World",
    "init_world",
    "step",
    "run_scenario",
    "consensus_metrics",
    "DRIFTS",
    "DISTURBANCES",
]

logger = logging.getLogger(__name__)

_BOUND_SLACK = 1e-12


class SimulationError(RuntimeError):
    """Numerical abort: non-finite state or a violated disturbance bound."""


def paper_drift(x: np.ndarray, t: float) -> np.ndarray:
    """Nominal drift 0.1 sin(x) + cos(2 pi t); Lipschitz in x with constant 0.1."""
    return 0.1 * np.sin(x) + math.cos(2.0 * math.pi * t)


def zero_drift(x: np.ndarray, t: float) -> np.ndarray:
    return np.zeros_like(x)


DRIFTS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "paper": paper_drift,
    "zero": zero_drift,
}


def _paper_disturbance(amplitude: float):
    def disturbance(t: float, rng: np.random.Generator) -> float:
        return amplitude * math.sin(math.pi**2 * t * t)

    return disturbance


def _zero_disturbance(amplitude: float):
    def disturbance(t: float, rng: np.random.Generator) -> float:
        return 0.0

    return disturbance


# builders take the configured amplitude bound and return (t, rng) -> value
DISTURBANCES: dict[str, Callable[[float], Callable[[float, np.random.Generator], float]]] = {
    "paper": _paper_disturbance,
    "zero": _zero_disturbance,
}


@dataclass(frozen=True)
class AgentDynamics:
    """Plant split: known nominal drift (cancelled by the controller) and the
    bounded unknown disturbance (rejected by the reaching law)."""

    nominal_drift: Callable[[np.ndarray, float], np.ndarray]
    disturbance: Callable[[float, np.random.Generator], float]
    sigma_max: float


@dataclass(frozen=True)
class PlumeConfig:
    # stochastic advection noise is a wind property (wind.noise_sigma)
    source: np.ndarray
    release_period: float = 0.1
    kernel_width: float = 0.5
    kernel_amplitude: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "source", np.atleast_1d(np.array(self.source, dtype=float)))


@dataclass(frozen=True)
class PlannerConfig:
    delta0: float = 5.0
    search_mean: float = 0.0
    search_std: float = 0.5
    casting_literal: bool = False


@dataclass
class SimConfig:
    """Everything one run needs; validation names the offending key."""

    digraph: Digraph
    dimension: int = 1
    dt: float = 1e-3
    t_end: float = 10.0
    sensing_period: float = 0.1
    accuracy_theta: float = 1e-3
    seed: int = 42
    initial_states: np.ndarray | None = None
    offsets: np.ndarray | None = None
    controller: str = "smc"
    integrator: str = "euler"
    drift_name: str = "paper"
    disturbance_name: str = "paper"
    sigma_max: float = 0.3
    detection_threshold: float = 0.1
    wind: WindField = field(default_factory=lambda: WindField(mean=np.array([-0.8])))
    plume: PlumeConfig = field(default_factory=lambda: PlumeConfig(source=np.array([2.5])))
    smc_params: SmcParams = field(default_factory=SmcParams)
    pso_params: PsoParams = field(default_factory=PsoParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    reference_feedforward: bool = False
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < self.dt:
            raise ValueError(f"t_end must be >= dt, got {self.t_end}")
        if self.sensing_period < self.dt:
            raise ValueError(
                f"sensing_period must be >= dt, got {self.sensing_period} < {self.dt}"
            )
        ratio = self.sensing_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"sensing_period must be an integer multiple of dt, got ratio {ratio}"
            )
        if self.accuracy_theta <= 0.0:
            raise ValueError(f"accuracy_theta must be > 0, got {self.accuracy_theta}")
        if self.sigma_max < 0.0:
            raise ValueError(f"disturbance.sigma_max must be >= 0, got {self.sigma_max}")
        if self.detection_threshold < 0.0:
            raise ValueError(
                f"detection_threshold must be >= 0, got {self.detection_threshold}"
            )
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.controller not in ("smc", "pso"):
            raise ValueError(f"controller must be 'smc' or 'pso', got {self.controller!r}")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(f"integrator must be 'euler' or 'rk4', got {self.integrator!r}")
        if self.drift_name not in DRIFTS:
            raise ValueError(f"drift must be one of {sorted(DRIFTS)}, got {self.drift_name!r}")
        if self.disturbance_name not in DISTURBANCES:
            raise ValueError(
                f"disturbance.kind must be one of {sorted(DISTURBANCES)}, got {self.disturbance_name!r}"
            )
        n, d = self.digraph.n_agents, self.dimension
        if self.plume.source.shape != (d,):
            raise ValueError(
                f"plume.source must have {d} component(s), got {self.plume.source.shape}"
            )
        if isinstance(self.wind.mean, np.ndarray) and self.wind.mean.shape != (d,):
            raise ValueError(f"wind.mean must have {d} component(s), got {self.wind.mean.shape}")
        self.initial_states = self._as_agent_array(self.initial_states, "initial_states")
        self.offsets = self._as_agent_array(self.offsets, "scenario.offsets")
        if self.initial_states is not None and not np.all(np.isfinite(self.initial_states)):
            raise ValueError("initial_states must be finite")
        self._matrices: GraphMatrices = build_matrices(self.digraph)
        if not h_is_nonsingular(self._matrices):
            raise ValueError(
                "topology: coupling matrix L+B is singular; the digraph needs a "
                "leader-rooted spanning tree"
            )

    def _as_agent_array(self, value, key: str) -> np.ndarray | None:
        if value is None:
            return None
        arr = np.array(value, dtype=float)
        if arr.ndim == 1 and self.dimension == 1:
            arr = arr[:, None]
        if arr.shape != (self.digraph.n_agents, self.dimension):
            raise ValueError(
                f"{key} must have shape ({self.digraph.n_agents}, {self.dimension}), got {arr.shape}"
            )
        return arr

    @property
    def n_agents(self) -> int:
        return self.digraph.n_agents

    @property
    def coupling(self) -> np.ndarray:
        return self._matrices.coupling

    @property
    def adjacency(self) -> np.ndarray:
        return self._matrices.adjacency

    @property
    def steps_per_sense(self) -> int:
        return round(self.sensing_period / self.dt)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def dynamics(self) -> AgentDynamics:
        return AgentDynamics(
            nominal_drift=DRIFTS[self.drift_name],
            disturbance=DISTURBANCES[self.disturbance_name](self.sigma_max),
            sigma_max=self.sigma_max,
        )


@dataclass
class World:
    """Mutable state of one run; step() advances it in place."""

    config: SimConfig
    t: float
    k: int
    x: np.ndarray
    plume: PlumeState
    decisions: list[DecisionState]
    planners: list[PlannerState]
    waypoints: np.ndarray
    psi: np.ndarray | None
    dpsi: np.ndarray
    rng_plume: np.random.Generator
    rng_planner: np.random.Generator
    rng_disturbance: np.random.Generator
    next_release: float
    last_sense_t: float
    empirical_dist_sup: float
    record: list | None


def default_initial_states(cfg: SimConfig) -> np.ndarray:
    """Evenly spaced states far from equilibrium, shifted by formation offsets
    so the offset-corrected start matches the consensus default."""
    base = np.linspace(-10.0, 10.0, cfg.n_agents)
    states = np.tile(base[:, None], (1, cfg.dimension))
    if cfg.offsets is not None:
        states = states + cfg.offsets
    return states


def init_world(cfg: SimConfig) -> World:
    x0 = cfg.initial_states if cfg.initial_states is not None else default_initial_states(cfg)
    offsets = cfg.offsets if cfg.offsets is not None else np.zeros((cfg.n_agents, cfg.dimension))
    y0 = x0 - offsets
    streams = np.random.SeedSequence(cfg.seed).spawn(3)
    plume = PlumeState(
        source_position=cfg.plume.source,
        release_period=cfg.plume.release_period,
        kernel_width=cfg.plume.kernel_width,
        kernel_amplitude=cfg.plume.kernel_amplitude,
    )
    planners = [
        PlannerState(
            delta0=cfg.planner.delta0,
            search_mean=cfg.planner.search_mean,
            search_std=cfg.planner.search_std,
            casting_literal=cfg.planner.casting_literal,
        )
        for _ in range(cfg.n_agents)
    ]
    return World(
        config=cfg,
        t=0.0,
        k=0,
        x=x0.ravel().astype(float),
        plume=plume,
        decisions=[DecisionState.initial(y0[i], 0.0) for i in range(cfg.n_agents)],
        planners=planners,
        waypoints=y0.copy(),
        psi=None,
        dpsi=np.zeros(cfg.n_agents * cfg.dimension),
        rng_plume=np.random.default_rng(streams[0]),
        rng_planner=np.random.default_rng(streams[1]),
        rng_disturbance=np.random.default_rng(streams[2]),
        next_release=0.0,
        last_sense_t=0.0,
        empirical_dist_sup=0.0,
        record=None,
    )


def _offsets(cfg: SimConfig) -> np.ndarray:
    if cfg.offsets is not None:
        return cfg.offsets
    return np.zeros((cfg.n_agents, cfg.dimension))


def _sensor_event(world: World, t: float) -> None:
    """Plume advance, sensing, best exchange, fusion, planner update."""
    cfg = world.config
    plume = world.plume
    if t > world.last_sense_t:
        plume = step_filaments(plume, cfg.wind, world.last_sense_t, t - world.last_sense_t, world.rng_plume)
    while world.next_release <= t + 1e-12:
        plume = release_filament(plume, world.next_release)
        world.next_release += plume.release_period
    world.plume = plume
    world.last_sense_t = t

    n = cfg.n_agents
    y = world.x.reshape(n, cfg.dimension) - _offsets(cfg)
    conc = np.array([concentration_at(plume, y[i]) for i in range(n)])
    detects = conc > cfg.detection_threshold
    group_detect = bool(detects.any())
    adjacency = cfg.adjacency

    for i in range(n):
        reports = [
            (y[j], float(conc[j]), float(adjacency[i, j]))
            for j in range(n)
            if adjacency[i, j] > 0.0
        ]
        world.decisions[i] = update_bests(world.decisions[i], (y[i], float(conc[i])), reports, now=t)
        if detects[i]:
            trigger = int(np.argmax(concentration_contributions(plume, y[i])))
            world.decisions[i] = replace(
                world.decisions[i],
                wind_estimate=wind_source_estimate(plume.filament(trigger)),
            )

    informed = [i for i in range(n) if world.decisions[i].wind_estimate is not None]
    if informed:
        # the broadcaster needs corroborated neighborhood information: an agent
        # with no live neighbor reports still carries its initial x_g and would
        # poison the fused reference once it has moved away from it
        leader = max(
            informed,
            key=lambda i: (
                world.decisions[i].best_global_score,
                world.decisions[i].best_local_score,
                -i,
            ),
        )
        lead = world.decisions[leader]
        center = oscillation_center(lead.best_local_pos, lead.best_global_pos, cfg.pso_params)
        new_psi = fuse_reference(center, lead.wind_estimate, cfg.pso_params.c1)
        if cfg.reference_feedforward and world.psi is not None:
            rate = (new_psi - world.psi) / cfg.sensing_period
            world.dpsi = np.tile(rate, n)
        world.psi = new_psi

    for i in range(n):
        own_center = oscillation_center(
            world.decisions[i].best_local_pos, world.decisions[i].best_global_pos, cfg.pso_params
        )
        world.decisions[i] = replace(world.decisions[i], center=own_center, reference=world.psi)
        update_mode(world.planners[i], bool(detects[i]), group_detect, t)
        predicted = world.decisions[i].wind_estimate
        if predicted is None and world.psi is not None:
            predicted = world.psi
        waypoint = next_waypoint(world.planners[i].mode, y[i], predicted, world.rng_planner, world.planners[i])
        if waypoint is not None:
            world.waypoints[i] = waypoint


def _references(world: World) -> np.ndarray:
    """Stacked world-frame references: group psi when available, otherwise the
    per-agent planner waypoint, plus the formation offset."""
    cfg = world.config
    offsets = _offsets(cfg)
    refs = np.empty((cfg.n_agents, cfg.dimension))
    for i in range(cfg.n_agents):
        refs[i] = world.psi if world.psi is not None else world.waypoints[i]
    return (refs + offsets).ravel()


def _disturbance_vector(world: World, t: float) -> np.ndarray:
    cfg = world.config
    value = cfg.dynamics.disturbance(t, world.rng_disturbance)
    sigma = np.asarray(value, dtype=float)
    if sigma.ndim == 0:
        sigma = np.full(world.x.shape, float(sigma))
    if sigma.shape != world.x.shape:
        raise SimulationError(
            f"disturbance returned shape {sigma.shape}, expected {world.x.shape}"
        )
    worst = float(np.max(np.abs(sigma))) if sigma.size else 0.0
    if worst > cfg.sigma_max + _BOUND_SLACK:
        raise SimulationError(
            f"disturbance bound violated at t={t:.6f}: |sigma|={worst:.6g} > "
            f"sigma_max={cfg.sigma_max:.6g}"
        )
    return sigma


def _check_finite(x: np.ndarray, t: float, stage: str) -> None:
    if not np.all(np.isfinite(x)):
        bad = int(np.argmin(np.isfinite(x)))
        raise SimulationError(f"non-finite state at t={t:.6f} ({stage}, component {bad})")


def step(world: World, t: float, dt: float) -> World:
    """Advance one integration step; sensor work only at the sensing cadence.

    Records the pre-update snapshot (state, control, manifold, margins) in
    world.record so the caller can assemble the trace.
    """
    cfg = world.config
    _check_finite(world.x, t, "entry")
    if world.k % cfg.steps_per_sense == 0:
        _sensor_event(world, t)

    refs = _references(world)
    state = evaluate_manifold(world.x, refs, cfg.coupling, cfg.smc_params)
    drift = cfg.dynamics.nominal_drift
    f = drift(world.x, t)
    sigma = _disturbance_vector(world, t)

    if cfg.controller == "smc":
        u = control_law(world.x, refs, world.dpsi, f, state.manifold, cfg.coupling, cfg.smc_params)
    else:
        centers = np.array([d.center for d in world.decisions]) + _offsets(cfg)
        u = pso_control(centers.ravel(), world.x, cfg.pso_params)

    margins = reachability_margin(state.manifold, state.topological, sigma, cfg.coupling, cfg.smc_params)
    gamma, _ = gamma_values(state.topological, cfg.smc_params)
    coupled = topological_error(cfg.coupling, sigma)
    dist_term = np.abs(cfg.smc_params.slope_product * gamma * coupled)
    world.empirical_dist_sup = max(world.empirical_dist_sup, float(dist_term.max()))

    world.record = _record_row(world, t, state, u, margins)

    if cfg.integrator == "euler":
        x_new = world.x + dt * (f + u + sigma)
    else:
        k1 = f + u + sigma
        k2 = drift(world.x + 0.5 * dt * k1, t + 0.5 * dt) + u + _disturbance_vector(world, t + 0.5 * dt)
        k3 = drift(world.x + 0.5 * dt * k2, t + 0.5 * dt) + u + _disturbance_vector(world, t + 0.5 * dt)
        k4 = drift(world.x + dt * k3, t + dt) + u + _disturbance_vector(world, t + dt)
        x_new = world.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(x_new, t + dt, "after update")

    world.x = x_new
    world.k += 1
    world.t = t + dt
    return world


def _record_row(world: World, t: float, state, u: np.ndarray, margins: np.ndarray) -> list:
    cfg = world.config
    n, d = cfg.n_agents, cfg.dimension
    refs = _references(world)
    x2 = world.x.reshape(n, d)
    e2 = (world.x - refs).reshape(n, d)
    y = x2 - _offsets(cfg)
    max_gap = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            max_gap = max(max_gap, float(np.linalg.norm(x2[i] - x2[j])))
    dist_source = float(max(np.linalg.norm(y[i] - cfg.plume.source) for i in range(n)))
    eta = margins.reshape(n, d).min(axis=1)

    row: list = [t]
    row += world.x.tolist()
    row += u.tolist()
    row += state.manifold.tolist()
    row += state.lyapunov.tolist()
    row += [world.planners[i].mode.value for i in range(n)]
    row += refs.tolist()
    row += [float(np.linalg.norm(e2[i])) for i in range(n)]
    row += eta.tolist()
    row += [max_gap, dist_source]
    return row


def run_scenario(cfg: SimConfig) -> Trace:
    """Run one configured scenario to t_end and return the full trace."""
    report = gain_check(cfg.smc_params, cfg.coupling, cfg.sigma_max)
    if not report.passed:
        logger.warning(
            "gain check failed (w margin %+.4g, mu budget margin %+.4g); "
            "proceeding with empirical monitoring",
            report.w_margin,
            report.mu_margin_budget,
        )
    world = init_world(cfg)
    rows = []
    for k in range(cfg.n_steps):
        step(world, k * cfg.dt, cfg.dt)
        rows.append(world.record)
    meta = {
        "name": cfg.name,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "n_agents": cfg.n_agents,
        "dim": cfg.dimension,
        "controller": cfg.controller,
        "lambda1": cfg.smc_params.lambda1,
        "mu": cfg.smc_params.mu,
        "sigma_max": cfg.sigma_max,
        "empirical_dist_sup": world.empirical_dist_sup,
        "empirical_mu_margin": cfg.smc_params.mu - world.empirical_dist_sup,
        "gain_check_passed": report.passed,
    }
    return Trace(trace_columns(cfg.n_agents, cfg.dimension), rows, meta)


@dataclass(frozen=True)
class SimMetrics:
    """Run summary; time_to_consensus is +inf when the gap never settles."""

    time_to_consensus: float
    final_error_norm: float
    max_manifold: float
    chattering_index: float
    control_energy: float
    final_distance_to_source: float
    consensus_tolerance: float

    def as_dict(self) -> dict:
        reached = math.isfinite(self.time_to_consensus)
        return {
            "time_to_consensus": self.time_to_consensus if reached else None,
            "consensus_reached": reached,
            "final_error_norm": self.final_error_norm,
            "max_manifold": self.max_manifold,
            "chattering_index": self.chattering_index,
            "control_energy": self.control_energy,
            "final_distance_to_source": self.final_distance_to_source,
            "consensus_tolerance": self.consensus_tolerance,
        }


def consensus_metrics(trace: Trace, tol: float = 1e-2) -> SimMetrics:
    """Summarize a trace: settling time of the max pairwise gap at tolerance
    tol, terminal errors, manifold peak, chattering, and control energy."""
    if len(trace) == 0:
        raise ValueError("trace is empty")
    times = trace.times
    gaps = trace.column("max_gap")

    above = np.nonzero(gaps >= tol)[0]
    if above.size == 0:
        ttc = 0.0
    elif above[-1] == len(gaps) - 1:
        ttc = math.inf
    else:
        ttc = float(times[above[-1] + 1])

    enorm = trace.block("enorm")
    final_error = float(np.sqrt(np.sum(enorm[-1] ** 2)))

    s_block = trace.block("s")
    max_manifold = float(np.max(np.abs(s_block)))

    u_block = trace.block("u")
    tail = max(2, int(math.ceil(0.8 * len(trace))))
    du = np.abs(np.diff(u_block[tail - 1 :], axis=0))
    chattering = float(du.max(axis=1).mean()) if du.size else 0.0

    dt = float(times[1] - times[0]) if len(trace) > 1 else 0.0
    energy = float(np.sum(np.linalg.norm(u_block, axis=1)) * dt)

    return SimMetrics(
        time_to_consensus=ttc,
        final_error_norm=final_error,
        max_manifold=max_manifold,
        chattering_index=chattering,
        control_energy=energy,
        final_distance_to_source=float(trace.column("dist_source")[-1]),
        consensus_tolerance=tol,
    )
