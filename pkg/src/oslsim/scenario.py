"""Scenario files: a versioned JSON schema that maps onto SimConfig.

A scenario is a single JSON object.  Missing keys are filled from DEFAULTS,
unknown keys are rejected with their full dotted path, and scalar leaves
replace the default wholesale (lists such as wind.mean are leaves, not
sections).  The resolved document, not the sparse input, is what gets hashed
into the run manifest, so two files that resolve identically share a digest.

Top-level sections mirror the validation messages raised by SimConfig:
topology, disturbance, wind, plume, smc, pso, planner, scenario.  Everything
else is a scalar run parameter (dt, t_end, seed, ...).
"""

from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .decision import PsoParams
from .graph import Digraph
from .plume import WindField
from .sim import PlannerConfig, PlumeConfig, SimConfig
from .smc import SmcParams

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "TopologyError",
    "DEFAULTS",
    "canned_scenarios",
    "load_raw",
    "resolve",
    "apply_overrides",
    "parse_config",
    "load_config",
    "config_digest",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Scenario file rejected; the message names the offending key."""


class TopologyError(ConfigError):
    """Structurally unusable digraph (no leader-rooted spanning tree)."""


DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "name": "custom",
    "dimension": 1,
    "dt": 1e-3,
    "t_end": 10.0,
    "sensing_period": 0.1,
    "accuracy_theta": 1e-3,
    "seed": 42,
    "controller": "smc",
    "integrator": "euler",
    "drift": "paper",
    "detection_threshold": 0.1,
    "reference_feedforward": False,
    "initial_states": None,
    "topology": {
        "n_agents": 4,
        "edges": [[0, 2, 1.0], [2, 1, 1.0], [3, 2, 1.0]],
        "leaders": [0, 1],
    },
    "disturbance": {"kind": "paper", "sigma_max": 0.3},
    "wind": {
        "mean": [-0.8],
        "v_max": 1.0,
        "noise_sigma": 0.0,
        "additive_scale": 0.0,
        "additive_freq_hz": 0.3,
        "multiplicative_scale": 0.0,
        "multiplicative_freq_hz": 0.17,
    },
    "plume": {
        "source": [2.5],
        "release_period": 0.1,
        "kernel_width": 0.5,
        "kernel_amplitude": 1.0,
    },
    "smc": {
        "lambda1": 1.774,
        "lambda2": 2.85,
        "mu": 5.0,
        "m_offset": 1e-3,
        "w_gain": 2.0,
        "boundary_layer": 0.0,
        "reach_rate_limit": 1000.0,
    },
    "pso": {"alpha1": 0.25, "alpha2": 0.25, "inertia_omega": 2.0, "c1": 0.5},
    "planner": {
        "delta0": 5.0,
        "search_mean": 0.0,
        "search_std": 0.5,
        "casting_literal": False,
    },
    "scenario": {"offsets": None},
}


def canned_scenarios() -> list[str]:
    """Names of the scenario files shipped inside the package."""
    root = resources.files("oslsim") / "scenarios"
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


def load_raw(source: str | Path) -> dict:
    """Read a scenario document from a canned name or a filesystem path."""
    name = str(source)
    if name in canned_scenarios():
        text = (resources.files("oslsim") / "scenarios" / f"{name}.json").read_text()
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(
                f"no such scenario: {name!r} is neither a canned name "
                f"({', '.join(canned_scenarios())}) nor a readable file"
            )
        text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {name}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario {name} must be a JSON object, got {type(raw).__name__}")
    return raw


def _merge(default, user, path: str):
    if isinstance(default, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"{path or 'config'} must be an object, got {type(user).__name__}")
        for key in user:
            if key not in default:
                where = f"{path}.{key}" if path else key
                raise ConfigError(f"unknown config key: {where}")
        merged = {}
        for key, dval in default.items():
            child = f"{path}.{key}" if path else key
            merged[key] = _merge(dval, user[key], child) if key in user else copy.deepcopy(dval)
        return merged
    return copy.deepcopy(user)


def resolve(raw: dict) -> dict:
    """Fill missing keys from DEFAULTS; reject unknown ones by dotted path."""
    doc = _merge(DEFAULTS, raw, "")
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version {version} not supported; this build reads version {SCHEMA_VERSION}"
        )
    return doc


def apply_overrides(raw: dict, assignments: list[str]) -> dict:
    """Apply `--set key=value` pairs onto the sparse document.

    Keys are dotted paths; values are parsed as JSON literals, falling back
    to the bare string so `--set drift=zero` needs no shell quoting.
    """
    out = copy.deepcopy(raw)
    for item in assignments:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses non-object key {part!r}")
        node[parts[-1]] = parsed
    return out


def _build_digraph(section: dict) -> Digraph:
    edges = []
    for k, entry in enumerate(section["edges"]):
        if not isinstance(entry, (list, tuple)) or len(entry) not in (2, 3):
            raise ConfigError(
                f"topology.edges[{k}] must be [receiver, sender] or "
                f"[receiver, sender, weight], got {entry!r}"
            )
        i, j = int(entry[0]), int(entry[1])
        w = float(entry[2]) if len(entry) == 3 else 1.0
        edges.append((i, j, w))
    try:
        return Digraph.from_edges(int(section["n_agents"]), edges, leaders=section["leaders"])
    except ValueError as exc:
        raise ConfigError(f"topology: {exc}") from exc


def _build(section_name: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section_name}: {exc}") from exc


def parse_config(raw: dict) -> SimConfig:
    """Resolve a sparse document and construct the validated SimConfig."""
    doc = resolve(raw)
    digraph = _build_digraph(doc["topology"])
    wind = _build("wind", WindField, **{**doc["wind"], "mean": np.array(doc["wind"]["mean"], dtype=float)})
    plume = _build("plume", PlumeConfig, **{**doc["plume"], "source": np.array(doc["plume"]["source"], dtype=float)})
    smc = _build("smc", SmcParams, **doc["smc"])
    pso = _build("pso", PsoParams, **doc["pso"])
    planner = _build("planner", PlannerConfig, **doc["planner"])
    offsets = doc["scenario"]["offsets"]
    try:
        return SimConfig(
            digraph=digraph,
            dimension=int(doc["dimension"]),
            dt=float(doc["dt"]),
            t_end=float(doc["t_end"]),
            sensing_period=float(doc["sensing_period"]),
            accuracy_theta=float(doc["accuracy_theta"]),
            seed=int(doc["seed"]),
            initial_states=doc["initial_states"],
            offsets=offsets,
            controller=doc["controller"],
            integrator=doc["integrator"],
            drift_name=doc["drift"],
            disturbance_name=doc["disturbance"]["kind"],
            sigma_max=float(doc["disturbance"]["sigma_max"]),
            detection_threshold=float(doc["detection_threshold"]),
            wind=wind,
            plume=plume,
            smc_params=smc,
            pso_params=pso,
            planner=planner,
            reference_feedforward=bool(doc["reference_feedforward"]),
            name=str(doc["name"]),
        )
    except ValueError as exc:
        if "spanning tree" in str(exc):
            raise TopologyError(str(exc)) from exc
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"wrong value type: {exc}") from exc


def load_config(source: str | Path, overrides: list[str] | None = None, seed: int | None = None) -> SimConfig:
    """Load, override, and parse in one step; `seed` wins over the file."""
    raw = load_raw(source)
    if overrides:
        raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["seed"] = int(seed)
    return parse_config(raw)


def config_digest(raw: dict) -> str:
    """SHA-256 over the resolved document in canonical form.

    Resolution first means the digest identifies the run, not the file
    layout: sparse and fully written-out versions of the same scenario
    hash identically.
    """
    doc = resolve(raw)
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
