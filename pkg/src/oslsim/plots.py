"""Static figures from a trace: states, error norms, controls, manifolds.

Data preparation is split from drawing so tests can assert the plotted
series equal the trace columns exactly: no smoothing, no resampling.  SVG
output is reproducible; the hash salt is pinned and the date metadata
dropped, so plotting the same trace twice yields identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "oslsim"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = [
    "FIGURES",
    "states_series",
    "error_series",
    "control_series",
    "manifold_series",
    "render_figure",
    "plot_figure",
    "plot_all",
]

FIGURES = ("states", "errors", "controls", "manifolds")


def _per_axis_labels(trace, name: str) -> list[str]:
    n, d = trace.n_agents, trace.dim
    if d == 1:
        return [f"agent {i}" for i in range(n)]
    return [f"agent {i} axis {a}" for i in range(n) for a in range(d)]


def states_series(trace):
    """(times, label -> values) for every state component, verbatim."""
    block = trace.block("x")
    return trace.times, dict(zip(_per_axis_labels(trace, "x"), block.T))


def control_series(trace):
    block = trace.block("u")
    return trace.times, dict(zip(_per_axis_labels(trace, "u"), block.T))


def manifold_series(trace):
    block = trace.block("s")
    return trace.times, dict(zip(_per_axis_labels(trace, "s"), block.T))


def error_series(trace):
    """(times, label -> values) for the per-agent tracking-error norms."""
    block = trace.block("enorm")
    labels = [f"agent {i}" for i in range(trace.n_agents)]
    return trace.times, dict(zip(labels, block.T))


_FIGURE_SPECS = {
    "states": (states_series, "Agent states", "position"),
    "errors": (error_series, "Tracking error norms", "error norm"),
    "controls": (control_series, "Control signals", "control input"),
    "manifolds": (manifold_series, "Sliding manifolds", "manifold value"),
}


def render_figure(trace, which: str, lambda1: float = 1.774):
    """Build one figure in memory; callers own (and must close) it."""
    if which not in _FIGURE_SPECS:
        raise ValueError(f"unknown figure {which!r}; choose from {', '.join(FIGURES)}")
    series_fn, title, ylabel = _FIGURE_SPECS[which]
    times, series = series_fn(trace)

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for label, values in series.items():
        ax.plot(times, values, linewidth=1.0, label=label)
    if which == "errors":
        ax.set_yscale("log")
    if which == "manifolds":
        bound = abs(lambda1)
        ax.axhline(bound, color="black", linestyle="--", linewidth=0.8, label="amplitude bound")
        ax.axhline(-bound, color="black", linestyle="--", linewidth=0.8)
        peak = float(np.max(np.abs(trace.block("s")))) if len(trace) else bound
        ax.set_ylim(-1.2 * max(bound, peak), 1.2 * max(bound, peak))
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8, ncol=2 if len(series) > 6 else 1)
    fig.tight_layout()
    return fig, ax


def plot_figure(trace, which: str, out_path: str | Path, lambda1: float = 1.774) -> Path:
    """Render one figure to an SVG file and return its path."""
    fig, _ = render_figure(trace, which, lambda1)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


def plot_all(trace, out_dir: str | Path, lambda1: float = 1.774) -> list[Path]:
    """Render the full figure set into out_dir."""
    out_dir = Path(out_dir)
    return [plot_figure(trace, which, out_dir / f"{which}.svg", lambda1) for which in FIGURES]
