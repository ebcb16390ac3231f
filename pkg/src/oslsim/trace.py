"""Run traces: a fixed column schema with CSV and JSON-lines round trips.

Column order is t, then the per-agent blocks x/u/s/v/mode, then the
recorded per-agent reference, error-norm, and decay-margin blocks, then the
group metrics max_gap and dist_source.  Vector quantities carry an axis
suffix (x0_0 is agent 0, axis 0).  Floats are written with repr so a reload
is bit-exact and two identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["Trace", "trace_columns"]

_STRING_PREFIXES = ("mode",)


def trace_columns(n_agents: int, dim: int) -> list[str]:
    """Column names for a run with the given agent count and dimension."""
    cols = ["t"]
    for name in ("x", "u", "s"):
        cols += [f"{name}{i}_{a}" for i in range(n_agents) for a in range(dim)]
    cols += [f"v{i}" for i in range(n_agents)]
    cols += [f"mode{i}" for i in range(n_agents)]
    cols += [f"psi{i}_{a}" for i in range(n_agents) for a in range(dim)]
    cols += [f"enorm{i}" for i in range(n_agents)]
    cols += [f"eta{i}" for i in range(n_agents)]
    cols += ["max_gap", "dist_source"]
    return cols


def _is_string_column(name: str) -> bool:
    return name.startswith(_STRING_PREFIXES)


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    return repr(float(value))


class Trace:
    """Immutable-by-convention table of one row per integration step."""

    def __init__(self, columns: list[str], rows: list[list], meta: dict | None = None):
        if rows and any(len(r) != len(columns) for r in rows):
            raise ValueError("trace rows must match the column count")
        self.columns = list(columns)
        self.rows = rows
        self.meta = dict(meta or {})
        self._index = {name: k for k, name in enumerate(self.columns)}

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_agents(self) -> int:
        return sum(1 for c in self.columns if c.startswith("mode"))

    @property
    def dim(self) -> int:
        return sum(1 for c in self.columns if c.startswith("x0_"))

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def column(self, name: str):
        """One column: a float array, or a list of strings for mode columns."""
        k = self._index[name]
        if _is_string_column(name):
            return [row[k] for row in self.rows]
        return np.array([row[k] for row in self.rows], dtype=float)

    def block(self, prefix: str) -> np.ndarray:
        """All float columns sharing a prefix, as (steps, columns) in order."""
        names = [c for c in self.columns if c.startswith(prefix) and not _is_string_column(c)]
        ks = [self._index[c] for c in names]
        return np.array([[row[k] for k in ks] for row in self.rows], dtype=float)

    def agent_block(self, name: str, agent: int) -> np.ndarray:
        """Vector columns of one quantity for one agent, as (steps, dim)."""
        return self.block(f"{name}{agent}_")

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="\n") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_format_cell(v) for v in row) + "\n")

    def write_jsonl(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="\n") as fh:
            for row in self.rows:
                record = dict(zip(self.columns, row))
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trace":
        path = Path(path)
        with path.open("r", newline="\n") as fh:
            header = fh.readline().rstrip("\n")
            if not header:
                raise ValueError(f"empty trace file: {path}")
            columns = header.split(",")
            parsers = [str if _is_string_column(c) else float for c in columns]
            rows = []
            for line in fh:
                cells = line.rstrip("\n").split(",")
                if len(cells) != len(columns):
                    raise ValueError(f"malformed trace row in {path}: {line!r}")
                rows.append([p(c) for p, c in zip(parsers, cells)])
        return cls(columns, rows)
