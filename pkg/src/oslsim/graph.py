"""Directed communication topologies and their consensus matrices.

A digraph over n agents is described by a nonnegative weight matrix in which
entry (i, j) > 0 means agent i receives information from agent j.  A virtual
leader broadcasting the group reference is not a vertex; it acts on flagged
agents through the leader incidence matrix only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Digraph",
    "GraphMatrices",
    "build_matrices",
    "has_spanning_tree",
    "h_is_nonsingular",
    "h_determinant",
]

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class Digraph:
    """Weighted digraph plus leader incidence flags.

    weights[i, j] is the weight agent i places on information received from
    agent j; the diagonal must be zero.  leader_flags[i] is true when agent i
    receives the virtual leader's reference directly.
    """

    n_agents: int
    weights: np.ndarray
    leader_flags: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        flags = np.array(self.leader_flags, dtype=bool)
        n = self.n_agents
        if n < 1:
            raise ValueError(f"n_agents must be >= 1, got {n}")
        if w.shape != (n, n):
            raise ValueError(f"weights must have shape ({n}, {n}), got {w.shape}")
        if flags.shape != (n,):
            raise ValueError(f"leader_flags must have shape ({n},), got {flags.shape}")
        if np.any(w < 0.0):
            raise ValueError("adjacency weights must be nonnegative")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("adjacency diagonal must be zero (no self-edges)")
        w.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "leader_flags", flags)

    @classmethod
    def from_edges(
        cls,
        n_agents: int,
        edges: list[tuple[int, int, float]] | list[tuple[int, int]],
        leaders: list[int],
    ) -> "Digraph":
        """Build from (receiver, sender[, weight]) triples; weight defaults to 1."""
        w = np.zeros((n_agents, n_agents))
        for edge in edges:
            if len(edge) == 2:
                i, j = edge  # type: ignore[misc]
                weight = 1.0
            else:
                i, j, weight = edge  # type: ignore[misc]
            if not (0 <= i < n_agents and 0 <= j < n_agents):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n_agents}")
            w[i, j] = weight
        flags = np.zeros(n_agents, dtype=bool)
        for idx in leaders:
            if not 0 <= idx < n_agents:
                raise ValueError(f"leader index {idx} out of range for n={n_agents}")
            flags[idx] = True
        return cls(n_agents, w, flags)


@dataclass(frozen=True)
class GraphMatrices:
    """Adjacency A, in-degree D, Laplacian L = D - A, leader incidence B, and
    the coupling matrix H = L + B used by the tracking controller."""

    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    leader_incidence: np.ndarray
    coupling: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        h = self.laplacian + self.leader_incidence
        for m in (self.adjacency, self.degree, self.laplacian, self.leader_incidence, h):
            m.setflags(write=False)
        object.__setattr__(self, "coupling", h)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]


def build_matrices(g: Digraph) -> GraphMatrices:
    """Assemble the consensus matrices for a validated digraph."""
    a = np.array(g.weights, dtype=float)
    d = np.diag(a.sum(axis=1))
    lap = d - a
    b = np.diag(g.leader_flags.astype(float))
    return GraphMatrices(adjacency=a, degree=d, laplacian=lap, leader_incidence=b)


def has_spanning_tree(g: Digraph, root: int | None = None) -> bool:
    """True when every agent is reachable from the root along information flow.

    root is an agent index, or None for the virtual leader, whose direct
    children are the flagged agents.  Information flows sender -> receiver,
    i.e. from j into every i with weights[i, j] > 0.
    """
    n = g.n_agents
    if root is None:
        frontier = [i for i in range(n) if g.leader_flags[i]]
    else:
        if not 0 <= root < n:
            raise ValueError(f"root index {root} out of range for n={n}")
        frontier = [root]
    seen = set(frontier)
    while frontier:
        j = frontier.pop()
        for i in np.nonzero(g.weights[:, j] > 0.0)[0]:
            if i not in seen:
                seen.add(int(i))
                frontier.append(int(i))
    return len(seen) == n


def _eliminate(h: np.ndarray, tol: float) -> tuple[np.ndarray, int, bool]:
    """Forward elimination with partial pivoting.

    Returns the reduced matrix, the permutation sign, and whether every pivot
    stayed above tol.
    """
    m = np.array(h, dtype=float)
    n = m.shape[0]
    sign = 1
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(m[col:, col])))
        if abs(m[pivot_row, col]) <= tol:
            return m, sign, False
        if pivot_row != col:
            m[[col, pivot_row]] = m[[pivot_row, col]]
            sign = -sign
        for row in range(col + 1, n):
            factor = m[row, col] / m[col, col]
            if factor != 0.0:
                m[row, col:] -= factor * m[col, col:]
    return m, sign, True


def h_is_nonsingular(m: GraphMatrices, tol: float = PIVOT_TOL) -> bool:
    """Rank test for the coupling matrix via elimination with partial pivoting.

    A pivot with magnitude <= tol is treated as numerically zero.
    """
    h = m.coupling
    if h.shape[0] != h.shape[1]:
        raise ValueError(f"coupling matrix must be square, got {h.shape}")
    _, _, ok = _eliminate(h, tol)
    return ok


def h_determinant(m: GraphMatrices, tol: float = PIVOT_TOL) -> float:
    """Determinant of the coupling matrix from the same elimination pass."""
    reduced, sign, ok = _eliminate(m.coupling, tol)
    if not ok:
        return 0.0
    return float(sign * np.prod(np.diag(reduced)))
