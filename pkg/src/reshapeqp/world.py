"""Snapshot of positions and actuation states shared by the filter and simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularityError


@dataclass(frozen=True)
class WorldState:
    """Agents occupy the first ``n_agents`` rows of ``positions``; the rest are
    stationary obstacles."""

    positions: np.ndarray
    n_agents: int
    actuation_states: tuple = ()
    velocity_refs: np.ndarray | None = None
    time: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if not 1 <= self.n_agents <= pos.shape[0]:
            raise ValueError("n_agents must be between 1 and the number of positions")
        object.__setattr__(self, "positions", pos)
        if self.velocity_refs is not None:
            object.__setattr__(self, "velocity_refs", np.asarray(self.velocity_refs, dtype=float))

    @property
    def n_total(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def relative(self, i: int) -> np.ndarray:
        """``p_i - p_j`` for every ``j != i``, in index order."""
        others = np.delete(np.arange(self.n_total), i)
        rel = self.positions[i] - self.positions[others]
        if np.any(np.linalg.norm(rel, axis=1) == 0.0):
            raise SingularityError(f"agent {i} coincides with another agent or obstacle")
        return rel

    def pairwise_distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.linalg.norm(diff, axis=-1)

    def min_distance(self) -> float:
        """Smallest distance over pairs that involve at least one agent."""
        d = self.pairwise_distances()
        n_a = self.n_agents
        mask = np.zeros_like(d, dtype=bool)
        mask[:n_a, :] = True
        mask[:, :n_a] = True
        np.fill_diagonal(mask, False)
        return float(d[mask].min()) if mask.any() else np.inf
