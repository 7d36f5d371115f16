"""Evenly spaced per-dimension discretization of a box action space."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from decqn.numeric_core import ConfigurationError

BOUNDS_TOL = 1e-6


class ActionOutOfBounds(ValueError):
    pass


@dataclass(frozen=True)
class ActionGrid:
    lower: np.ndarray
    upper: np.ndarray
    n_b: int
    values: np.ndarray  # [n_a, n_b]

    @property
    def n_a(self) -> int:
        return len(self.lower)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist(), "n_b": self.n_b}


def build_grid(lower, upper, n_b: int) -> ActionGrid:
    lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
    upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
    if int(n_b) != n_b or n_b < 2:
        raise ConfigurationError(f"n_b must be an integer >= 2, got {n_b}")
    if lower.shape != upper.shape or lower.ndim != 1 or len(lower) == 0:
        raise ConfigurationError("lower and upper must be non-empty vectors of equal length")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ConfigurationError("bounds must be finite")
    if np.any(lower >= upper):
        raise ConfigurationError("every lower bound must be strictly below its upper bound")
    frac = np.arange(n_b) / (n_b - 1)
    values = lower[:, None] + (upper - lower)[:, None] * frac[None, :]
    # pin the endpoints exactly
    values[:, 0] = lower
    values[:, -1] = upper
    for v in (lower, upper, values):
        v.setflags(write=False)
    return ActionGrid(lower, upper, int(n_b), values)


def indices_to_action(grid: ActionGrid, indices) -> np.ndarray:
    idx = np.asarray(indices)
    if idx.shape != (grid.n_a,):
        raise IndexError(f"expected {grid.n_a} indices, got shape {idx.shape}")
    if np.any(idx < 0) or np.any(idx >= grid.n_b):
        raise IndexError(f"bin index out of range [0, {grid.n_b}): {idx}")
    return grid.values[np.arange(grid.n_a), idx]


def action_to_indices(grid: ActionGrid, action) -> np.ndarray:
    """Nearest bin per dimension; exact midpoints go to the lower index."""
    a = np.asarray(action, dtype=np.float64)
    if a.shape != (grid.n_a,):
        raise ActionOutOfBounds(f"expected action of length {grid.n_a}, got shape {a.shape}")
    if np.any(a < grid.lower - BOUNDS_TOL) or np.any(a > grid.upper + BOUNDS_TOL):
        raise ActionOutOfBounds(f"action {a} outside [{grid.lower}, {grid.upper}]")
    dist = np.abs(grid.values - a[:, None])
    return np.argmin(dist, axis=1)  # argmin picks the first (lowest) index on ties
