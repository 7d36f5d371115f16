"""Cooperative two-player matrix games: two-step game, 1-step games, point-mass (1K-step) games.

Every environment follows the same protocol::

    reset() -> obs
    step(action) -> (obs, reward, terminal, timeout)

``action`` is a continuous vector; each game maps it onto its own bins.
Agent 1 owns action dimension 0, agent 2 dimension 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from decqn.discretizer import action_to_indices, build_grid


def penalty_matrix(k: float = -100.0) -> np.ndarray:
    return np.array([[10.0, 0.0, k], [0.0, 2.0, 0.0], [k, 0.0, 10.0]])


CLIMBING = np.array([[11.0, -30.0, 0.0], [-30.0, 7.0, 6.0], [0.0, 0.0, 5.0]])

# payoffs of states 2 (after agent 1 plays A) and 3 (after B)
TWO_STEP_PAYOFFS = (np.full((2, 2), 7.0), np.array([[0.0, 1.0], [1.0, 8.0]]))


def game_matrix(game: str, penalty_k: float = -100.0, payoff=None) -> np.ndarray:
    if payoff is not None:
        return np.asarray(payoff, dtype=np.float64)
    if game == "penalty":
        return penalty_matrix(penalty_k)
    if game == "climbing":
        return CLIMBING.copy()
    raise ValueError(f"unknown matrix game '{game}'")


def two_step_transition(state: int, a1: int, a2: int, payoffs=TWO_STEP_PAYOFFS):
    """States are 1, 2, 3. Returns (next_state, reward, terminal); next_state is None when terminal."""
    if state == 1:
        return (2 if a1 == 0 else 3), 0.0, False
    if state in (2, 3):
        return None, float(payoffs[state - 2][a1][a2]), True
    raise ValueError(f"invalid two-step state {state}")


class TwoStepGame:
    """Observation: one-hot of the current state (length 3); zeros after termination."""

    obs_dim = 3
    n_a = 2
    default_bins = 2
    horizon = 2

    def __init__(self, payoffs=TWO_STEP_PAYOFFS):
        self.payoffs = tuple(np.asarray(p, dtype=np.float64) for p in payoffs)
        self.action_low, self.action_high = -np.ones(2), np.ones(2)
        self._grid = build_grid(self.action_low, self.action_high, 2)
        self.state = 1

    def observe(self, state) -> np.ndarray:
        obs = np.zeros(3)
        if state is not None:
            obs[state - 1] = 1.0
        return obs

    def reset(self):
        self.state = 1
        return self.observe(1)

    def step(self, action):
        a1, a2 = action_to_indices(self._grid, action)
        nxt, reward, terminal = two_step_transition(self.state, int(a1), int(a2), self.payoffs)
        self.state = nxt
        return self.observe(nxt), reward, terminal, False


class MatrixGame1Step:
    """Single-step game: constant all-zero observation, always terminal."""

    obs_dim = 4
    n_a = 2
    default_bins = 3
    horizon = 1

    def __init__(self, matrix, reward_scale: float = 1.0):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.reward_scale = reward_scale
        self.action_low, self.action_high = -np.ones(2), np.ones(2)
        self._grid = build_grid(self.action_low, self.action_high, self.matrix.shape[0])

    def reset(self):
        return np.zeros(4)

    def step(self, action):
        i, j = action_to_indices(self._grid, action)
        return np.zeros(4), float(self.matrix[i, j]) * self.reward_scale, True, False


@dataclass
class PointMassState:
    position: np.ndarray
    velocity: np.ndarray
    t: int = 0


def pointmass_step(state: PointMassState, accel, dt: float, pos_bound: float,
                   vel_bound: float) -> PointMassState:
    """Semi-implicit Euler with clamped velocity and position."""
    v = np.clip(state.velocity + np.asarray(accel, dtype=np.float64) * dt, -vel_bound, vel_bound)
    x = np.clip(state.position + v * dt, -pos_bound, pos_bound)
    return PointMassState(x, v, state.t + 1)


def zone_of(coord, threshold: float) -> np.ndarray:
    """0 below -threshold, 2 above +threshold, 1 in between (inclusive)."""
    c = np.asarray(coord)
    return np.where(c < -threshold, 0, np.where(c > threshold, 2, 1))


class PointMassGame:
    """1K-step game: agent 1 accelerates along x, agent 2 along y.

    ``reward_mode='action'`` pays matrix[bin_x, bin_y] each step; ``'state'`` pays
    matrix[zone(x), zone(y)] of the post-step position. Episodes end by timeout only.
    Observation: (x, y, v_x, v_y).
    """

    obs_dim = 4
    n_a = 2
    default_bins = 3

    def __init__(self, matrix, reward_mode: str = "action", reward_scale: float = 0.01,
                 horizon: int = 1000, dt: float = 0.05, pos_bound: float = 2.0,
                 vel_bound: float = 1.0, zone_threshold: float = 0.5, accel_bound: float = 1.0):
        if reward_mode not in ("action", "state"):
            raise ValueError(f"reward_mode must be 'action' or 'state', got {reward_mode!r}")
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.reward_mode = reward_mode
        self.reward_scale = reward_scale
        self.horizon = horizon
        self.dt, self.pos_bound, self.vel_bound = dt, pos_bound, vel_bound
        self.zone_threshold = zone_threshold
        self.action_low = -accel_bound * np.ones(2)
        self.action_high = accel_bound * np.ones(2)
        self._grid = build_grid(self.action_low, self.action_high, self.matrix.shape[0])
        self.state = PointMassState(np.zeros(2), np.zeros(2))

    @staticmethod
    def observe(state: PointMassState) -> np.ndarray:
        return np.concatenate([state.position, state.velocity])

    def reset(self):
        self.state = PointMassState(np.zeros(2), np.zeros(2))
        return self.observe(self.state)

    def step(self, action):
        bins = action_to_indices(self._grid, action)
        accel = self._grid.values[np.arange(2), bins]
        self.state = pointmass_step(self.state, accel, self.dt, self.pos_bound, self.vel_bound)
        if self.reward_mode == "action":
            reward = self.matrix[bins[0], bins[1]]
        else:
            zx, zy = zone_of(self.state.position, self.zone_threshold)
            reward = self.matrix[zx, zy]
        timeout = self.state.t >= self.horizon
        return self.observe(self.state), float(reward) * self.reward_scale, False, timeout


def velocity_probe(greedy_fn, vx_grid, vy_grid) -> np.ndarray:
    """Greedy joint action (bin indices) at the origin for every (v_x, v_y) grid point.

    Returns an int array of shape [len(vx_grid), len(vy_grid), 2].
    """
    vx_grid, vy_grid = np.asarray(vx_grid), np.asarray(vy_grid)
    vx, vy = np.meshgrid(vx_grid, vy_grid, indexing="ij")
    obs = np.stack([np.zeros(vx.size), np.zeros(vx.size), vx.ravel(), vy.ravel()], axis=1)
    acts = np.asarray(greedy_fn(obs))
    return acts.reshape(len(vx_grid), len(vy_grid), 2)


def probe_sign_agreement(table: np.ndarray, vx_grid, vy_grid, grid_values, threshold: float = 0.2):
    """Fraction of unambiguous grid points where both chosen accelerations share a sign.

    A point is unambiguous when both |v| exceed ``threshold`` and the velocities point the
    same way (sign(v_x) == sign(v_y)); zero accelerations count as disagreement.
    """
    vx, vy = np.meshgrid(np.asarray(vx_grid), np.asarray(vy_grid), indexing="ij")
    sel = (np.abs(vx) > threshold) & (np.abs(vy) > threshold) & (np.sign(vx) == np.sign(vy))
    ax = np.asarray(grid_values[0])[table[..., 0]]
    ay = np.asarray(grid_values[1])[table[..., 1]]
    agree = (np.sign(ax) == np.sign(ay)) & (ax != 0)
    n = int(sel.sum())
    return (float(agree[sel].mean()) if n else float("nan")), n
