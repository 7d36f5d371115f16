"""Cart-pole swing-up with a point-mass pole, RK4 integration and a fixed-length episode."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CartpoleParams:
    m_cart: float = 1.0
    m_pole: float = 0.1
    length: float = 0.5
    gravity: float = 9.81
    f_max: float = 10.0
    dt: float = 0.01
    action_repeat: int = 2


def wrap_angle(theta):
    """Map to (-pi, pi]."""
    w = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def derivatives(s: np.ndarray, force: float, p: CartpoleParams) -> np.ndarray:
    # theta = 0 is upright
    _, xd, th, thd = s
    sin, cos = np.sin(th), np.cos(th)
    m, ml = p.m_pole, p.m_pole * p.length
    xdd = (force + ml * thd * thd * sin - m * p.gravity * sin * cos) / (p.m_cart + m - m * cos * cos)
    thdd = (p.gravity * sin - xdd * cos) / p.length
    return np.array([xd, xdd, thd, thdd])


def rk4(s: np.ndarray, force: float, p: CartpoleParams, dt: float) -> np.ndarray:
    k1 = derivatives(s, force, p)
    k2 = derivatives(s + 0.5 * dt * k1, force, p)
    k3 = derivatives(s + 0.5 * dt * k2, force, p)
    k4 = derivatives(s + dt * k3, force, p)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def energy(s: np.ndarray, p: CartpoleParams) -> float:
    """Total mechanical energy, potential measured from the hanging position."""
    _, xd, th, thd = s
    m, l = p.m_pole, p.length
    kin = 0.5 * (p.m_cart + m) * xd ** 2 + m * l * xd * thd * np.cos(th) + 0.5 * m * l * l * thd ** 2
    return float(kin + m * p.gravity * l * (1.0 + np.cos(th)))


def upright_reward(s: np.ndarray, center_shaping: bool = False) -> float:
    r = 0.5 * (1.0 + np.cos(s[2]))
    if center_shaping:
        r *= 0.5 * (1.0 + np.exp(-s[0] ** 2))
    return float(r)


class CartpoleSwingup:
    """Observation: (x, x_dot, cos theta, sin theta, theta_dot). One action dimension (force)."""

    obs_dim = 5
    n_a = 1
    default_bins = 3

    def __init__(self, params: CartpoleParams = CartpoleParams(), horizon: int = 1000,
                 center_shaping: bool = False, init_noise: float = 0.01, seed: int = 0):
        self.p = params
        self.horizon = horizon
        self.center_shaping = center_shaping
        self.init_noise = init_noise
        self.rng = np.random.default_rng(seed)
        self.action_low, self.action_high = -np.ones(1), np.ones(1)
        self.state = np.array([0.0, 0.0, np.pi, 0.0])
        self.t = 0

    @staticmethod
    def observe(s: np.ndarray) -> np.ndarray:
        return np.array([s[0], s[1], np.cos(s[2]), np.sin(s[2]), s[3]])

    def reset(self):
        noise = self.init_noise * self.rng.standard_normal(4) if self.init_noise else np.zeros(4)
        s = np.array([0.0, 0.0, np.pi, 0.0]) + noise
        s[2] = wrap_angle(s[2])
        self.state, self.t = s, 0
        return self.observe(s)

    def step(self, action):
        u = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0], -1.0, 1.0))
        s = self.state
        for _ in range(self.p.action_repeat):
            s = rk4(s, u * self.p.f_max, self.p, self.p.dt)
        s[2] = wrap_angle(s[2])
        if not np.all(np.isfinite(s)):
            raise FloatingPointError(f"cartpole state diverged: {s}")
        self.state = s
        self.t += 1
        reward = upright_reward(s, self.center_shaping)
        return self.observe(s), reward, False, self.t >= self.horizon
