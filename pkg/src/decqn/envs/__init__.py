from __future__ import annotations

import numpy as np

from decqn.envs.cartpole import CartpoleParams, CartpoleSwingup
from decqn.envs.matrix import (
    TWO_STEP_PAYOFFS,
    MatrixGame1Step,
    PointMassGame,
    TwoStepGame,
    game_matrix,
    velocity_probe,
)
from decqn.envs.wrappers import GaussianNoise

__all__ = [
    "CartpoleSwingup", "MatrixGame1Step", "PointMassGame", "TwoStepGame", "GaussianNoise",
    "make_env", "env_oracle", "velocity_probe",
]


def make_env(cfg, seed: int = 0):
    """Instantiate the environment described by an ``EnvConfig``; noise wrapping included."""
    if cfg.name == "two_step":
        env = TwoStepGame(cfg.two_step_payoffs or TWO_STEP_PAYOFFS)
    elif cfg.name == "matrix_1step":
        scale = 1.0 if cfg.reward_scale is None else cfg.reward_scale
        env = MatrixGame1Step(game_matrix(cfg.game, cfg.penalty_k, cfg.payoff), scale)
    elif cfg.name == "pointmass":
        env = PointMassGame(
            game_matrix(cfg.game, cfg.penalty_k, cfg.payoff), reward_mode=cfg.reward_mode,
            reward_scale=0.01 if cfg.reward_scale is None else cfg.reward_scale,
            horizon=cfg.horizon, dt=0.05 if cfg.dt is None else cfg.dt, pos_bound=cfg.pos_bound,
            vel_bound=cfg.vel_bound, zone_threshold=cfg.zone_threshold)
    elif cfg.name == "cartpole_swingup":
        params = CartpoleParams(cfg.m_cart, cfg.m_pole, cfg.pole_length, cfg.gravity, cfg.f_max,
                                0.01 if cfg.dt is None else cfg.dt, cfg.action_repeat)
        env = CartpoleSwingup(params, horizon=cfg.horizon, center_shaping=cfg.center_shaping,
                              seed=seed)
    else:
        raise ValueError(f"unknown environment '{cfg.name}'")
    if cfg.obs_noise or cfg.reward_noise:
        env = GaussianNoise(env, cfg.obs_noise, cfg.reward_noise,
                            np.random.default_rng([seed, 0xA11CE]))
    return env


def env_oracle(cfg):
    """Exhaustive optimum of the configured game, or None for tasks without one (cartpole)."""
    from decqn import oracles

    if cfg.name == "two_step":
        return oracles.two_step_value_iteration(cfg.two_step_payoffs or TWO_STEP_PAYOFFS)
    if cfg.name == "matrix_1step":
        res = oracles.matrix_optimum(game_matrix(cfg.game, cfg.penalty_k, cfg.payoff))
        scale = 1.0 if cfg.reward_scale is None else cfg.reward_scale
        res.optimum *= scale
        return res
    if cfg.name == "pointmass":
        m = game_matrix(cfg.game, cfg.penalty_k, cfg.payoff)
        scale = 0.01 if cfg.reward_scale is None else cfg.reward_scale
        if cfg.reward_mode == "action":
            return oracles.pointmass_action_optimum(m, cfg.horizon, scale)
        return oracles.pointmass_state_optimum(m, cfg.horizon, scale, 0.05 if cfg.dt is None else cfg.dt,
                                               cfg.pos_bound, cfg.vel_bound, cfg.zone_threshold)
    return None
