from __future__ import annotations

import numpy as np


class GaussianNoise:
    """Adds i.i.d. Gaussian noise to observations and/or rewards.

    The wrapped environment evolves untouched; ``clean_obs`` and ``clean_reward`` hold the
    noise-free values of the latest step for evaluation.
    """

    def __init__(self, env, sigma_obs: float = 0.0, sigma_rew: float = 0.0,
                 rng: np.random.Generator | None = None):
        if sigma_obs < 0 or sigma_rew < 0:
            raise ValueError("noise scales must be non-negative")
        self.env = env
        self.sigma_obs = sigma_obs
        self.sigma_rew = sigma_rew
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.clean_obs = None
        self.clean_reward = 0.0

    def __getattr__(self, name):
        return getattr(self.env, name)

    @property
    def unwrapped(self):
        return getattr(self.env, "unwrapped", self.env)

    def _noisy_obs(self, obs):
        self.clean_obs = obs
        if self.sigma_obs == 0:
            return obs
        return obs + self.sigma_obs * self.rng.standard_normal(np.shape(obs))

    def reset(self):
        return self._noisy_obs(self.env.reset())

    def step(self, action):
        obs, reward, terminal, timeout = self.env.step(action)
        self.clean_reward = reward
        if self.sigma_rew:
            reward = reward + self.sigma_rew * float(self.rng.standard_normal())
        return self._noisy_obs(obs), reward, terminal, timeout
