"""DecQN learner/actor with twin critics, and the enumerated-action DQN baseline."""
from __future__ import annotations

import numpy as np

from decqn.config import AgentConfig, to_dict
from decqn.critic import TDBatch, decoupled_argmax, reshape_utilities, td_loss
from decqn.discretizer import ActionGrid, build_grid, indices_to_action
from decqn.numeric_core import (
    AdamState,
    Checkpoint,
    MlpLayout,
    adam_step,
    clip_global_norm,
    copy_params,
    flatten_params,
    init_mlp,
    load_checkpoint,
    mlp_forward,
    save_checkpoint,
    unflatten_params,
)
from decqn.replay import NStepAccumulator, PrioritizedReplay, Transition

# online + target parameters plus both Adam moments, for each of the two critics
PARAM_COPIES = 8


class MemoryBudgetExceeded(MemoryError):
    pass


def decqn_width(n_a: int, n_b: int) -> int:
    return n_a * n_b


def dqn_width(n_a: int, n_b: int) -> int:
    return n_b ** n_a


def critic_param_count(obs_dim: int, hidden: int, width: int) -> int:
    return obs_dim * hidden + hidden + 2 * (hidden * hidden + hidden) + 2 * hidden + hidden * width + width


def memory_estimate(obs_dim: int, hidden: int, width: int, itemsize: int = 8) -> int:
    """Bytes held by all parameter-shaped arrays of the twin-critic learner."""
    return critic_param_count(obs_dim, hidden, width) * itemsize * PARAM_COPIES


def check_memory_budget(obs_dim: int, hidden: int, width: int, budget: int, itemsize: int = 8) -> int:
    need = memory_estimate(obs_dim, hidden, width, itemsize)
    if need > budget:
        raise MemoryBudgetExceeded(
            f"memory budget exceeded: head width {width} needs {need:.3e} bytes > budget {budget:.3e}")
    return need


def joint_index(indices, n_b: int) -> np.ndarray:
    """Per-dimension bins [..., n_a] -> enumerated joint index (dimension 0 most significant)."""
    idx = np.asarray(indices, dtype=np.int64)
    n_a = idx.shape[-1]
    radix = n_b ** np.arange(n_a - 1, -1, -1, dtype=np.int64)
    return (idx * radix).sum(axis=-1)


def split_joint(joint, n_a: int, n_b: int) -> np.ndarray:
    j = np.asarray(joint, dtype=np.int64)
    return np.stack(np.unravel_index(j, (n_b,) * n_a), axis=-1)


def enumerated_dqn_head(raw: np.ndarray, n_a: int, n_b: int, actions=None):
    """Standard DQN head over all n_b**n_a joint actions.

    Returns (greedy joint index, greedy per-dimension bins, Q of ``actions`` if given).
    """
    raw = np.asarray(raw)
    if raw.shape[-1] != dqn_width(n_a, n_b):
        raise ValueError(f"head width {raw.shape[-1]} != {n_b}**{n_a}")
    greedy = np.argmax(raw, axis=-1)
    q = None
    if actions is not None:
        q = np.take_along_axis(raw, joint_index(actions, n_b)[..., None], axis=-1)[..., 0]
    return greedy, split_joint(greedy, n_a, n_b), q


class DecQNAgent:
    """Twin online/target critics, Adam per critic, prioritized n-step replay.

    Set ``cfg.enumerated_dqn`` for the enumerated baseline: the critic then has one output
    per joint action, which is handled as a single dimension with n_b**n_a bins.
    """

    def __init__(self, cfg: AgentConfig, obs_dim: int, grid: ActionGrid, seed: int = 0):
        self.cfg = cfg
        self.grid = grid
        self.obs_dim = obs_dim
        self.n_a, self.n_b = grid.n_a, grid.n_b
        self.dtype = np.dtype(cfg.dtype)
        if cfg.enumerated_dqn:
            width = dqn_width(self.n_a, self.n_b)
            check_memory_budget(obs_dim, cfg.hidden, width, cfg.memory_budget_bytes, self.dtype.itemsize)
            self.head = (1, width)
        else:
            self.head = (self.n_a, self.n_b)
        self.rng = np.random.default_rng(seed)
        layout = MlpLayout(obs_dim, cfg.hidden, self.head[0] * self.head[1])
        self.online = [init_mlp(layout, self.rng, self.dtype) for _ in range(2)]
        self.target = [copy_params(p) for p in self.online]
        self.adam = [AdamState.for_params(p, lr=cfg.lr) for p in self.online]
        self.replay = PrioritizedReplay(cfg.replay_capacity, obs_dim, self.n_a, cfg.gamma)
        self.nstep = NStepAccumulator(cfg.gamma, cfg.effective_n)
        self.env_steps = 0
        self.learner_steps = 0

    # -- acting --------------------------------------------------------------

    def utilities(self, obs_batch, which: str = "online"):
        """Per-critic utility tables [B, n_a, n_b] (enumerated head: [B, 1, n_b**n_a])."""
        nets = self.online if which == "online" else self.target
        obs_batch = np.atleast_2d(obs_batch)
        return tuple(reshape_utilities(mlp_forward(p, obs_batch), *self.head) for p in nets)

    def greedy_batch(self, obs_batch) -> np.ndarray:
        t1, t2 = self.utilities(obs_batch)
        idx = decoupled_argmax(np.maximum(t1, t2))
        if self.cfg.enumerated_dqn:
            return split_joint(idx[:, 0], self.n_a, self.n_b)
        return idx

    def greedy(self, obs) -> np.ndarray:
        return self.greedy_batch(np.asarray(obs)[None])[0]

    def act(self, obs, epsilon: float | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
        """Epsilon-greedy bin indices; exploration draws each dimension uniformly."""
        eps = self.cfg.epsilon if epsilon is None else epsilon
        rng = self.rng if rng is None else rng
        if eps > 0 and rng.random() < eps:
            return rng.integers(0, self.n_b, size=self.n_a)
        return self.greedy(obs)

    def action_values(self, indices) -> np.ndarray:
        return indices_to_action(self.grid, indices)

    # -- learning ------------------------------------------------------------

    def observe(self, tr: Transition) -> int:
        """Feed one environment transition; returns the number of replay items added."""
        self.env_steps += 1
        items = self.nstep.push(tr)
        for it in items:
            self.replay.add(it)
        return len(items)

    def ready(self) -> bool:
        return len(self.replay) >= max(self.cfg.min_fill, self.cfg.batch_size)

    def learner_step(self) -> dict:
        cfg = self.cfg
        if not self.ready():
            return {"skipped": True, "loss": float("nan"), "mean_td": float("nan"), "grad_norm": float("nan")}
        batch = self.replay.sample(cfg.batch_size, cfg.effective_alpha, cfg.effective_beta, self.rng)
        actions = batch.actions
        if cfg.enumerated_dqn:
            actions = joint_index(actions, self.n_b)[:, None]
        res = td_loss(TDBatch(batch.states, actions, batch.returns, batch.next_states, batch.discounts),
                      self.online[0], self.online[1], self.target[0], self.target[1], batch.weights,
                      self.head[0], self.head[1], cfg.aggregation, cfg.loss_mode, cfg.huber_delta,
                      cfg.use_double_q, cfg.optimistic)
        norms = []
        for c in range(2):
            grads, norm = clip_global_norm(res.grads[c], cfg.clip)
            norms.append(norm)
            self.online[c], self.adam[c] = adam_step(self.adam[c], self.online[c], grads)
        self.replay.update_priorities(batch.indices, res.td_abs)
        self.learner_steps += 1
        if self.learner_steps % cfg.target_update_period == 0:
            self.sync_targets()
        return {"skipped": False, "loss": res.loss, "mean_td": float(res.td_abs.mean()),
                "grad_norm": float(np.mean(norms))}

    def sync_targets(self) -> None:
        self.target = [copy_params(p) for p in self.online]

    # -- persistence ---------------------------------------------------------

    def to_checkpoint(self) -> Checkpoint:
        arrays = {}
        for c in range(2):
            arrays.update(flatten_params(f"online{c}", self.online[c]))
            arrays.update(flatten_params(f"target{c}", self.target[c]))
            arrays.update(flatten_params(f"adam{c}/m", self.adam[c].m))
            arrays.update(flatten_params(f"adam{c}/v", self.adam[c].v))
        meta = {
            "agent": to_dict(self.cfg), "grid": self.grid.to_dict(), "obs_dim": self.obs_dim,
            "env_steps": self.env_steps, "learner_steps": self.learner_steps,
            "adam_steps": [a.step for a in self.adam],
        }
        return Checkpoint(arrays, meta)

    def save(self, path) -> None:
        save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def load(cls, path, cfg: AgentConfig | None = None) -> "DecQNAgent":
        from decqn.config import from_dict

        ck = load_checkpoint(path)
        meta = ck.meta
        cfg = cfg or from_dict(AgentConfig, meta["agent"], "agent")
        g = meta["grid"]
        agent = cls(cfg, meta["obs_dim"], build_grid(g["lower"], g["upper"], g["n_b"]))
        for c in range(2):
            agent.online[c] = unflatten_params(f"online{c}", ck.arrays)
            agent.target[c] = unflatten_params(f"target{c}", ck.arrays)
            agent.adam[c] = AdamState(unflatten_params(f"adam{c}/m", ck.arrays),
                                      unflatten_params(f"adam{c}/v", ck.arrays),
                                      meta["adam_steps"][c], lr=cfg.lr)
        agent.env_steps = meta["env_steps"]
        agent.learner_steps = meta["learner_steps"]
        return agent
