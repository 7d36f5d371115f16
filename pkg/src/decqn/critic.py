"""Decoupled critic: per-dimension utility tables, linear composition, decoupled argmax and TD loss."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from decqn.numeric_core import (
    ConfigurationError,
    NumericError,
    backward,
    huber,
    huber_grad,
    mlp_forward,
    slice_cache,
)


class Aggregation(str, Enum):
    MEAN = "mean"
    SUM = "sum"


class LossMode(str, Enum):
    JOINT = "joint"
    INDEPENDENT = "independent"


def reshape_utilities(raw: np.ndarray, n_a: int, n_b: int) -> np.ndarray:
    """[batch, n_a*n_b] -> [batch, n_a, n_b] (row-major split, a view)."""
    raw = np.asarray(raw)
    if raw.shape[-1] != n_a * n_b:
        raise ConfigurationError(f"output width {raw.shape[-1]} != n_a*n_b = {n_a * n_b}")
    return raw.reshape(raw.shape[:-1] + (n_a, n_b))


def flatten_utilities(table: np.ndarray) -> np.ndarray:
    return table.reshape(table.shape[:-2] + (-1,))


def _scale(n_a: int, mode: Aggregation) -> float:
    return 1.0 / n_a if Aggregation(mode) is Aggregation.MEAN else 1.0


def gather(table: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Pick table[..., j, indices[..., j]] for every dimension j."""
    return np.take_along_axis(table, np.asarray(indices)[..., None], axis=-1)[..., 0]


def compose_q(table: np.ndarray, indices, mode: Aggregation = Aggregation.MEAN):
    """Joint value of ``indices``: mean (or sum) of the selected per-dimension utilities.

    Accepts a single table [n_a, n_b] with indices [n_a] or a batch [B, n_a, n_b] with [B, n_a].
    """
    table = np.asarray(table)
    picked = gather(table, indices)
    return picked.sum(axis=-1) * _scale(table.shape[-2], mode)


def decoupled_argmax(table: np.ndarray) -> np.ndarray:
    """Independent argmax per dimension; ties resolve to the lowest bin."""
    return np.argmax(table, axis=-1)


def double_q_select(table_1: np.ndarray, table_2: np.ndarray) -> np.ndarray:
    if np.shape(table_1) != np.shape(table_2):
        raise ConfigurationError("utility tables must share a shape")
    return decoupled_argmax(np.maximum(table_1, table_2))


def bellman_target(nstep, target_table_1, target_table_2, greedy_indices, gamma: float, n: int,
                   mode: Aggregation = Aggregation.MEAN) -> float:
    """n-step target for one item, bootstrapping from the averaged target critics."""
    if nstep.effective_n > n:
        raise ValueError(f"effective_n {nstep.effective_n} exceeds n={n}")
    avg = 0.5 * (np.asarray(target_table_1) + np.asarray(target_table_2))
    boot = compose_q(avg, greedy_indices, mode)
    return float(nstep.accumulated_reward
                 + nstep.bootstrap_mask * gamma ** nstep.effective_n * boot)


@dataclass
class TDBatch:
    states: np.ndarray
    actions: np.ndarray       # [B, n_a] bin indices
    returns: np.ndarray       # accumulated discounted n-step reward
    next_states: np.ndarray   # bootstrap states
    discounts: np.ndarray     # mask * gamma**effective_n


@dataclass
class TDResult:
    loss: float
    td_abs: np.ndarray
    targets: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    grads: tuple | None = None


def td_loss(batch: TDBatch, params_1, params_2, target_params_1, target_params_2, is_weights,
            n_a: int, n_b: int, mode: Aggregation = Aggregation.MEAN,
            loss_mode: LossMode = LossMode.JOINT, delta: float = 1.0, use_double_q: bool = True,
            optimistic: bool = False, compute_grads: bool = True) -> TDResult:
    """Huber TD loss for both online critics (mean over the batch) and its gradients.

    With ``use_double_q`` the bootstrap indices come from the elementwise max of the two
    online critics at the bootstrap state and are evaluated on the average of the two
    target critics; otherwise target critic 1 both selects and evaluates. ``optimistic``
    drops every term whose target lies below the current estimate.
    """
    mode, loss_mode = Aggregation(mode), LossMode(loss_mode)
    w = np.asarray(is_weights, dtype=np.float64)
    bsz = len(w)
    actions = np.asarray(batch.actions)

    def tab(params, x):
        return reshape_utilities(mlp_forward(params, x), n_a, n_b)

    t1_next = tab(target_params_1, batch.next_states)
    if use_double_q:
        t2_next = tab(target_params_2, batch.next_states)
        t_next = 0.5 * (t1_next + t2_next)
    else:
        t_next = t1_next

    # online critics see s and s' in one pass; only the s rows are backpropagated
    if use_double_q and loss_mode is LossMode.JOINT:
        x = np.concatenate([batch.states, batch.next_states])
    else:
        x = np.asarray(batch.states)
    full1, cache1 = mlp_forward(params_1, x, keep_cache=True)
    full2, cache2 = mlp_forward(params_2, x, keep_cache=True)
    out1, out2 = full1[:bsz], full2[:bsz]
    cache1, cache2 = slice_cache(cache1, bsz), slice_cache(cache2, bsz)
    u1, u2 = reshape_utilities(out1, n_a, n_b), reshape_utilities(out2, n_a, n_b)
    disc = np.asarray(batch.discounts, dtype=np.float64)
    ret = np.asarray(batch.returns, dtype=np.float64)
    scale = _scale(n_a, mode)

    if loss_mode is LossMode.JOINT:
        if use_double_q:
            greedy = double_q_select(reshape_utilities(full1[bsz:], n_a, n_b),
                                     reshape_utilities(full2[bsz:], n_a, n_b))
        else:
            greedy = decoupled_argmax(t1_next)
        y = ret + disc * compose_q(t_next, greedy, mode)
        q1, q2 = compose_q(u1, actions, mode), compose_q(u2, actions, mode)
        r1, r2 = y - q1, y - q2
        td_abs = np.abs(y - 0.5 * (q1 + q2))
        per_dim = False
    else:
        y = ret[:, None] + disc[:, None] * t_next.max(axis=-1)
        q1, q2 = gather(u1, actions), gather(u2, actions)
        r1, r2 = y - q1, y - q2
        td_abs = np.abs(y - 0.5 * (q1 + q2)).mean(axis=1)
        per_dim = True

    m1 = (r1 > 0) if optimistic else np.ones(r1.shape, dtype=bool)
    m2 = (r2 > 0) if optimistic else np.ones(r2.shape, dtype=bool)
    terms = huber(r1, delta) * m1 + huber(r2, delta) * m2
    if per_dim:
        terms = terms.sum(axis=1)
    loss = float(np.mean(w * terms))
    if not np.isfinite(loss):
        raise NumericError(f"non-finite TD loss (max |target| {np.max(np.abs(y))})")

    grads = None
    if compute_grads:
        rows = np.repeat(np.arange(bsz), n_a)
        cols = (np.arange(n_a)[None, :] * n_b + actions).reshape(-1)
        grads = []
        for r, m, out, cache, params in ((r1, m1, out1, cache1, params_1),
                                         (r2, m2, out2, cache2, params_2)):
            dq = -huber_grad(r, delta) * m * (w / bsz if not per_dim else (w / bsz)[:, None])
            g_out = np.zeros_like(out)
            if per_dim:
                g_out[rows, cols] = dq.reshape(-1)
            else:
                g_out[rows, cols] = np.repeat(dq * scale, n_a)
            grads.append(backward(params, cache, g_out))
        grads = tuple(grads)
    return TDResult(loss, td_abs, y, q1, q2, grads)
