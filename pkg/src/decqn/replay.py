"""n-step transition folding and proportional prioritized replay on a sum tree."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

EPS_PRIORITY = 1e-6


@dataclass
class Transition:
    state: np.ndarray
    action_indices: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool = False
    timeout: bool = False

    def __post_init__(self):
        if self.terminal and self.timeout:
            raise ValueError("a transition cannot be both terminal and a timeout")


@dataclass
class NStepTransition:
    state: np.ndarray
    action_indices: np.ndarray
    accumulated_reward: float
    bootstrap_state: np.ndarray
    effective_n: int
    bootstrap_mask: int

    def discount(self, gamma: float) -> float:
        """Multiplier on the bootstrap value: mask * gamma**effective_n."""
        return self.bootstrap_mask * gamma ** self.effective_n


class EpisodeBoundaryError(RuntimeError):
    pass


class NStepAccumulator:
    """Streams transitions of one episode at a time and emits n-step folds.

    Once ``n`` transitions are buffered, each push emits the window starting at the
    oldest one. A terminal or timeout flushes every remaining (shorter) window.
    """

    def __init__(self, gamma: float, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.gamma = gamma
        self.n = n
        self._window: deque[Transition] = deque()

    def reset(self) -> None:
        self._window.clear()

    def _fold(self) -> NStepTransition:
        ret = 0.0
        mask = 1
        for j, tr in enumerate(self._window):
            ret += self.gamma ** j * tr.reward
            if tr.terminal:
                mask = 0
        head, tail = self._window[0], self._window[-1]
        return NStepTransition(head.state, head.action_indices, ret, tail.next_state,
                               len(self._window), mask)

    def push(self, tr: Transition) -> list[NStepTransition]:
        if self._window and not np.array_equal(self._window[-1].next_state, tr.state):
            raise EpisodeBoundaryError("transition does not continue the buffered episode")
        self._window.append(tr)
        out = []
        if tr.terminal or tr.timeout:
            while self._window:
                out.append(self._fold())
                self._window.popleft()
        elif len(self._window) == self.n:
            out.append(self._fold())
            self._window.popleft()
        return out


def nstep_fold(transitions, gamma: float, n: int) -> list[NStepTransition]:
    """Fold a consecutive run of transitions from a single episode."""
    acc = NStepAccumulator(gamma, n)
    out = []
    for i, tr in enumerate(transitions):
        if i and (transitions[i - 1].terminal or transitions[i - 1].timeout):
            raise EpisodeBoundaryError("transitions span more than one episode")
        out.extend(acc.push(tr))
    return out


class SumTree:
    """Array-backed binary sum tree. Node 1 is the root, leaves live at [cap, 2*cap)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = 1 << (int(capacity) - 1).bit_length()
        self.depth = self.capacity.bit_length() - 1
        self.nodes = np.zeros(2 * self.capacity, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def leaves(self) -> np.ndarray:
        return self.nodes[self.capacity:]

    def set(self, leaf_idx, values) -> None:
        leaf_idx = np.atleast_1d(np.asarray(leaf_idx, dtype=np.int64))
        values = np.broadcast_to(np.asarray(values, dtype=np.float64), leaf_idx.shape)
        # with duplicate indices the last write wins
        last = {int(i): float(v) for i, v in zip(leaf_idx, values)}
        idx = np.fromiter(last.keys(), dtype=np.int64) + self.capacity
        self.nodes[idx] = np.fromiter(last.values(), dtype=np.float64)
        for _ in range(self.depth):
            idx = idx >> 1  # duplicate parents all receive the same sum
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1]

    def rebuild(self) -> None:
        for level in range(self.depth - 1, -1, -1):
            lo, hi = 1 << level, 1 << (level + 1)
            self.nodes[lo:hi] = self.nodes[2 * lo:2 * hi:2] + self.nodes[2 * lo + 1:2 * hi:2]

    def find(self, mass: np.ndarray) -> np.ndarray:
        """Leaf index whose cumulative interval contains each query mass."""
        mass = np.array(mass, dtype=np.float64)
        idx = np.ones(mass.shape, dtype=np.int64)
        for _ in range(self.depth):
            left = 2 * idx
            lv = self.nodes[left]
            right = mass >= lv
            mass = np.where(right, mass - lv, mass)
            idx = left + right
        return idx - self.capacity


@dataclass
class SampledBatch:
    indices: np.ndarray
    weights: np.ndarray
    probs: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    returns: np.ndarray
    next_states: np.ndarray
    discounts: np.ndarray


class PrioritizedReplay:
    """FIFO ring buffer of n-step items with proportional prioritized sampling.

    Raw priorities ``|td| + eps`` are kept alongside the tree; the tree holds
    ``raw ** alpha`` for the alpha it was last sampled with and is rebuilt if
    alpha changes.
    """

    def __init__(self, capacity: int, obs_dim: int, n_a: int, gamma: float):
        self.capacity = int(capacity)
        self.gamma = gamma
        self.tree = SumTree(self.capacity)
        self.raw = np.zeros(self.capacity, dtype=np.float64)
        self.states = np.zeros((self.capacity, obs_dim))
        self.next_states = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros((self.capacity, n_a), dtype=np.int64)
        self.returns = np.zeros(self.capacity)
        self.discounts = np.zeros(self.capacity)
        self.effective_n = np.zeros(self.capacity, dtype=np.int64)
        self.masks = np.zeros(self.capacity, dtype=np.int64)
        self.cursor = 0
        self.size = 0
        self.max_priority = 1.0
        self.alpha = 1.0

    def __len__(self) -> int:
        return self.size

    def add(self, item: NStepTransition) -> int:
        i = self.cursor
        self.states[i] = item.state
        self.next_states[i] = item.bootstrap_state
        self.actions[i] = item.action_indices
        self.returns[i] = item.accumulated_reward
        self.discounts[i] = item.discount(self.gamma)
        self.effective_n[i] = item.effective_n
        self.masks[i] = item.bootstrap_mask
        self.raw[i] = self.max_priority
        self.tree.set(i, self.max_priority ** self.alpha)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return i

    def item(self, i: int) -> NStepTransition:
        return NStepTransition(self.states[i].copy(), self.actions[i].copy(), float(self.returns[i]),
                               self.next_states[i].copy(), int(self.effective_n[i]), int(self.masks[i]))

    def _set_alpha(self, alpha: float) -> None:
        if alpha == self.alpha:
            return
        self.alpha = alpha
        leaves = self.tree.leaves()
        leaves[:] = 0.0
        leaves[:self.size] = self.raw[:self.size] ** alpha
        self.tree.rebuild()

    def probabilities(self, alpha: float) -> np.ndarray:
        p = self.raw[:self.size] ** alpha
        return p / p.sum()

    def sample(self, batch_size: int, alpha: float, beta: float,
               rng: np.random.Generator) -> SampledBatch:
        """Stratified proportional sampling: one draw per equal slice of total mass."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay")
        if alpha == 0 and beta == 0:
            # prioritization disabled: plain uniform sampling with replacement
            idx = rng.integers(0, self.size, size=batch_size)
            return SampledBatch(idx, np.ones(batch_size), np.full(batch_size, 1.0 / self.size),
                                self.states[idx], self.actions[idx], self.returns[idx],
                                self.next_states[idx], self.discounts[idx])
        self._set_alpha(alpha)
        total = self.tree.total
        seg = total / batch_size
        mass = (np.arange(batch_size) + rng.random(batch_size)) * seg
        idx = self.tree.find(np.minimum(mass, np.nextafter(total, 0.0)))
        idx = np.minimum(idx, self.size - 1)
        probs = self.tree.leaves()[idx] / total
        w = (self.size * probs) ** (-beta)
        w = w / w.max()
        return SampledBatch(idx, w, probs, self.states[idx], self.actions[idx], self.returns[idx],
                            self.next_states[idx], self.discounts[idx])

    def update_priorities(self, indices, td_errors) -> None:
        p = np.abs(np.asarray(td_errors, dtype=np.float64)) + EPS_PRIORITY
        last = dict(zip(np.asarray(indices).tolist(), p.tolist()))
        idx = np.fromiter(last.keys(), dtype=np.int64)
        p = np.fromiter(last.values(), dtype=np.float64)
        self.raw[idx] = p
        self.tree.set(idx, p ** self.alpha)
        self.max_priority = max(self.max_priority, float(p.max()))
