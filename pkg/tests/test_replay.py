import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decqn.replay import (
    EPS_PRIORITY,
    EpisodeBoundaryError,
    NStepAccumulator,
    NStepTransition,
    PrioritizedReplay,
    SumTree,
    Transition,
    nstep_fold,
)


def chain(rewards, terminal_at=None, timeout_at=None, dim=2):
    out = []
    for t, r in enumerate(rewards):
        out.append(Transition(np.full(dim, t, float), np.array([t % 3, 0]), r, np.full(dim, t + 1, float),
                              terminal=t == terminal_at, timeout=t == timeout_at))
    return out


def item(i, dim=2, n_a=2):
    return NStepTransition(np.full(dim, float(i)), np.zeros(n_a, int), float(i), np.full(dim, i + 1.0), 1, 1)


def filled(priorities, alpha=1.0):
    rep = PrioritizedReplay(len(priorities), 2, 2, 0.99)
    for i in range(len(priorities)):
        rep.add(item(i))
    rep.update_priorities(np.arange(len(priorities)), np.asarray(priorities) - EPS_PRIORITY)
    return rep


def audit(tree: SumTree):
    nodes = tree.nodes
    for i in range(1, tree.capacity):
        assert nodes[i] == nodes[2 * i] + nodes[2 * i + 1], f"node {i}"


def test_transition_rejects_terminal_and_timeout():
    with pytest.raises(ValueError):
        Transition(np.zeros(1), np.zeros(1, int), 0.0, np.zeros(1), terminal=True, timeout=True)


def test_n1_is_identity():
    trs = chain([0.5, -1.0, 2.0])
    out = nstep_fold(trs, 0.9, 1)
    assert len(out) == 3
    for tr, it in zip(trs, out):
        assert it.accumulated_reward == tr.reward and it.effective_n == 1 and it.bootstrap_mask == 1
        assert np.array_equal(it.state, tr.state) and np.array_equal(it.bootstrap_state, tr.next_state)


def test_three_step_fold():
    out = nstep_fold(chain([1.0, 0.0, 2.0]), 0.9, 3)
    assert len(out) == 1
    assert out[0].accumulated_reward == pytest.approx(2.62, abs=1e-12)
    assert out[0].effective_n == 3 and out[0].bootstrap_mask == 1
    assert np.array_equal(out[0].bootstrap_state, np.full(2, 3.0))


def test_terminal_inside_window():
    out = nstep_fold(chain([1.0, 2.0], terminal_at=1), 0.9, 3)
    assert [o.effective_n for o in out] == [2, 1]
    assert out[0].accumulated_reward == pytest.approx(1.0 + 0.9 * 2.0)
    assert all(o.bootstrap_mask == 0 for o in out)
    assert out[0].discount(0.9) == 0.0


def test_timeout_flush_keeps_bootstrap():
    out = nstep_fold(chain([1.0, 1.0, 1.0, 1.0], timeout_at=3), 0.5, 3)
    assert [o.effective_n for o in out] == [3, 3, 2, 1]
    assert all(o.bootstrap_mask == 1 for o in out)
    assert out[2].discount(0.5) == 0.25


def test_cross_episode_fold_is_an_error():
    trs = chain([1.0, 1.0], terminal_at=0)
    with pytest.raises(EpisodeBoundaryError):
        nstep_fold(trs, 0.9, 3)
    acc = NStepAccumulator(0.9, 3)
    acc.push(chain([1.0])[0])
    with pytest.raises(EpisodeBoundaryError):
        acc.push(Transition(np.full(2, 7.0), np.zeros(2, int), 0.0, np.full(2, 8.0)))


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20), st.integers(1, 5),
       st.sampled_from(["terminal", "timeout", "none"]))
def test_fold_invariants(rewards, n, end):
    last = len(rewards) - 1
    trs = chain(rewards, terminal_at=last if end == "terminal" else None,
                timeout_at=last if end == "timeout" else None)
    gamma = 0.9
    out = nstep_fold(trs, gamma, n)
    expected = len(rewards) if end != "none" else max(0, len(rewards) - n + 1)
    assert len(out) == expected
    for t, o in enumerate(out):
        window = rewards[t:t + n]
        assert o.accumulated_reward == pytest.approx(sum(gamma ** j * r for j, r in enumerate(window)))
        assert o.effective_n == len(window)
        assert (o.effective_n < n) == (t + n > len(rewards))
        reaches_end = t + o.effective_n - 1 == last
        assert o.bootstrap_mask == (0 if end == "terminal" and reaches_end else 1)


def test_add_priorities_and_fifo():
    rep = PrioritizedReplay(2, 2, 2, 0.99)
    rep.add(item(0))
    assert rep.raw[0] == 1.0 and rep.tree.total == 1.0
    rep.update_priorities([0], [5.0 - EPS_PRIORITY])
    assert rep.max_priority == pytest.approx(5.0)
    rep.add(item(1))
    assert rep.raw[1] == pytest.approx(5.0)
    rep.add(item(2))  # overwrites the oldest slot
    assert len(rep) == 2
    assert rep.item(0).accumulated_reward == 2.0 and rep.item(1).accumulated_reward == 1.0


def test_zero_td_floor_and_root_delta():
    rep = filled([1.0, 2.0, 3.0])
    rep.sample(2, 1.0, 0.0, np.random.default_rng(0))
    before = rep.tree.total
    rep.update_priorities([1], [0.0])
    assert rep.raw[1] == EPS_PRIORITY
    assert rep.tree.total - before == pytest.approx(EPS_PRIORITY - 2.0, abs=1e-12)


def test_probabilities_and_weights_example():
    rep = filled([1.0, 3.0])
    np.testing.assert_allclose(rep.probabilities(1.0), [0.25, 0.75])
    np.testing.assert_allclose(rep.probabilities(0.0), [0.5, 0.5])
    # four strata of unit mass: the first always hits item 0, the rest item 1
    b = rep.sample(4, 1.0, 0.2, np.random.default_rng(0))
    assert b.indices.tolist() == [0, 1, 1, 1]
    np.testing.assert_allclose(b.weights, [1.0] + [(1.5 / 0.5) ** -0.2] * 3, atol=1e-12)
    np.testing.assert_allclose(b.weights[:2], [1.0, 0.8027], atol=1e-3)


def test_empty_sample_is_an_error():
    with pytest.raises(ValueError):
        PrioritizedReplay(4, 2, 2, 0.99).sample(2, 0.6, 0.2, np.random.default_rng(0))


def test_batch_larger_than_buffer_is_allowed():
    b = filled([1.0, 2.0]).sample(16, 0.6, 0.2, np.random.default_rng(0))
    assert len(b.indices) == 16 and set(b.indices.tolist()) <= {0, 1}


@pytest.mark.parametrize("alpha", [0.6, 1.0])
def test_sampling_frequencies_within_three_standard_errors(alpha):
    rng = np.random.default_rng(3)
    pri = rng.uniform(0.05, 5.0, size=13)
    rep = filled(pri)
    p = pri ** alpha / np.sum(pri ** alpha)
    counts = np.zeros(13)
    draws, bsz = 100_000, 64
    done = 0
    while done < draws:
        k = min(bsz, draws - done)
        np.add.at(counts, rep.sample(k, alpha, 0.2, rng).indices, 1)
        done += k
    se = np.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(counts / draws - p) <= 3 * se)


def test_alpha_beta_zero_is_uniform_with_unit_weights():
    rng = np.random.default_rng(4)
    rep = filled(rng.uniform(0.1, 10, size=7))
    counts = np.zeros(7)
    for _ in range(500):
        b = rep.sample(20, 0.0, 0.0, rng)
        assert np.all(b.weights == 1.0)
        np.add.at(counts, b.indices, 1)
    p, n = 1 / 7, 10_000
    assert np.all(np.abs(counts / n - p) <= 3 * np.sqrt(p * (1 - p) / n))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20)
def test_weights_in_unit_interval_with_exact_max(seed):
    rng = np.random.default_rng(seed)
    rep = filled(rng.uniform(1e-3, 10, size=int(rng.integers(1, 40))))
    b = rep.sample(int(rng.integers(1, 64)), 0.6, 0.2, rng)
    assert np.all(b.weights > 0) and np.all(b.weights <= 1) and b.weights.max() == 1.0


def test_tree_audit_after_random_operations():
    rng = np.random.default_rng(5)
    rep = PrioritizedReplay(100, 2, 2, 0.99)
    for op in range(10_000):
        if len(rep) == 0 or rng.random() < 0.4:
            rep.add(item(op))
        else:
            k = int(rng.integers(1, 8))
            idx = rng.integers(0, len(rep), size=k)  # duplicates on purpose
            rep.update_priorities(idx, rng.exponential(2.0, size=k))
    audit(rep.tree)
    assert rep.tree.total == rep.tree.nodes[1]
    np.testing.assert_allclose(rep.tree.leaves()[:100], rep.raw[:100] ** rep.alpha, rtol=1e-15)
    assert np.all(rep.tree.leaves()[100:] == 0)


@given(st.lists(st.tuples(st.integers(0, 15), st.floats(0, 100)), min_size=1, max_size=60))
def test_sum_tree_parent_equals_children(ops):
    tree = SumTree(13)
    assert tree.capacity == 16
    for i, v in ops:
        tree.set(i, v)
    audit(tree)
    last = {i: v for i, v in ops}
    for i, v in last.items():
        assert tree.leaves()[i] == v


def test_sum_tree_duplicate_writes_last_wins():
    tree = SumTree(4)
    tree.set([1, 1, 2], [3.0, 5.0, 1.0])
    assert tree.leaves().tolist() == [0, 5.0, 1.0, 0] and tree.total == 6.0


def test_alpha_change_rebuilds_tree():
    rep = filled([1.0, 4.0])
    rep.sample(1, 1.0, 0.0, np.random.default_rng(0))
    assert rep.tree.total == pytest.approx(5.0)
    rep.sample(1, 0.5, 0.0, np.random.default_rng(0))
    assert rep.tree.total == pytest.approx(3.0)
    audit(rep.tree)
