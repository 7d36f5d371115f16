import numpy as np
import pytest
from hypothesis import given, strategies as st

from decqn.config import EnvConfig
from decqn.envs import GaussianNoise, env_oracle, make_env
from decqn.envs.cartpole import CartpoleParams, CartpoleSwingup, energy, rk4, upright_reward, wrap_angle
from decqn.envs.matrix import (
    CLIMBING,
    MatrixGame1Step,
    PointMassGame,
    PointMassState,
    TwoStepGame,
    penalty_matrix,
    pointmass_step,
    probe_sign_agreement,
    two_step_transition,
    velocity_probe,
    zone_of,
)
from decqn.oracles import additive_fit, matrix_optimum, pointmass_state_optimum, two_step_value_iteration

A, B = -1.0, 1.0  # 2-bin actions


def test_two_step_transitions():
    for a2 in (0, 1):
        assert two_step_transition(1, 0, a2) == (2, 0.0, False)
        assert two_step_transition(1, 1, a2) == (3, 0.0, False)
    env = TwoStepGame()
    assert env.reset().tolist() == [1, 0, 0]
    obs, r, term, tout = env.step([B, A])
    assert obs.tolist() == [0, 0, 1] and r == 0 and not term and not tout
    obs, r, term, tout = env.step([B, B])
    assert r == 8.0 and term and not tout


def test_two_step_value_iteration_oracle():
    res = two_step_value_iteration()
    # exhaustive enumeration of the two decisions as an independent check
    best = max(two_step_transition(s2, a, b)[1]
               for s2 in (2, 3) for a in (0, 1) for b in (0, 1))
    assert res.optimum == best == 8.0
    assert res.path[0][:2] == (1, 1) and res.path[1] == (3, 1, 1)


def test_two_step_oracle_follows_configured_payoffs():
    res = two_step_value_iteration((np.full((2, 2), 9.0), np.array([[0.0, 1.0], [1.0, 8.0]])))
    assert res.optimum == 9.0 and res.path[0][1] == 0


def test_penalty_game_corners():
    env = MatrixGame1Step(penalty_matrix(-100.0))
    assert env.step([-1, -1])[1] == 10 and env.step([1, 1])[1] == 10
    assert env.step([-1, 1])[1] == -100 and env.step([1, -1])[1] == -100
    _, _, term, tout = env.step([0, 0])
    assert term and not tout
    assert matrix_optimum(penalty_matrix(-100.0)).optimum == 10


def test_climbing_game_is_not_additive():
    _, resid = additive_fit(CLIMBING)
    assert resid > 0
    res = matrix_optimum(CLIMBING)
    assert res.optimum == 11 and res.path == [(0, 0)]


def test_pointmass_euler_and_rest():
    s = pointmass_step(PointMassState(np.zeros(2), np.zeros(2)), [0, 0], 0.05, 2, 1)
    assert np.all(s.position == 0) and np.all(s.velocity == 0)
    s = pointmass_step(PointMassState(np.zeros(2), np.zeros(2)), [1, 0], 0.05, 2, 1)
    np.testing.assert_allclose(s.velocity, [0.05, 0])
    np.testing.assert_allclose(s.position, [0.0025, 0])


@given(st.lists(st.tuples(st.sampled_from([-1, 0, 1]), st.sampled_from([-1, 0, 1])), max_size=300))
def test_pointmass_clamps(actions):
    s = PointMassState(np.zeros(2), np.zeros(2))
    for a in actions:
        s = pointmass_step(s, a, 0.05, 0.3, 0.2)
        assert np.all(np.abs(s.position) <= 0.3) and np.all(np.abs(s.velocity) <= 0.2)


def test_pointmass_episode_is_exactly_1000_steps():
    env = PointMassGame(penalty_matrix())
    env.reset()
    rng = np.random.default_rng(0)
    for t in range(1, 1001):
        _, _, term, tout = env.step(rng.choice([-1.0, 0.0, 1.0], size=2))
        assert not term
        assert tout == (t == 1000)


def test_pointmass_state_reward_zones():
    assert zone_of(np.array([-0.6, -0.5, 0.0, 0.5, 0.51]), 0.5).tolist() == [0, 1, 1, 1, 2]
    env = PointMassGame(CLIMBING, reward_mode="state")
    env.reset()
    _, r, _, _ = env.step([1.0, 1.0])
    assert r == pytest.approx(CLIMBING[1, 1] / 100)


def test_pointmass_state_oracle_bounds():
    res = pointmass_state_optimum(CLIMBING, 1000, 0.01, 0.05, 2.0, 1.0, 0.5)
    # hold (-,-) for 11 per step once both axes leave the middle zone
    assert res.policy[0] == (0, 0)
    assert 0 < res.optimum < 1000 * 11 * 0.01


def test_env_oracle_dispatch():
    assert env_oracle(EnvConfig(name="two_step")).optimum == 8.0
    assert env_oracle(EnvConfig(name="matrix_1step", game="climbing")).optimum == 11.0
    assert env_oracle(EnvConfig(name="pointmass", game="penalty")).optimum == pytest.approx(100.0)
    assert env_oracle(EnvConfig(name="cartpole_swingup")) is None


def test_cartpole_hanging_equilibrium():
    env = CartpoleSwingup(init_noise=0.0)
    obs = env.reset()
    for _ in range(50):
        obs2, r, term, _ = env.step([0.0])
        assert not term
    np.testing.assert_allclose(obs2, obs, atol=1e-12)
    assert r == pytest.approx(0.0, abs=1e-12)


def test_cartpole_upright_reward_and_angle_wrap():
    assert upright_reward(np.array([0.0, 0.0, 0.0, 0.0])) == 1.0
    assert wrap_angle(-np.pi) == np.pi
    assert wrap_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)


@pytest.mark.parametrize("theta0,omega0", [(np.pi / 2, 0.0), (2.5, 3.0), (0.1, -1.0)])
def test_cartpole_energy_conservation(theta0, omega0):
    p = CartpoleParams()
    s = np.array([0.0, 0.3, theta0, omega0])
    e0 = energy(s, p)
    for _ in range(1000):
        s = rk4(s, 0.0, p, p.dt)
    assert abs(energy(s, p) - e0) <= 1e-4 * abs(e0)


def test_cartpole_timeout_and_observation():
    env = CartpoleSwingup(horizon=5)
    obs = env.reset()
    assert obs.shape == (5,)
    assert obs[2] ** 2 + obs[3] ** 2 == pytest.approx(1.0)
    flags = [env.step([1.0])[3] for _ in range(5)]
    assert flags == [False] * 4 + [True]


def test_noise_wrapper_identity_at_zero():
    base, wrapped = CartpoleSwingup(seed=3), GaussianNoise(CartpoleSwingup(seed=3), 0.0, 0.0)
    assert np.array_equal(base.reset(), wrapped.reset())
    for a in ([1.0], [-1.0], [0.0]):
        x, y = base.step(a), wrapped.step(a)
        assert np.array_equal(x[0], y[0]) and x[1:] == y[1:]


def test_noise_wrapper_statistics():
    env = GaussianNoise(CartpoleSwingup(seed=0, horizon=20_000), 0.1, 0.1, np.random.default_rng(1))
    env.reset()
    obs_diff, rew_diff = [], []
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        obs, r, _, _ = env.step([rng.choice([-1.0, 0.0, 1.0])])
        obs_diff.append(obs - env.clean_obs)
        rew_diff.append(r - env.clean_reward)
    assert abs(np.std(obs_diff) - 0.1) <= 0.005
    assert abs(np.std(rew_diff) - 0.1) <= 0.005
    # the true state is the unwrapped environment's state
    assert np.array_equal(env.clean_obs, CartpoleSwingup.observe(env.unwrapped.state))


def test_make_env_determinism_and_noise():
    cfg = EnvConfig(name="cartpole_swingup", obs_noise=0.1)
    a, b = make_env(cfg, seed=4), make_env(cfg, seed=4)
    assert isinstance(a, GaussianNoise)
    assert np.array_equal(a.reset(), b.reset())
    assert np.array_equal(a.step([1.0])[0], b.step([1.0])[0])


def test_probe_on_constant_policy_and_shapes():
    grid = np.linspace(-1, 1, 7)
    table = velocity_probe(lambda obs: np.zeros((len(obs), 2), int), grid, np.linspace(-1, 1, 5))
    assert table.shape == (7, 5, 2) and np.all(table == 0)
    values = np.array([[-1.0, 0.0, 1.0]] * 2)
    frac, n = probe_sign_agreement(table, grid, np.linspace(-1, 1, 5), values, 0.2)
    assert frac == 1.0 and n > 0  # (-1, -1) agrees in sign everywhere


def test_probe_sign_agreement_follows_velocity():
    grid = np.linspace(-1, 1, 9)
    values = np.array([[-1.0, 0.0, 1.0]] * 2)

    def follow(obs):  # accelerate along the sign of each velocity
        return (np.sign(obs[:, 2:]) + 1).astype(int)

    table = velocity_probe(follow, grid, grid)
    frac, n = probe_sign_agreement(table, grid, grid, values)
    assert frac == 1.0 and n == 2 * 4 * 4  # |v| in {0.25, 0.5, 0.75, 1}, same sign
