"""Multi-seed experiment suites shared by the acceptance tests and the scripts in scripts/.

Each suite trains through ``run_experiment`` (so every run leaves the usual artifacts on
disk) and returns plain dicts that are easy to assert on or dump as JSON.
"""
from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

from decqn.config import AgentConfig, EnvConfig, ExperimentConfig
from decqn.critic import compose_q
from decqn.envs.matrix import TWO_STEP_PAYOFFS
from decqn.harness.reports import probe_report
from decqn.harness.runner import run_experiment

# desk-scale learner used by the coordination games and the cartpole suites
DESK_AGENT = dict(hidden=64, dtype="float32")


def matrix_agent(**kw) -> AgentConfig:
    """Epsilon 0.5 and 1-step targets, the setting used for every matrix game."""
    base = dict(DESK_AGENT, epsilon=0.5, n_step=1)
    base.update(kw)
    return AgentConfig(**base)


def run_seeds(cfg: ExperimentConfig, root: Path, seeds=None) -> list[dict]:
    code, results = run_experiment(cfg, seeds, root=root)
    return results


def returns_of(results) -> np.ndarray:
    return np.array([r.get("final_eval_mean", np.nan) for r in results])


def all_ok(results) -> bool:
    return all(r["status"] == "ok" for r in results)


def composed_table(agent, obs) -> np.ndarray:
    """Twin-averaged composed Q of every joint action at ``obs`` (shape [n_b] * n_a)."""
    t1, t2 = agent.utilities(obs)
    avg = 0.5 * (t1[0] + t2[0])
    table = np.zeros((agent.n_b,) * agent.n_a)
    for cell in itertools.product(range(agent.n_b), repeat=agent.n_a):
        table[cell] = compose_q(avg, np.array(cell), agent.cfg.aggregation)
    return table


# -- suites ------------------------------------------------------------------

def two_step_suite(root: Path, epsilon: float, steps: int, seeds) -> dict:
    cfg = ExperimentConfig(env=EnvConfig(name="two_step"), agent=matrix_agent(epsilon=epsilon),
                           total_steps=steps, eval_interval=1000, eval_episodes=1, log_interval=1000,
                           seeds=list(seeds), output_dir=f"two_step_eps{epsilon}",
                           occupancy_stages=[steps // 2])
    results = run_seeds(cfg, root)
    state3 = np.array([0.0, 0.0, 1.0])
    payoff = np.asarray(TWO_STEP_PAYOFFS[1])
    deviations = [float(np.max(np.abs(composed_table(r["agent"], state3) - payoff))) for r in results]
    return {"returns": returns_of(results).tolist(), "oracle": results[0]["oracle"]["optimum"],
            "matches": [bool(r.get("matches_oracle")) for r in results],
            "state3_max_deviation": deviations, "ok": all_ok(results)}


def penalty_1step_suite(root: Path, k: float, steps: int, seeds) -> dict:
    cfg = ExperimentConfig(env=EnvConfig(name="matrix_1step", game="penalty", penalty_k=k),
                           agent=matrix_agent(), total_steps=steps, eval_interval=1000, eval_episodes=1,
                           log_interval=1000, seeds=list(seeds), output_dir=f"penalty_1step_k{k:g}")
    results = run_seeds(cfg, root)
    return {"returns": returns_of(results).tolist(), "oracle": results[0]["oracle"]["optimum"],
            "matches": [bool(r.get("matches_oracle")) for r in results], "ok": all_ok(results)}


def pointmass_suite(root: Path, game: str, reward_mode: str, steps: int, seeds, k: float = -100.0,
                    optimistic: bool = False, learner_period: int = 1, probe: bool = False) -> dict:
    tag = f"_k{k:g}" if game == "penalty" else ""
    cfg = ExperimentConfig(
        env=EnvConfig(name="pointmass", game=game, reward_mode=reward_mode, penalty_k=k),
        agent=matrix_agent(optimistic=optimistic, learner_period=learner_period),
        total_steps=steps, eval_interval=10_000, eval_episodes=1, log_interval=10_000,
        seeds=list(seeds), output_dir=f"pointmass_{game}_{reward_mode}{tag}_opt{int(optimistic)}")
    results = run_seeds(cfg, root)
    out = {"returns": returns_of(results).tolist(), "oracle": results[0]["oracle"]["optimum"],
           "fraction": [r.get("fraction_of_oracle") for r in results],
           "matches": [bool(r.get("matches_oracle")) for r in results], "ok": all_ok(results)}
    if probe:
        reports = [probe_report(r["agent"]) for r in results if r["status"] == "ok"]
        out["probe_agreement"] = [p["sign_agreement"] for p in reports]
    return out


def cartpole_config(steps: int, seeds, output_dir: str, **agent_kw) -> ExperimentConfig:
    agent = dict(DESK_AGENT)
    agent.update(agent_kw)
    return ExperimentConfig(env=EnvConfig(name="cartpole_swingup"), agent=AgentConfig(**agent),
                            total_steps=steps, eval_interval=max(steps // 5, 1), eval_episodes=1,
                            log_interval=max(steps // 20, 1), seeds=list(seeds), output_dir=output_dir)


ABLATIONS = {"full": {}, "no_nstep": {"use_nstep": False}, "no_double_q": {"use_double_q": False},
             "no_per": {"use_per": False}}


def cartpole_suite(root: Path, steps: int, seeds, output_dir: str, obs_noise: float = 0.0,
                   **agent_kw) -> dict:
    cfg = cartpole_config(steps, seeds, output_dir, **agent_kw)
    cfg.env.obs_noise = obs_noise
    results = run_seeds(cfg, root)
    return {"returns": returns_of(results).tolist(), "ok": all_ok(results),
            "status": [r["status"] for r in results]}


def ablation_suite(root: Path, steps: int, seeds, full: dict | None = None, **agent_kw) -> dict:
    """Full agent plus one run per disabled component. ``full`` reuses an existing full-agent result."""
    out = {}
    for name, flags in ABLATIONS.items():
        if name == "full" and full is not None:
            out[name] = full
            continue
        kw = dict(agent_kw)
        kw.update(flags)
        out[name] = cartpole_suite(root, steps, seeds, f"cartpole_ablation_{name}", **kw)
    return out


def noise_suite(root: Path, steps: int, seeds, sigma: float = 0.1, clean: dict | None = None,
                **agent_kw) -> dict:
    """Same agent with and without observation noise. ``clean`` reuses an existing noise-free result."""
    out = {"clean": clean or cartpole_suite(root, steps, seeds, "cartpole_noise_0", **agent_kw),
           "noisy": cartpole_suite(root, steps, seeds, f"cartpole_noise_{sigma:g}", obs_noise=sigma, **agent_kw)}
    clean, noisy = np.mean(out["clean"]["returns"]), np.mean(out["noisy"]["returns"])
    out["degradation_factor"] = float(noisy / clean) if clean else float("nan")
    return out


def cartpole_comparison_suite(root: Path, steps: int, seeds, sweep: dict, **agent_kw) -> dict:
    """DecQN, enumerated DQN, and a small sweep whose best mean return sets the reference."""
    out = {}
    configs = {"decqn": {}, "dqn": {"enumerated_dqn": True}}
    configs.update(sweep)
    for name, extra in configs.items():
        kw = dict(agent_kw)
        kw.update(extra)
        results = run_seeds(cartpole_config(steps, seeds, f"cartpole_{name}", **kw), root)
        out[name] = {"returns": returns_of(results).tolist(), "ok": all_ok(results)}
    out["best_reference"] = float(max(np.mean(v["returns"]) for v in out.values()))
    return out


def control_affine_suite(learner_steps: int = 2000, seed: int = 0, n_b: int = 3) -> dict:
    """One-step task with reward r1(a1) + r2(a2): the decoupled critic can fit it exactly.

    Every item is terminal, so the TD target is the reward itself and ``mean_td`` is the
    regression error of the composed critic.
    """
    from decqn.agent import DecQNAgent
    from decqn.discretizer import build_grid
    from decqn.oracles import additive_fit
    from decqn.replay import Transition

    rng = np.random.default_rng(seed)
    r1, r2 = rng.uniform(-1, 1, n_b), rng.uniform(-1, 1, n_b)
    cfg = AgentConfig(hidden=32, batch_size=64, min_fill=64, n_step=1, epsilon=1.0,
                      replay_capacity=10_000, target_update_period=100)
    agent = DecQNAgent(cfg, 4, build_grid([-1.0, -1.0], [1.0, 1.0], n_b), seed=seed)
    obs = np.zeros(4)
    for _ in range(1000):
        a = agent.act(obs)
        agent.observe(Transition(obs, a, float(r1[a[0]] + r2[a[1]]), obs, terminal=True))
    trace = [agent.learner_step()["mean_td"] for _ in range(learner_steps)]
    # score on the full joint table rather than the last sampled batch
    table = r1[:, None] + r2[None, :]
    fitted = composed_table(agent, obs)
    _, additive_resid = additive_fit(table)
    _, random_resid = additive_fit(rng.uniform(-1, 1, (n_b, n_b)))
    return {"final_batch_td": float(np.mean(trace[-10:])),
            "table_mean_abs_err": float(np.mean(np.abs(fitted - table))),
            "additive_table_residual": float(additive_resid),
            "random_table_residual": float(random_resid)}
