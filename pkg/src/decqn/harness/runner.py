"""Seeded training runs: metrics CSV, evaluation, checkpoints, oracle comparison, occupancy."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from decqn.agent import DecQNAgent
from decqn.config import ExperimentConfig, dump_config
from decqn.critic import compose_q
from decqn.discretizer import build_grid
from decqn.envs import env_oracle, make_env
from decqn.numeric_core import NumericError
from decqn.replay import Transition

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "DECQN_OUTPUT_ROOT"
METRICS_HEADER = ["env_step", "learner_step", "train_return", "eval_mean", "eval_std",
                  "loss", "mean_td", "grad_norm", "epsilon"]


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def make_grid(cfg: ExperimentConfig, env):
    n_b = cfg.grid.n_b or env.default_bins
    lower = cfg.grid.lower if cfg.grid.lower is not None else env.action_low
    upper = cfg.grid.upper if cfg.grid.upper is not None else env.action_high
    return build_grid(lower, upper, n_b)


def make_agent(cfg: ExperimentConfig, seed: int):
    env = make_env(cfg.env, seed)
    grid = make_grid(cfg, env)
    return DecQNAgent(cfg.agent, env.obs_dim, grid, seed=seed), env


def evaluate(agent: DecQNAgent, env, episodes: int, max_steps: int | None = None):
    """Greedy (epsilon = 0) episodes; returns mean and std of the undiscounted clean return."""
    returns = []
    for _ in range(episodes):
        obs = env.reset()
        total, steps = 0.0, 0
        while True:
            idx = agent.greedy(obs)
            obs, r, term, timeout = env.step(agent.action_values(idx))
            total += getattr(env, "clean_reward", r)
            steps += 1
            if term or timeout or (max_steps is not None and steps >= max_steps):
                break
        returns.append(total)
    return float(np.mean(returns)), float(np.std(returns))


@dataclass
class OccupancyTable:
    """Counts over (state, joint action) cells of a small discrete game."""

    n_states: int
    n_a: int
    n_b: int
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.counts = np.zeros((self.n_states,) + (self.n_b,) * self.n_a, dtype=np.int64)

    def add(self, state_id: int, indices) -> None:
        self.counts[(state_id,) + tuple(int(i) for i in indices)] += 1

    def snapshot(self, agent: DecQNAgent, state_obs: np.ndarray, env_step: int) -> dict:
        """Counts plus the twin-averaged composed Q of every cell."""
        t1, t2 = agent.utilities(state_obs)
        avg = 0.5 * (t1 + t2)
        cells = []
        for cell in np.ndindex(*self.counts.shape):
            s, idx = cell[0], np.array(cell[1:])
            if agent.cfg.enumerated_dqn:
                from decqn.agent import joint_index
                q = float(avg[s, 0, joint_index(idx, self.n_b)])
            else:
                q = float(compose_q(avg[s], idx, agent.cfg.aggregation))
            cells.append({"state": int(s), "action": idx.tolist(), "count": int(self.counts[cell]),
                          "mean_q": q})
        return {"env_step": env_step, "total": int(self.counts.sum()), "cells": cells}


def _discrete_states(cfg: ExperimentConfig):
    """(number of states, observation per state, obs -> state id) for occupancy logging."""
    if cfg.env.name == "two_step":
        obs = np.eye(3)
        return 3, obs, lambda o: int(np.argmax(o)) if np.any(o) else None
    if cfg.env.name == "matrix_1step":
        return 1, np.zeros((1, 4)), lambda o: 0
    return None


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def run_seed(cfg: ExperimentConfig, seed: int, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    agent, env = make_agent(cfg, seed)
    eval_env = make_env(cfg.env, seed + 100_003)
    grid = agent.grid
    oracle = env_oracle(cfg.env)
    disc = _discrete_states(cfg)
    occ = OccupancyTable(disc[0], grid.n_a, grid.n_b) if disc else None
    stages = set(cfg.occupancy_stages)
    t0 = time.perf_counter()

    metrics_f = open(out_dir / "metrics.csv", "w", newline="")
    timing_f = open(out_dir / "timing.csv", "w", newline="")
    jsonl_f = open(out_dir / "metrics.jsonl", "w") if cfg.jsonl else None
    writer = csv.writer(metrics_f, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    twriter = csv.writer(timing_f, lineterminator="\n")
    twriter.writerow(["env_step", "wall_time"])

    status, diagnostics = "ok", None
    last_return, ep_return = float("nan"), 0.0
    last_metrics = {"loss": float("nan"), "mean_td": float("nan"), "grad_norm": float("nan")}
    snapshots = []
    try:
        obs = env.reset()
        for step in range(1, cfg.total_steps + 1):
            idx = agent.act(obs)
            nxt, r, term, timeout = env.step(agent.action_values(idx))
            if occ is not None:
                occ.add(disc[2](obs), idx)
            agent.observe(Transition(obs, idx, r, nxt, term, timeout))
            ep_return += getattr(env, "clean_reward", r)
            if step % cfg.agent.learner_period == 0:
                m = agent.learner_step()
                if not m["skipped"]:
                    last_metrics = m
            if term or timeout:
                last_return, ep_return = ep_return, 0.0
                obs = env.reset()
            else:
                obs = nxt
            ev = None
            if step % cfg.eval_interval == 0:
                ev = evaluate(agent, eval_env, cfg.eval_episodes)
            if step % cfg.log_interval == 0 or ev is not None:
                row = [step, agent.learner_steps, last_return, ev[0] if ev else None, ev[1] if ev else None,
                       last_metrics["loss"], last_metrics["mean_td"], last_metrics["grad_norm"],
                       cfg.agent.epsilon]
                writer.writerow([_fmt(v) for v in row])
                twriter.writerow([step, f"{time.perf_counter() - t0:.3f}"])
                if jsonl_f:
                    clean = [None if isinstance(v, float) and math.isnan(v) else v for v in row]
                    jsonl_f.write(json.dumps(dict(zip(METRICS_HEADER, clean))) + "\n")
            if occ is not None and step in stages:
                snapshots.append(occ.snapshot(agent, disc[1], step))
    except (NumericError, FloatingPointError) as exc:
        status, diagnostics = "numeric_abort", f"{type(exc).__name__}: {exc} (env step {agent.env_steps})"
        log.error("seed %d aborted: %s", seed, diagnostics)
    finally:
        metrics_f.close()
        timing_f.close()
        if jsonl_f:
            jsonl_f.close()

    summary = {"seed": seed, "status": status, "diagnostics": diagnostics,
               "env_steps": agent.env_steps, "learner_steps": agent.learner_steps}
    if status == "ok":
        mean, std = evaluate(agent, eval_env, cfg.eval_episodes)
        summary.update(final_eval_mean=mean, final_eval_std=std)
        if oracle is not None:
            summary["oracle"] = oracle.to_dict()
            summary["matches_oracle"] = bool(np.isclose(mean, oracle.optimum, rtol=1e-9, atol=1e-9))
            summary["fraction_of_oracle"] = mean / oracle.optimum if oracle.optimum else None
        agent.save(out_dir / "final.ckpt")
        if occ is not None:
            snapshots.append(occ.snapshot(agent, disc[1], agent.env_steps))
    if snapshots:
        (out_dir / "occupancy.json").write_text(json.dumps(snapshots, indent=1))
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    summary["agent"] = agent
    return summary


def run_experiment(cfg: ExperimentConfig, seeds=None, root: Path | None = None):
    """Train every seed. Returns (exit code, list of per-seed summaries)."""
    root = output_root() if root is None else Path(root)
    base = root / cfg.output_dir
    base.mkdir(parents=True, exist_ok=True)
    (base / "config.yaml").write_text(dump_config(cfg))
    oracle = env_oracle(cfg.env)
    if oracle is not None:
        (base / "oracle.json").write_text(json.dumps(oracle.to_dict(), indent=1))
        log.info("oracle optimum %.6g via %s", oracle.optimum, oracle.path)
    results = []
    for seed in (cfg.seeds if seeds is None else seeds):
        res = run_seed(cfg, seed, base / f"seed_{seed}")
        log.info("seed %d: %s", seed, {k: v for k, v in res.items() if k not in ("agent", "oracle")})
        results.append(res)
    code = 0 if all(r["status"] == "ok" for r in results) else 2
    return code, results
