"""Machine-readable reports: output-layer scaling and the velocity probe."""
from __future__ import annotations

import csv
import io

import numpy as np

from decqn.agent import critic_param_count, decqn_width, dqn_width, memory_estimate
from decqn.envs.matrix import probe_sign_agreement, velocity_probe

SCALING_HEADER = ["n_a", "n_b", "decqn_width", "dqn_width", "decqn_params", "dqn_params",
                  "decqn_bytes", "dqn_bytes", "decqn_over_budget", "dqn_over_budget"]


def scaling_report(dims, bins, hidden: int = 500, obs_dim: int = 0, budget: int = 8 * 2 ** 30,
                   itemsize: int = 8) -> list[dict]:
    """Output width, parameter count and memory of decoupled vs enumerated heads.

    ``obs_dim=0`` leaves out the input layer, which both heads share. Python integers are
    used throughout so huge enumerated widths do not overflow.
    """
    rows = []
    for n_b in np.atleast_1d(bins):
        for n_a in np.atleast_1d(dims):
            n_a, n_b = int(n_a), int(n_b)
            dw, qw = decqn_width(n_a, n_b), dqn_width(n_a, n_b)
            db = memory_estimate(obs_dim, hidden, dw, itemsize)
            qb = memory_estimate(obs_dim, hidden, qw, itemsize)
            rows.append({
                "n_a": n_a, "n_b": n_b, "decqn_width": dw, "dqn_width": qw,
                "decqn_params": critic_param_count(obs_dim, hidden, dw),
                "dqn_params": critic_param_count(obs_dim, hidden, qw),
                "decqn_bytes": db, "dqn_bytes": qb,
                "decqn_over_budget": db > budget, "dqn_over_budget": qb > budget,
            })
    return rows


def rows_to_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def probe_report(agent, v_max: float = 1.0, points: int = 21, threshold: float = 0.2) -> dict:
    """Greedy joint actions over a (v_x, v_y) grid at the origin, plus x/y sign agreement."""
    grid = np.linspace(-v_max, v_max, points)
    table = velocity_probe(agent.greedy_batch, grid, grid)
    agreement, n = probe_sign_agreement(table, grid, grid, agent.grid.values, threshold)
    return {"vx": grid.tolist(), "vy": grid.tolist(), "actions": table.tolist(),
            "accel_x": agent.grid.values[0][table[..., 0]].tolist(),
            "accel_y": agent.grid.values[1][table[..., 1]].tolist(),
            "sign_agreement": agreement, "unambiguous_points": n, "threshold": threshold}
