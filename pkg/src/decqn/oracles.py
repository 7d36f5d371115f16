"""Exhaustive ground truth for the small games: value iteration, matrix optima, additive fits."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from decqn.envs.matrix import TWO_STEP_PAYOFFS, two_step_transition


@dataclass
class OracleResult:
    optimum: float
    policy: dict
    path: list

    def to_dict(self) -> dict:
        return {"optimum": self.optimum, "policy": {str(k): list(v) for k, v in self.policy.items()},
                "path": [list(p) for p in self.path]}


def two_step_value_iteration(payoffs=TWO_STEP_PAYOFFS, gamma: float = 1.0, tol: float = 1e-12) -> OracleResult:
    """Value iteration over states {1,2,3} and all 2x2 joint actions; returns undiscounted optimum."""
    joint = list(itertools.product(range(2), range(2)))
    v = {1: 0.0, 2: 0.0, 3: 0.0}
    while True:
        new = {}
        for s in v:
            best = -np.inf
            for a1, a2 in joint:
                nxt, r, term = two_step_transition(s, a1, a2, payoffs)
                best = max(best, r + (0.0 if term else gamma * v[nxt]))
            new[s] = best
        delta = max(abs(new[s] - v[s]) for s in v)
        v = new
        if delta < tol:
            break
    policy = {}
    for s in v:
        q = []
        for a1, a2 in joint:
            nxt, r, term = two_step_transition(s, a1, a2, payoffs)
            q.append(r + (0.0 if term else gamma * v[nxt]))
        policy[s] = joint[int(np.argmax(q))]
    # roll out the greedy policy for the undiscounted return
    s, ret, path = 1, 0.0, []
    while s is not None:
        a = policy[s]
        path.append((s,) + a)
        s, r, _ = two_step_transition(s, *a, payoffs)
        ret += r
    return OracleResult(ret, policy, path)


def matrix_optimum(matrix) -> OracleResult:
    m = np.asarray(matrix, dtype=np.float64)
    best = float(m.max())
    cells = [tuple(int(i) for i in c) for c in np.argwhere(m == best)]
    return OracleResult(best, {0: cells[0]}, cells)


def pointmass_action_optimum(matrix, horizon: int, reward_scale: float) -> OracleResult:
    """Action rewards do not depend on the state, so repeat the best cell every step."""
    res = matrix_optimum(matrix)
    return OracleResult(res.optimum * horizon * reward_scale, res.policy, res.path)


def _axis_reachable_zones(horizon, dt, pos_bound, vel_bound, threshold, accel=1.0):
    """Zones one axis can occupy after each step, by exhaustive search on the motion lattice.

    With accelerations in {-a, 0, +a}, velocity moves in units of a*dt and position in
    units of a*dt*dt, so from rest the reachable states live on an integer lattice.
    """
    dv = accel * dt
    dx = dv * dt
    vmax = int(round(vel_bound / dv))
    xmax = int(round(pos_bound / dx))
    if not (np.isclose(vmax * dv, vel_bound) and np.isclose(xmax * dx, pos_bound)):
        raise ValueError("bounds are not on the motion lattice; oracle not applicable")
    reach = np.zeros((2 * xmax + 1, 2 * vmax + 1), dtype=bool)
    reach[xmax, vmax] = True
    xs = (np.arange(2 * xmax + 1) - xmax) * dx
    zone = np.where(xs < -threshold - 1e-12, 0, np.where(xs > threshold + 1e-12, 2, 1))
    zones = np.zeros((horizon, 3), dtype=bool)
    for t in range(horizon):
        new = np.zeros_like(reach)
        xi, vi = np.nonzero(reach)
        for da in (-1, 0, 1):
            v2 = np.clip(vi - vmax + da, -vmax, vmax)
            x2 = np.clip(xi - xmax + v2, -xmax, xmax)
            new[x2 + xmax, v2 + vmax] = True
        reach = new
        for z in range(3):
            zones[t, z] = reach[zone == z].any()
    return zones


def pointmass_state_optimum(matrix, horizon: int, reward_scale: float, dt: float, pos_bound: float,
                            vel_bound: float, threshold: float) -> OracleResult:
    """Optimal return for zone rewards.

    Upper bound: per step, the best cell among zones reachable by each axis. Lower bound: a
    witness that drives both axes at full acceleration toward the best cell's zones and holds.
    The two agree for the configured games; a mismatch raises.
    """
    m = np.asarray(matrix, dtype=np.float64)
    zones = _axis_reachable_zones(horizon, dt, pos_bound, vel_bound, threshold)
    upper = 0.0
    for t in range(horizon):
        ok = np.where(zones[t])[0]
        upper += m[np.ix_(ok, ok)].max()
    best_lower, best_cell = -np.inf, None
    for zx, zy in itertools.product(range(3), range(3)):
        lower = _witness_return(m, (zx, zy), horizon, dt, pos_bound, vel_bound, threshold)
        if lower > best_lower:
            best_lower, best_cell = lower, (zx, zy)
    if not np.isclose(upper, best_lower):
        raise ValueError(f"state-reward oracle bounds disagree: {best_lower} < {upper}")
    return OracleResult(upper * reward_scale, {0: best_cell}, [best_cell])


def _witness_return(m, cell, horizon, dt, pos_bound, vel_bound, threshold):
    from decqn.envs.matrix import PointMassState, pointmass_step, zone_of

    direction = np.array([{0: -1.0, 1: 0.0, 2: 1.0}[z] for z in cell])
    s = PointMassState(np.zeros(2), np.zeros(2))
    ret = 0.0
    for _ in range(horizon):
        s = pointmass_step(s, direction, dt, pos_bound, vel_bound)
        zx, zy = zone_of(s.position, threshold)
        ret += m[zx, zy]
    return ret


def additive_fit(table, weights=None):
    """Least-squares fit T(a) ~ c + sum_j t_j(a_j) over the joint grid.

    Returns (fitted table, residual root-mean-square). ``weights`` optionally weight the
    squared errors per joint cell.
    """
    t = np.asarray(table, dtype=np.float64)
    dims = t.shape
    cells = list(itertools.product(*[range(d) for d in dims]))
    cols = 1 + sum(dims)
    x = np.zeros((len(cells), cols))
    for r, c in enumerate(cells):
        x[r, 0] = 1.0
        off = 1
        for j, k in enumerate(c):
            x[r, off + k] = 1.0
            off += dims[j]
    y = np.array([t[c] for c in cells])
    sw = np.ones(len(cells)) if weights is None else np.sqrt(np.asarray(weights, dtype=np.float64).ravel())
    coef, *_ = np.linalg.lstsq(x * sw[:, None], y * sw, rcond=None)
    fit = (x @ coef).reshape(dims)
    resid = float(np.sqrt(np.mean((fit - t) ** 2)))
    return fit, resid
