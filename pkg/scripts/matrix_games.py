"""Coordination-game suites: two-step, penalty (1-step and point-mass) and climbing.

    python scripts/matrix_games.py two-step --steps 3000
    python scripts/matrix_games.py penalty --k -100 --pointmass-steps 100000
    python scripts/matrix_games.py climbing --steps 100000

Each suite prints a JSON summary and leaves per-seed runs under --out.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from decqn.harness import experiments as ex


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("game", choices=["two-step", "penalty", "climbing"])
    p.add_argument("--steps", type=int, default=None, help="env steps per seed")
    p.add_argument("--pointmass-steps", type=int, default=50_000)
    p.add_argument("--learner-period", type=int, default=2)
    p.add_argument("--k", type=float, default=-100.0, help="penalty for miscoordinated corners")
    p.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    p.add_argument("--out", type=Path, default=Path("runs/matrix_games"))
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    if args.game == "two-step":
        steps = args.steps or 10_000
        res = {f"eps_{e}": ex.two_step_suite(args.out, e, steps, args.seeds) for e in (0.5, 1.0)}
    elif args.game == "penalty":
        res = {"1step": ex.penalty_1step_suite(args.out, args.k, args.steps or 20_000, args.seeds),
               "pointmass": ex.pointmass_suite(args.out, "penalty", "action", args.pointmass_steps,
                                               args.seeds, k=args.k, learner_period=args.learner_period,
                                               probe=True)}
    else:
        steps = args.steps or args.pointmass_steps
        res = {}
        for mode in ("action", "state"):
            for opt in (False, True):
                res[f"{mode}_{'optimistic' if opt else 'standard'}"] = ex.pointmass_suite(
                    args.out, "climbing", mode, steps, args.seeds, optimistic=opt,
                    learner_period=args.learner_period)
    for name, r in res.items():
        print(f"{name}: mean return {np.mean(r['returns']):.2f}, oracle {r['oracle']}")
    (args.out / f"{args.game}.json").write_text(json.dumps(res, indent=2, default=float))


if __name__ == "__main__":
    main()
