"""Cartpole swingup suites: DecQN vs enumerated DQN, component ablations, observation noise.

    python scripts/cartpole.py ablations --steps 30000
    python scripts/cartpole.py noise --sigma 0.1
    python scripts/cartpole.py compare --hidden 500 --steps 300000 --learner-period 1

Defaults are sized for one CPU core (hidden 64, float32, a learner step every 2 env steps).
"""
import argparse
import json
from pathlib import Path

import numpy as np

from decqn.harness import experiments as ex


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("suite", choices=["compare", "ablations", "noise"])
    p.add_argument("--steps", type=int, default=30_000)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--dtype", default="float32", choices=["float32", "float64"])
    p.add_argument("--learner-period", type=int, default=2)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    p.add_argument("--out", type=Path, default=Path("runs/cartpole"))
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    kw = dict(hidden=args.hidden, dtype=args.dtype, learner_period=args.learner_period)

    if args.suite == "compare":
        sweep = {"lr_3e-4": {"lr": 3e-4}, "n_step_1": {"n_step": 1}}
        res = ex.cartpole_comparison_suite(args.out, args.steps, args.seeds, sweep, **kw)
        print(f"best reference {res['best_reference']:.1f}")
    elif args.suite == "ablations":
        res = ex.ablation_suite(args.out, args.steps, args.seeds, **kw)
    else:
        res = ex.noise_suite(args.out, args.steps, args.seeds, sigma=args.sigma, **kw)
        print(f"degradation factor {res['degradation_factor']:.3f}")
    for name, r in res.items():
        if isinstance(r, dict):
            print(f"{name}: mean return {np.mean(r['returns']):.1f} over {len(r['returns'])} seeds")
    (args.out / f"{args.suite}.json").write_text(json.dumps(res, indent=2, default=float))


if __name__ == "__main__":
    main()
