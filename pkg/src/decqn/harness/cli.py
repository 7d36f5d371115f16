"""Command line entry point: ``decqn {run,eval,scaling-report,probe-velocity}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from decqn.config import SchemaError, load_config
from decqn.harness.reports import SCALING_HEADER, probe_report, rows_to_csv, scaling_report
from decqn.harness.runner import evaluate, run_experiment
from decqn.numeric_core import ConfigurationError


def _load(args):
    return load_config(args.config, args.override)


def cmd_run(args) -> int:
    cfg = _load(args)
    seeds = [args.seed] if args.seed is not None else None
    code, results = run_experiment(cfg, seeds)
    for r in results:
        print(json.dumps({k: v for k, v in r.items() if k not in ("agent", "oracle")}, sort_keys=True))
    return code


def cmd_eval(args) -> int:
    from decqn.agent import DecQNAgent
    from decqn.envs import make_env

    cfg = _load(args)
    agent = DecQNAgent.load(args.checkpoint)
    mean, std = evaluate(agent, make_env(cfg.env, args.env_seed), args.episodes or cfg.eval_episodes)
    print(json.dumps({"eval_mean": mean, "eval_std": std}))
    return 0


def cmd_scaling(args) -> int:
    rows = scaling_report(range(1, args.max_dims + 1), args.bins, hidden=args.hidden,
                          obs_dim=args.obs_dim, budget=args.budget, itemsize=args.itemsize)
    sys.stdout.write(rows_to_csv(rows, SCALING_HEADER))
    return 0


def cmd_probe(args) -> int:
    from decqn.agent import DecQNAgent

    _load(args)  # validates the config the checkpoint was trained with
    agent = DecQNAgent.load(args.checkpoint)
    report = probe_report(agent, v_max=args.v_max, points=args.points, threshold=args.threshold)
    text = json.dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decqn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_overrides(sp):
        sp.add_argument("--override", "-o", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config override, e.g. agent.lr=3e-4 (repeatable)")

    r = sub.add_parser("run", help="train every configured seed")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    with_overrides(r)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("config")
    e.add_argument("--episodes", type=int)
    e.add_argument("--env-seed", type=int, default=12345)
    with_overrides(e)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("scaling-report", help="decoupled vs enumerated output-layer sizes")
    s.add_argument("--max-dims", type=int, default=38)
    s.add_argument("--bins", type=int, nargs="+", default=[3])
    s.add_argument("--budget", type=int, default=8 * 2 ** 30, help="bytes")
    s.add_argument("--hidden", type=int, default=500)
    s.add_argument("--obs-dim", type=int, default=0)
    s.add_argument("--itemsize", type=int, default=8)
    s.set_defaults(func=cmd_scaling)

    v = sub.add_parser("probe-velocity", help="greedy actions over a velocity grid (point-mass games)")
    v.add_argument("checkpoint")
    v.add_argument("config")
    v.add_argument("--v-max", type=float, default=1.0)
    v.add_argument("--points", type=int, default=21)
    v.add_argument("--threshold", type=float, default=0.2)
    v.add_argument("--out")
    with_overrides(v)
    v.set_defaults(func=cmd_probe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SchemaError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
