"""Output width and memory of decoupled vs enumerated heads for 1..38 action dimensions.

    python scripts/scaling.py --bins 2 3 11 > scaling.csv
"""
import argparse
import sys

from decqn.harness.reports import SCALING_HEADER, rows_to_csv, scaling_report


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--max-dims", type=int, default=38)
    p.add_argument("--bins", type=int, nargs="+", default=[3])
    p.add_argument("--hidden", type=int, default=500)
    p.add_argument("--budget", type=int, default=8 * 2 ** 30, help="bytes")
    args = p.parse_args()
    rows = scaling_report(range(1, args.max_dims + 1), args.bins, hidden=args.hidden, budget=args.budget)
    sys.stdout.write(rows_to_csv(rows, SCALING_HEADER))


if __name__ == "__main__":
    main()
