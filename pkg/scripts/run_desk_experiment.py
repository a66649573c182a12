#!/usr/bin/env python3
"""Desk-scale routing experiment: 20 seeds, 5 robots, several target
counts and waiting times, all four algorithms. Writes report.csv,
summary.csv, and per-run traces under results/desk/.

Smaller and fully in-repo compared to road-map benchmarks, but the
same protocol: mean tree cost, mean path cost, certified lower bound,
and the worst per-part scale factor per grid cell.

    python scripts/run_desk_experiment.py [--full]

--full also sweeps the waiting-time grid at the largest target count.
"""

import argparse
import sys

from salb import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true", help="also sweep waiting times 10/30/60")
    parser.add_argument("--out", default="results/desk")
    parser.add_argument("--seeds", default="1:20")
    args = parser.parse_args()

    base = [
        "experiment",
        "--seeds", args.seeds,
        "--m", "5",
        "--n", "12,20,50",
        "--beta", "0",
        "--algo", "GREEDY,MMIN,MMIN_GREEDY,AUCTION_PATH",
        "--out", args.out,
        "--markdown",
    ]
    code = cli.main(base)
    if code != 0 or not args.full:
        return code
    waits = [
        "experiment",
        "--seeds", args.seeds,
        "--m", "5",
        "--n", "50",
        "--beta", "10,30,60",
        "--algo", "GREEDY,MMIN_GREEDY",
        "--out", args.out + "_waiting",
        "--markdown",
    ]
    return cli.main(waits)


if __name__ == "__main__":
    sys.exit(main())
