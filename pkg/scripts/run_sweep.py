"""Estimation sweep over the length x mu grid, then box plots of the metric.

    python scripts/run_sweep.py [--out-dir out/grid] [--jobs 4] [--reps 10]
"""
import argparse
import sys
from pathlib import Path

from frictioncone.cli import main


def run(argv=None, preset="grid", default_out="out/grid"):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default=default_out)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    args = p.parse_args(argv)
    common = ["--preset", preset, "--out-dir", args.out_dir]
    if args.seed is not None:
        common += ["--seed", str(args.seed)]
    extra = ["--jobs", str(args.jobs)] + (["--reps", str(args.reps)] if args.reps else [])
    rc = main(["sweep", *common, *extra])
    if rc == 0:
        rc = main(["plot", str(Path(args.out_dir) / "metrics.csv"), *common])
    return rc


if __name__ == "__main__":
    sys.exit(run())
