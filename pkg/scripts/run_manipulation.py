"""Pivot by -20 deg then slide 6 cm with the analytical, best and worst estimated cones.

Estimates the 10 cm / mu = 0.5 cell first, picks the best and worst runs by
the metric, runs the trials for each cone and plots the trajectories.

    python scripts/run_manipulation.py [--out-dir out/manipulation] [--trials 5]
"""
import argparse
import sys
from pathlib import Path

from frictioncone import experiments as ex
from frictioncone.cli import _estimate_doc, _run_name, main
from frictioncone.config import load_scenario
from frictioncone.io import write_estimate


def run(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="out/manipulation")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    out = Path(args.out_dir)

    sc = load_scenario(None, "grid")
    sc.seed = args.seed
    m = sc.manipulation
    sc.lengths, sc.mus, sc.slopes_deg = [m.length], [m.mu], [m.slope_deg]
    runs = ex.run_sweep(sc)
    cones = ["analytical"]
    for tag, r in (("best", ex.best_run(runs)), ("worst", ex.best_run(runs, worst=True))):
        path = out / f"{tag}.json"
        write_estimate(path, _estimate_doc(r, sc))
        print(f"{tag}: {_run_name(r)} v={r.v_final:.4f}")
        cones.append(str(path))

    rc = 0
    for cone in cones:
        rc |= main(["manipulate", "--cone", cone, "--trials", str(args.trials),
                    "--seed", str(args.seed), "--out-dir", str(out)])
    for name in ("analytical", "best", "worst"):
        files = sorted(str(f) for f in out.glob(f"trajectory_{name}_*.csv"))
        if files:
            main(["plot", *files, "--name", f"trajectories_{name}", "--out-dir", str(out)])
    return rc


if __name__ == "__main__":
    sys.exit(run())
