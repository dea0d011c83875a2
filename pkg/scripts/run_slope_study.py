"""Estimation on inclined surfaces (30 cm, mu = 0.3, slopes 0/30/60/90 deg).

    python scripts/run_slope_study.py [--out-dir out/slope] [--jobs 4]
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from run_sweep import run  # noqa: E402

if __name__ == "__main__":
    sys.exit(run(preset="slope", default_out="out/slope"))
