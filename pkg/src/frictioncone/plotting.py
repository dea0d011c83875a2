"""Static SVG figures from the CSV outputs (box plots and trajectories)."""
from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, atomic_write, read_csv  # noqa: E402

# fixed ids and no timestamp keep the SVG bytes reproducible
matplotlib.rcParams["svg.hashsalt"] = "frictioncone"
matplotlib.rcParams["svg.fonttype"] = "none"


def _save(fig, path):
    import io

    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def _col(header, name):
    try:
        return header.index(name)
    except ValueError:
        raise SchemaError(f"missing column {name!r}") from None


def detect_kind(header) -> str:
    if {"v", "length", "mu", "slope_deg"} <= set(header):
        return "metric"
    if {"t", "phi", "target_mode", "c0x"} <= set(header):
        return "trajectory"
    raise SchemaError(f"unrecognised CSV header {header}")


def plot_metric(header, rows, path, title: str = ""):
    """One box per (length, mu), grouped by slope when several are present."""
    iL, imu, isl, iv = (_col(header, c) for c in ("length", "mu", "slope_deg", "v"))
    groups = defaultdict(list)
    for r in rows:
        groups[(float(r[iL]), float(r[imu]), float(r[isl]))].append(float(r[iv]))
    keys = sorted(groups)
    slopes = sorted({k[2] for k in keys})
    labels = [f"{k[0] * 100:g} cm, mu {k[1]:g}" + (f", {k[2]:g} deg" if len(slopes) > 1 else "")
              for k in keys]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(keys) + 1.5), 3.6))
    ax.boxplot([groups[k] for k in keys], whis=(0, 100))
    ax.set_xticks(range(1, len(keys) + 1), labels, rotation=30, ha="right")
    ax.set_ylabel("v")
    ax.set_ylim(0.0, 1.05)
    ax.grid(axis="y", alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def normalized_time(modes) -> np.ndarray:
    """Each run of equal target modes is mapped onto one unit of time."""
    modes = list(modes)
    out = np.zeros(len(modes))
    start, phase = 0, 0
    for i in range(1, len(modes) + 1):
        if i == len(modes) or modes[i] != modes[start]:
            n = i - start
            out[start:i] = phase + (np.arange(n) + 1.0) / n
            start, phase = i, phase + 1
    return out


def tracked_contact(header, rows) -> np.ndarray:
    """x of the contact that is still touching at the end, followed backwards."""
    cols = [_col(header, c) for c in ("c0x", "c0y", "c1x", "c1y")]
    pts = np.array([[float(r[c]) for c in cols] for r in rows]).reshape(len(rows), 2, 2)
    out = np.zeros(len(rows))
    ref = None
    for k in range(len(rows) - 1, -1, -1):
        cand = [p for p in pts[k] if np.all(np.isfinite(p))]
        if not cand:
            out[k] = np.nan if ref is None else ref[0]
            continue
        if ref is None:
            ref = cand[0]
        else:
            ref = min(cand, key=lambda p: float(np.linalg.norm(p - ref)))
        out[k] = ref[0]
    return out


def plot_trajectories(files, path, title: str = ""):
    """Angle and contact position against normalised time, one line per file."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.0, 4.6), sharex=True)
    phases = 0
    for f in files:
        header, rows = read_csv(f)
        if detect_kind(header) != "trajectory":
            raise SchemaError(f"{f}: not a trajectory CSV")
        iphi, im = _col(header, "phi"), _col(header, "target_mode")
        modes = [r[im] for r in rows]
        tn = normalized_time(modes)
        phases = max(phases, int(math.ceil(tn[-1])) if len(tn) else 0)
        phi = np.degrees([float(r[iphi]) for r in rows])
        cx = tracked_contact(header, rows) * 100.0
        name = Path(f).stem
        ax1.plot(tn, phi, lw=1.0, label=name)
        ax2.plot(tn, cx - cx[0], lw=1.0, label=name)
    ax1.set_ylabel("angle [deg]")
    ax2.set_ylabel("contact x [cm]")
    ax2.set_xlabel("normalised time")
    ticks = list(range(phases + 1))
    ax2.set_xticks(ticks, [f"t{k}" for k in ticks])
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    if len(files) <= 6:
        ax1.legend(fontsize=7)
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    _save(fig, path)
