"""Volume-overlap metric between two cones and run statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    ConvexPolytope,
    Plane,
    convex_hull_3d,
    intersect_polytopes,
    normalize,
    polytope_volume,
)
from .wrench import PolyhedralCone


class EdgeBehindPlane(ValueError):
    pass


@dataclass
class MetricConfig:
    height: float = 1.0  # truncation height along the ground-truth axis

    def __post_init__(self):
        if not self.height > 0:
            raise ValueError("truncation height must be positive")


def _edges(cone) -> np.ndarray:
    e = cone.edges if isinstance(cone, PolyhedralCone) else np.asarray(cone, dtype=float)
    return np.atleast_2d(e)


def truncate_cone(cone, axis, height: float = 1.0) -> ConvexPolytope:
    """Pyramid with apex at the origin and base on ``axis . x = height``."""
    axis = normalize(axis)
    e = _edges(cone)
    along = e @ axis
    if np.any(along <= 1e-12):
        raise EdgeBehindPlane("an edge does not reach the truncation plane")
    base = e * (height / along)[:, None]
    return convex_hull_3d(np.vstack([np.zeros(3), base]))


def metric_v(estimate, ground_truth, cfg: MetricConfig | None = None, axis=None) -> float:
    """Intersection over union of the two truncated cones."""
    cfg = cfg or MetricConfig()
    if axis is None:
        axis = ground_truth.axis if isinstance(ground_truth, PolyhedralCone) else \
            normalize(_edges(ground_truth).mean(axis=0))
    a = truncate_cone(estimate, axis, cfg.height)
    b = truncate_cone(ground_truth, axis, cfg.height)
    va, vb = polytope_volume(a), polytope_volume(b)
    vi = polytope_volume(intersect_polytopes(a, b))
    union = va + vb - vi
    if union <= 0:
        return 0.0
    return float(min(1.0, max(0.0, vi / union)))


@dataclass
class Summary:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def as_row(self) -> list:
        return [self.n, self.min, self.q1, self.median, self.q3, self.max]


SUMMARY_COLUMNS = ("n", "min", "q1", "median", "q3", "max")


def summarize(values) -> Summary:
    """Five-number summary with linearly interpolated quartiles."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("need at least one value")
    q = np.percentile(x, [0, 25, 50, 75, 100])
    return Summary(int(x.size), *map(float, q))


def iqr_overlap(a: Summary, b: Summary) -> bool:
    return a.q1 <= b.q3 and b.q1 <= a.q3
