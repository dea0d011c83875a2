import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frictioncone.evaluation import (
    EdgeBehindPlane,
    MetricConfig,
    iqr_overlap,
    metric_v,
    summarize,
    truncate_cone,
)
from frictioncone.geometry import Plane, normalize, polytope_volume, rot2
from frictioncone.sim import SimConfig, Surface, ground_truth_cone, resting_state
from frictioncone.wrench import PolyhedralCone
from oracles import cone_membership, mc_volume

SQUARE = np.array([[1, 0, 1], [0, 1, 1], [-1, 0, 1], [0, -1, 1]], dtype=float)
Z = np.array([0.0, 0.0, 1.0])


def _cone(length=0.1, mu=0.5):
    s = Surface(0.0, (0.0, 0.0), mu)
    return ground_truth_cone(resting_state(length, 0.1, s), s, SimConfig())


def _tilt_towards(edges, axis, deg):
    """Rotate each edge by ``deg`` towards ``axis`` in the plane they span."""
    out = []
    for e in edges:
        e = normalize(e)
        perp = normalize(axis - (axis @ e) * e)
        a = math.radians(deg)
        out.append(math.cos(a) * e + math.sin(a) * perp)
    return np.array(out)


def test_pyramid_volume_is_a_third_of_base():
    p = truncate_cone(SQUARE, Z, 1.0)
    # base is the square with corners (+-1, 0), (0, +-1): area 2
    assert math.isclose(polytope_volume(p), 2.0 / 3.0, rel_tol=1e-12)
    p2 = truncate_cone(SQUARE, Z, 2.0)
    assert math.isclose(polytope_volume(p2), 8 * polytope_volume(p), rel_tol=1e-12)


def test_truncated_vertices_lie_on_their_rays():
    cone = _cone()
    p = truncate_cone(cone, cone.axis, 1.0)
    plane = Plane(cone.axis, cone.axis)
    base = [v for v in p.vertices if np.linalg.norm(v) > 1e-12]
    assert len(base) == cone.n_edges
    for v in base:
        assert abs(plane.signed_distance(v)) < 1e-9
        assert min(np.linalg.norm(np.cross(normalize(v), e)) for e in cone.edges) < 1e-9


def test_edge_behind_plane():
    with pytest.raises(EdgeBehindPlane):
        truncate_cone(np.vstack([SQUARE, [0, 0, -1]]), Z, 1.0)
    with pytest.raises(ValueError):
        MetricConfig(height=0.0)


def test_identical_and_disjoint():
    cone = _cone()
    assert abs(metric_v(cone, cone) - 1.0) <= 1e-9
    a = SQUARE * [0.1, 0.1, 1] + [0.5, 0, 0]
    b = SQUARE * [0.1, 0.1, 1] - [0.5, 0, 0]
    assert metric_v(a, b, axis=Z) == 0.0


def test_tilted_estimate_matches_monte_carlo():
    gt = _cone()
    axis = gt.axis
    est = _tilt_towards(gt.edges, axis, 5.0)
    v = metric_v(est, gt)
    inside_gt = cone_membership(gt.edges, axis, 1.0)
    inside_est = cone_membership(est, axis, 1.0)
    verts = truncate_cone(gt, axis, 1.0).vertices
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    v_gt, _ = mc_volume(inside_gt, lo, hi, seed=1)
    v_both, _ = mc_volume(lambda x: inside_gt(x) & inside_est(x), lo, hi, seed=1)
    # the tilted cone lies inside the ground truth, so the ratio is a proportion
    p = v_both / v_gt
    n_hits = v_gt / float(np.prod(hi - lo)) * 1_000_000
    sd = math.sqrt(p * (1 - p) / n_hits)
    assert abs(v - p) <= 3 * sd
    assert 0.0 < v < 1.0


@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_metric_properties(seed, h):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, 5))
    a = np.column_stack([rng.uniform(0.2, 1, 5) * np.cos(ang),
                         rng.uniform(0.2, 1, 5) * np.sin(ang), np.ones(5)])
    b = a.copy()
    b[:, :2] = (rot2(rng.uniform(-0.5, 0.5)) @ a[:, :2].T).T * rng.uniform(0.5, 1.5)
    v = metric_v(a, b, axis=Z)
    assert 0.0 <= v <= 1.0
    assert math.isclose(v, metric_v(b, a, axis=Z), rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(v, metric_v(a, b, MetricConfig(h), axis=Z), rel_tol=1e-9, abs_tol=1e-12)
    assert abs(metric_v(a, a, axis=Z) - 1.0) <= 1e-9


def test_metric_accepts_cone_or_rays():
    cone = _cone()
    assert metric_v(cone.edges * 3.0, cone) == pytest.approx(1.0, abs=1e-9)
    assert metric_v(PolyhedralCone(cone.edges), cone) == pytest.approx(1.0, abs=1e-9)


def test_summary_examples():
    s = summarize([0.7])
    assert s.as_row() == [1, 0.7, 0.7, 0.7, 0.7, 0.7]
    assert summarize([0.0, 1.0]).median == 0.5
    with pytest.raises(ValueError):
        summarize([])


def _sorted_quantile(x, q):
    x = sorted(x)
    pos = q * (len(x) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(x) - 1)
    return x[lo] + (pos - lo) * (x[hi] - x[lo])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_summary_matches_sort(values):
    s = summarize(values)
    assert s.min == min(values) and s.max == max(values)
    for q, got in ((0.25, s.q1), (0.5, s.median), (0.75, s.q3)):
        assert math.isclose(got, _sorted_quantile(values, q), rel_tol=1e-12, abs_tol=1e-12)


def test_iqr_overlap():
    a, b, c = summarize([0, 1, 2, 3]), summarize([1, 2, 3, 4]), summarize([10, 11])
    assert iqr_overlap(a, b) and iqr_overlap(b, a)
    assert not iqr_overlap(a, c)
