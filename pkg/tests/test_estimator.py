import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frictioncone.estimator import (
    EstimateState,
    EstimatorConfig,
    LabelConflict,
    TooFewEdges,
    base_polygon,
    estimate_cone,
    explore,
    finalize,
    gamma_schedule,
    init_samples,
    label_faces,
    labelled_cone,
    simplify_rays,
    transform_cone,
    update_estimate,
)
from frictioncone.geometry import cross2, normalize, plane_basis, polygon_area_3d
from frictioncone.sim import SimConfig, Simulator, Surface, ground_truth_cone, resting_state
from frictioncone.wrench import Mode, PolyhedralCone, coplanarity_normal
from oracles import in_cone_lp, reference_edges

EPS = math.radians(2.0)


def _system(length=0.1, mu=0.5, slope_deg=0.0):
    s = Surface(math.radians(slope_deg), (0.0, 0.0), mu)
    return Simulator(resting_state(length, 0.1, s), s, SimConfig(), press=5.0)


def _truth(system):
    return ground_truth_cone(system.state, system.surface, system.cfg)


def _angle_to_hull(x, rays):
    return PolyhedralCone(np.asarray(rays)).angle_outside(x)


# --- samples and hull updates -------------------------------------------------

def test_zero_sigma_samples_collapse_to_one():
    system = _system()
    s = init_samples(system, n_init=5, sigma=0.0, rng=0)
    assert np.allclose(s, s[0])
    W = s[:1]
    for w in s[1:]:
        W = update_estimate(W, w)
    assert len(W) == 1


def test_initial_samples_are_feasible_and_span_3d():
    system = _system()
    gt = _truth(system)
    s = init_samples(system, n_init=8, sigma=0.5, rng=1)
    assert all(in_cone_lp(w, gt.edges) for w in s)
    assert np.linalg.matrix_rank(s, tol=1e-6) == 3


def test_interior_sample_returns_same_object():
    W = np.eye(3) * 2.0
    assert update_estimate(W, [0.1, 0.1, 0.1]) is W


def test_outside_sample_grows_to_four_edges():
    W = np.eye(3)
    W2 = update_estimate(W, [-1.0, 0.5, 0.5])
    assert len(W2) == 4


def test_planar_samples_keep_the_extreme_rays():
    W = np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    W2 = update_estimate(W, [1.0, 0.3, 0.0])
    assert len(W2) == 2
    assert {tuple(normalize(w).round(9)) for w in W2} == {
        tuple(normalize(w).round(9)) for w in W}


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_estimate_contains_every_processed_sample(seed):
    rng = np.random.default_rng(seed)
    base = np.array([0.0, 0.0, 1.0])
    stream = base + 0.6 * rng.normal(size=(25, 3))
    stream[:, 2] = np.abs(stream[:, 2]) + 0.2
    W = stream[:1]
    old_rays = []
    for w in stream[1:]:
        prev = W
        W = update_estimate(W, w)
        if len(prev) >= 3:
            old_rays.append(prev)
    if len(W) < 3:
        return
    for w in stream:
        assert _angle_to_hull(w, W) <= EPS + 1e-9
    # monotone growth: every earlier estimate sits inside the later one
    for prev in old_rays:
        for r in prev:
            assert _angle_to_hull(r, W) <= EPS + 1e-9


def test_simplify_drops_near_duplicates_and_coplanar_rays():
    r = np.array([[1, 0, 1], [0, 1, 1], [-1, 0, 1], [0, -1, 1]], dtype=float)
    dup = normalize(r[0]) + np.array([0, 0.001, 0])
    mid = 0.5 * (normalize(r[0]) + normalize(r[1]))
    out = simplify_rays(np.vstack([r, dup, mid]), EPS)
    assert len(out) == 4
    assert min(np.linalg.norm(out - mid, axis=1)) > 1e-9


# --- base polygon ---------------------------------------------------------------

def test_symmetric_cone_plane_is_its_axis():
    r = np.array([[1, 0, 1], [0, 1, 1], [-1, 0, 1], [0, -1, 1]], dtype=float)
    P = r / np.linalg.norm(r, axis=1, keepdims=True)
    plane, V, E = base_polygon(P, r, rng=0)
    assert np.allclose(plane.normal, [0, 0, 1])
    assert len(V) == len(P) == len(E)
    assert np.max(np.abs(plane.signed_distance(V))) < 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_base_polygon_is_convex_and_closed(seed):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, size=int(rng.integers(3, 9))))
    if np.min(np.diff(np.append(ang, ang[0] + 2 * np.pi))) < 0.05:
        return
    P = np.column_stack([0.5 * np.cos(ang), 0.5 * np.sin(ang), np.ones_like(ang)])
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    plane, V, E = base_polygon(P, P, rng=seed)
    u, v = plane_basis(plane.normal)
    crosses = []
    for (i, j), (_, k) in zip(E, E[1:] + E[:1]):
        a, b = V[j] - V[i], V[k] - V[j]
        crosses.append(cross2([a @ u, a @ v], [b @ u, b @ v]))
    assert all(c > 0 for c in crosses) or all(c < 0 for c in crosses)
    assert [e[1] for e in E] == [e[0] for e in E[1:]] + [E[0][0]]


def test_gamma_schedule_starts_at_zero_and_doubles():
    cfg = EstimatorConfig(gamma_rel=0.1, max_gamma_steps=4)
    assert list(gamma_schedule(10.0, cfg)) == [0.0, 1.0, 2.0, 4.0, 8.0]


# --- exploration ------------------------------------------------------------------

def test_ground_truth_is_a_fixed_point():
    system = _system()
    gt = _truth(system)
    W = gt.edges * np.linalg.norm(system.initial_reaction)
    state = explore(system, EstimateState(W), EstimatorConfig(), rng=0)
    assert len(state.W) == 4
    assert np.allclose(np.sort(state.P_bar, axis=0), np.sort(gt.edges, axis=0))


def test_explored_directions_are_deduplicated():
    state = EstimateState(np.eye(3))
    state.plane, state.V, state.E = base_polygon(state.P_bar, state.W, rng=0)
    d = normalize(state.edge_vector(0))
    state.explored.append(normalize(d + np.array([0.0, 0.0, 0.01])))
    assert state.is_explored(0, math.radians(3.0))
    assert not state.is_explored(1, math.radians(3.0))


@pytest.fixture(scope="module")
def estimated():
    system = _system()
    start = system.state
    state = estimate_cone(system, EstimatorConfig(seed=4))
    system.reset(start)
    return system, state


def test_estimate_is_sound(estimated):
    system, state = estimated
    gt = _truth(system)
    assert max(gt.angle_outside(w) for w in state.W) <= math.radians(3.0)
    assert np.max(np.abs(state.plane.signed_distance(state.V))) < 1e-9


def test_estimation_is_deterministic(estimated):
    _, state = estimated
    again = estimate_cone(_system(), EstimatorConfig(seed=4))
    assert np.array_equal(again.W, state.W)


# --- finalisation -----------------------------------------------------------------

def _state(P):
    return EstimateState(np.asarray(P, dtype=float))


def test_finalize_four_edges_is_identity():
    r = np.array([[1, 0, 1], [0, 1, 1], [-1, 0, 1], [0, -1, 1]], dtype=float)
    cone = finalize(_state(r))
    assert {tuple(e.round(9)) for e in cone.edges} == {
        tuple(normalize(e).round(9)) for e in r}


def test_finalize_drops_the_redundant_edge_and_maximises_area():
    r = np.array([[1, 0, 1], [0, 1, 1], [-1, 0, 1], [0, -1, 1]], dtype=float)
    extra = normalize(0.5 * (normalize(r[0]) + normalize(r[1]))) * 1.01
    P = np.vstack([r / np.linalg.norm(r, axis=1, keepdims=True), normalize(extra)])
    cone = finalize(_state(P))
    assert min(np.linalg.norm(cone.edges - normalize(extra), axis=1)) > 1e-6
    # exhaustive oracle over every quadruple, on the same base plane
    n = normalize(P.mean(axis=0))
    V = P / (P @ n)[:, None]

    def area(q):
        pts = V[list(q)]
        c = pts.mean(axis=0)
        u, v = plane_basis(n)
        order = np.argsort(np.arctan2((pts - c) @ v, (pts - c) @ u))
        return polygon_area_3d(pts[order], n)

    chosen = [int(np.argmin(np.linalg.norm(P - e, axis=1))) for e in cone.edges]
    assert area(chosen) >= max(area(q) for q in itertools.combinations(range(5), 4)) - 1e-12


def test_finalize_needs_four_edges():
    with pytest.raises(TooFewEdges):
        finalize(_state(np.eye(3)))


# --- labelling ----------------------------------------------------------------------

@pytest.mark.parametrize("length,mu", [(0.05, 0.5), (0.1, 0.6), (0.3, 0.7)])
def test_labels_of_analytical_cone(length, mu):
    system = _system(length, mu)
    gt = _truth(system)
    start = system.state
    unlabelled = PolyhedralCone(gt.edges)
    cone = label_faces(system, unlabelled)
    assert cone.face_labels == gt.face_labels
    assert system.state.pose == start.pose


def test_labelled_cone_rejects_adjacent_pivot_faces():
    r = np.array([[1, 0, 1], [0, 1, 1], [-1, 0, 1], [0, -1, 1]], dtype=float)
    with pytest.raises(LabelConflict):
        labelled_cone(r, [Mode.CW, Mode.CCW, Mode.SL, Mode.SR])
    cone = labelled_cone(r, [Mode.CW, Mode.SL, Mode.CCW, Mode.SR])
    cw, ccw = cone.faces[0], cone.faces[2]
    assert not set(cw) & set(ccw)
    assert sorted(m.value for m in cone.face_labels) == ["ccw", "cw", "sl", "sr"]


# --- transformation ---------------------------------------------------------------

def test_transform_zero_is_identity():
    system = _system()
    gt = _truth(system)
    assert np.array_equal(transform_cone(gt, 0.0).edges, gt.edges)


@pytest.mark.parametrize("pivot", [Mode.CW, Mode.CCW])
def test_transform_matches_recomputed_edges(pivot):
    system = _system()
    gt = _truth(system)
    L = system.length_scale
    pts = [np.array([-0.05, -0.05]), np.array([0.05, -0.05])]
    face = gt.face_index(pivot)
    i, j = gt.faces[face]
    k = gt.edge_contact[i]
    m_hat = coplanarity_normal(gt.edges[i], gt.edges[j])
    for deg in range(0, 46):
        phi = math.radians(deg) * (-1 if pivot is Mode.CW else 1)
        moved = transform_cone(gt, phi, pivot, m_hat)
        ref = reference_edges(pts, [0.0, 1.0], 0.5, phi, L)
        want = np.array([ref[(k, "l")], ref[(k, "r")]])
        for e in (moved.edges[i], moved.edges[j]):
            assert abs(np.linalg.norm(e) - 1) < 1e-9
            assert abs(m_hat @ e) <= 1e-9
            err = np.min(np.arccos(np.clip(want @ e, -1, 1)))
            assert err <= 1e-7
