import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from frictioncone.geometry import normalize
from frictioncone.sim import (
    BodyState,
    ConfigError,
    Penetration,
    SimConfig,
    Simulator,
    Surface,
    apply_command,
    detect_contacts,
    gravity_wrench,
    ground_truth_cone,
    has_moved,
    resting_state,
)
from frictioncone.wrench import ContactSeparation, Mode
from oracles import in_cone_lp, reference_mode

FLAT = Surface(0.0, (0.0, 0.0), 0.5)


def _body(length=0.1, surface=FLAT):
    return resting_state(length, 0.1, surface)


def _press(rng, scale=3.0):
    """Random command biased into the surface (pulling away ends contact)."""
    return rng.normal(size=3) * scale + np.array([0.0, -2.0 * scale, 0.0])


def _step(b, w_cmd, cfg):
    try:
        return apply_command(b, FLAT, w_cmd, cfg)
    except ContactSeparation:
        assume(False)


def _tilted(angle, surface=FLAT, length=0.1):
    """Square resting on its right bottom corner, rotated by ``angle`` (cw < 0)."""
    b = _body(length, surface)
    corner = b.to_base(b.corners_W()[1])[0]
    c, s = math.cos(angle), math.sin(angle)
    pos = corner + np.array([[c, -s], [s, c]]) @ (b.position - corner)
    return replace(b, pose=(float(pos[0]), float(pos[1]), b.phi + angle))


def test_surface_and_body_validation():
    with pytest.raises(ConfigError):
        Surface(-0.1)
    with pytest.raises(ConfigError):
        BodyState((0, 0, 0), (0.05, 0.0), 0.1)
    with pytest.raises(ConfigError):
        SimConfig(dt=0.0).validate()


def test_flat_body_has_two_corner_contacts():
    cs = detect_contacts(_body(), FLAT)
    assert len(cs) == 2
    assert {tuple(np.round(c.p, 12)) for c in cs} == {(-0.05, -0.05), (0.05, -0.05)}


def test_tilted_body_has_one_contact():
    cs = detect_contacts(_tilted(math.radians(-10)), FLAT)
    assert len(cs) == 1 and np.allclose(cs[0].p, [0.05, -0.05])


def test_contact_regained_within_snap_tol():
    cfg = SimConfig()
    # lift of the far corner is length * sin(angle)
    inside = math.asin(0.9 * cfg.snap_tol / 0.1)
    outside = math.asin(1.1 * cfg.snap_tol / 0.1)
    assert len(detect_contacts(_tilted(-outside), FLAT, cfg.snap_tol)) == 1
    assert len(detect_contacts(_tilted(-inside), FLAT, cfg.snap_tol)) == 2


def test_penetration_raises():
    b = _body()
    sunk = replace(b, pose=(b.pose[0], b.pose[1] - 0.01, b.pose[2]))
    with pytest.raises(Penetration):
        detect_contacts(sunk, FLAT)


def test_gravity_wrench_examples():
    b = BodyState((0, 0, 0.0), (0.05, 0.05), 1.0)
    assert np.allclose(gravity_wrench(b), [0, -9.81, 0])
    b = BodyState((0, 0, math.pi / 2), (0.05, 0.05), 1.0)
    assert np.allclose(gravity_wrench(b), [-9.81, 0, 0], atol=1e-12)


@given(st.floats(-3, 3))
def test_gravity_has_no_moment(phi):
    assert gravity_wrench(BodyState((0.3, 0.1, phi), (0.1, 0.2), 0.5))[2] == 0.0


def test_cancelling_gravity_is_static_and_bit_identical():
    b = _body()
    res = apply_command(b, FLAT, -gravity_wrench(b), SimConfig())
    assert res.mode is Mode.STATIC
    assert res.state.pose == b.pose
    assert np.array_equal(res.reaction, np.zeros(3))


def test_static_reaction_balances_total_wrench():
    b = _body()
    cfg = SimConfig()
    w_cmd = np.array([0.2, -3.0, 0.1])
    res = apply_command(b, FLAT, w_cmd, cfg)
    assert res.mode is Mode.STATIC
    assert np.array_equal(w_cmd + gravity_wrench(b) + res.reaction, np.zeros(3))


def test_push_past_cw_face_pivots_about_b():
    b = _body()
    cfg = SimConfig()
    cone = ground_truth_cone(b, FLAT, cfg)
    k = cone.face_index(Mode.CW)
    i, j = cone.faces[k]
    x = 3.0 * normalize(cone.edges[i] + cone.edges[j]) + 0.5 * cone.face_normals[k]
    L = cfg.scale_for(b)
    assert reference_mode([np.array([-0.05, -0.05]), np.array([0.05, -0.05])], [0, 1], 0.5, 0.0,
                          L, x) == ["cw"]
    w_cmd = -x - gravity_wrench(b)
    state = b
    for _ in range(20):
        res = apply_command(state, FLAT, w_cmd, cfg)
        state = res.state
    assert res.mode is Mode.CW
    assert state.phi < b.phi
    cs = detect_contacts(state, FLAT, cfg.snap_tol)
    assert len(cs) == 1 and np.allclose(cs[0].p, [0.05, -0.05])


@given(st.integers(0, 10_000))
def test_reaction_stays_in_cone(seed):
    rng = np.random.default_rng(seed)
    b = _body()
    cfg = SimConfig()
    cone = ground_truth_cone(b, FLAT, cfg)
    res = _step(b, _press(rng), cfg)
    if np.linalg.norm(res.reaction) > 1e-12:
        assert in_cone_lp(res.reaction, cone.edges) or cone.contains(res.reaction)


@given(st.integers(0, 10_000))
def test_no_penetration_and_pivot_isometry(seed):
    rng = np.random.default_rng(seed)
    cfg = SimConfig()
    state = _body()
    for _ in range(30):
        before = detect_contacts(state, FLAT, cfg.snap_tol)
        try:
            res = apply_command(state, FLAT, _press(rng, 4.0), cfg)
        except ContactSeparation:
            break
        d = FLAT.distance(res.state.to_base(res.state.corners_W()))
        assert d.min() >= -cfg.snap_tol
        if res.mode in (Mode.CW, Mode.CCW):
            # some contact of the previous step stays put in the base frame
            old = state.to_base(np.array([c.p for c in before]))
            new = res.state.to_base(np.array([c.p for c in before]))
            assert np.min(np.linalg.norm(old - new, axis=1)) < 1e-9
        state = res.state


@given(st.integers(0, 10_000))
def test_motion_signs_match_labels(seed):
    rng = np.random.default_rng(seed)
    cfg = SimConfig()
    b = _body()
    res = _step(b, _press(rng, 4.0), cfg)
    dphi = res.state.phi - b.phi
    dx = (res.state.position - b.position) @ FLAT.tangent
    if res.mode.pivot is Mode.CW:
        assert dphi <= 0
    if res.mode.pivot is Mode.CCW:
        assert dphi >= 0
    if res.mode is Mode.SR:
        assert dx > 0 and dphi == 0
    if res.mode is Mode.SL:
        assert dx < 0 and dphi == 0


def test_pulling_away_separates():
    with pytest.raises(ContactSeparation):
        apply_command(_body(), FLAT, [0.0, 20.0, 0.0], SimConfig())


def test_force_is_clamped():
    cfg = SimConfig(max_force=10.0)
    res = apply_command(_body(), FLAT, [0.0, -50.0, 0.0], cfg)
    assert res.clamped and res.mode is Mode.STATIC


def test_has_moved_thresholds():
    cfg = SimConfig()
    a = (0.0, 0.0, 0.0)
    assert not has_moved([a, a], cfg)
    assert has_moved([a, (0.0, 0.0, 2 * cfg.motion_thresh_ang)], cfg)
    assert not has_moved([a, (cfg.motion_thresh_pos, 0.0, 0.0)], cfg)
    assert not has_moved([a, (0.0, 0.0, cfg.motion_thresh_ang)], cfg)
    with pytest.raises(ValueError):
        has_moved([a], cfg)


def test_simulator_is_deterministic():
    def run():
        rng = np.random.default_rng(11)
        sim = Simulator(_body(), FLAT, SimConfig(seed=3))
        for _ in range(200):
            try:
                sim.apply_action(_press(rng))
            except ContactSeparation:
                break
        return repr(sim.log), sim.state.pose

    assert run() == run()


def test_simulator_press_reaction_is_along_normal():
    s = Surface(math.radians(30), (0, 0), 0.3)
    sim = Simulator(resting_state(0.3, 0.1, s), s, press=5.0)
    assert np.allclose(sim.initial_reaction, [0.0, 5.0, 0.0], atol=1e-12)
    assert sim.apply_action(-sim.initial_reaction).mode is Mode.STATIC


def test_sloped_resting_state_touches_on_two_corners():
    for deg in (0, 30, 60, 90):
        s = Surface(math.radians(deg), (0.0, 0.0), 0.3)
        b = resting_state(0.3, 0.1, s)
        assert len(detect_contacts(b, s)) == 2
        assert ground_truth_cone(b, s, SimConfig()).n_edges == 4
