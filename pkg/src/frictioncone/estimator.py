"""Friction-cone estimation from reaction-wrench samples.

The estimate is the conic hull of wrenches that did not move the object. It
grows by probing just past each edge of its base polygon until the object
moves, then recording the measured reaction. Labelling probes each face of
the finalised four-edge cone to tell pivot faces from slide faces.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    DegenerateInput,
    NoIntersection,
    Plane,
    angle_between,
    convex_hull_3d,
    normalize,
    plane_basis,
    polygon_area_3d,
    ray_plane_intersection,
)
from .wrench import (
    Mode,
    PolyhedralCone,
    coplanarity_normal,
    order_edges,
    transform_edge,
)

log = logging.getLogger(__name__)


class InitFailure(RuntimeError):
    pass


class ExplorationStall(RuntimeWarning):
    pass


class TooFewEdges(ValueError):
    pass


class LabelConflict(RuntimeError):
    pass


@dataclass
class EstimatorConfig:
    n_init: int = 8
    sigma: float = 0.5  # N, perturbation of the initial samples
    eps_simplify: float = math.radians(2.0)
    explored_tol: float = math.radians(3.0)
    gamma_rel: float = 0.1  # first nonzero gamma, relative to |midpoint|
    max_gamma_steps: int = 12
    max_probes: int = 300
    max_init_attempts: int = 200
    jump_thresh: float = 0.2
    label_gain: float = 0.05  # out-of-plane magnitude per unit base area
    label_travel: float = 1e-3  # m of sliding that settles a probe
    label_max_steps: int = 200
    seed: int = 0


@dataclass
class EstimateState:
    W: np.ndarray
    plane: Plane | None = None
    V: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    E: list = field(default_factory=list)
    explored: list = field(default_factory=list)
    probes: int = 0
    stalls: int = 0

    @property
    def P_bar(self) -> np.ndarray:
        return self.W / np.linalg.norm(self.W, axis=1, keepdims=True)

    def edge_vector(self, k: int) -> np.ndarray:
        i, j = self.E[k]
        return self.V[j] - self.V[i]

    def is_explored(self, k: int, tol: float) -> bool:
        d = self.edge_vector(k)
        return any(angle_between(d, e) <= tol for e in self.explored)


# --- estimation -------------------------------------------------------------

def _cone_angle(ray, others) -> float:
    """Angle from ``ray`` to the conic hull of ``others`` (0 inside)."""
    if len(others) == 0:
        return math.pi
    return PolyhedralCone(others).angle_outside(ray)


def simplify_rays(rays: np.ndarray, eps: float) -> np.ndarray:
    """Drop rays within ``eps`` of the conic hull of the remaining ones.

    Covers both near-duplicates and rays lying on the plane between two
    others. The ray closest to redundancy goes first; ties keep the longer.
    """
    rays = np.asarray(rays, dtype=float)
    keep = list(range(len(rays)))
    while len(keep) > 1:
        scores = []
        for k in keep:
            others = rays[[i for i in keep if i != k]]
            scores.append((_cone_angle(rays[k], others), np.linalg.norm(rays[k]), k))
        angle, _, k = min(scores)
        if angle >= eps:
            break
        keep.remove(k)
    return rays[sorted(keep)]


def _planar_rays(rays: np.ndarray) -> np.ndarray:
    """Extreme rays of a fan of rays spanning at most a plane."""
    s = np.linalg.svd(rays, compute_uv=False)
    if len(rays) == 1 or s[1] <= 1e-9 * max(1.0, s[0]):
        return rays[[int(np.argmax(np.linalg.norm(rays, axis=1)))]]
    _, _, vt = np.linalg.svd(rays)
    mean_dir = normalize(rays.mean(axis=0))
    u = mean_dir
    v = normalize(np.cross(vt[2], u))
    ang = np.arctan2(rays @ v, rays @ u)
    out = []
    for target in (ang.min(), ang.max()):
        idx = np.flatnonzero(np.abs(ang - target) <= 1e-12)
        out.append(idx[np.argmax(np.linalg.norm(rays[idx], axis=1))])
    return rays[sorted(set(out))]


def update_estimate(W, w_new, eps: float = math.radians(2.0)) -> np.ndarray:
    """Add one sample and rebuild the estimate's rays (the hull update).

    Returns the very same ``W`` object when the estimate does not change.
    """
    W_in = W
    W = np.atleast_2d(np.asarray(W, dtype=float)).reshape(-1, 3)
    w_new = np.asarray(w_new, dtype=float)
    pts = np.vstack([W, w_new, np.zeros(3)])
    try:
        hull = convex_hull_3d(pts)
    except DegenerateInput:
        rays = pts[np.linalg.norm(pts, axis=1) > 1e-12]
        reduced = _planar_rays(rays)
        if len(reduced) == len(W) and np.allclose(np.sort(reduced, axis=0), np.sort(W, axis=0)):
            return W_in
        return reduced
    verts = hull.vertices
    if not np.any(np.all(verts == w_new, axis=1)):
        return W_in
    rays = simplify_rays(verts[np.linalg.norm(verts, axis=1) > 1e-12], eps)
    if len(W) >= 3 and all(_cone_angle(r, W) < eps for r in rays):
        # the new cone is the old one up to the simplification tolerance
        return W_in
    return rays


def init_samples(system, n_init: int = 8, sigma: float = 0.5, rng=None,
                 max_attempts: int = 200) -> np.ndarray:
    """Static reaction samples around the initial reaction wrench."""
    rng = np.random.default_rng(rng)
    start = system.state
    first = system.apply_action(-_initial_reaction(system))
    if first.mode is not Mode.STATIC:
        raise InitFailure("object is not static in its initial configuration")
    w0 = first.reaction
    samples = []
    attempts = 0
    while len(samples) < n_init:
        attempts += 1
        if attempts > max_attempts:
            raise InitFailure(f"only {len(samples)} static samples in {max_attempts} attempts")
        target = w0 + sigma * rng.standard_normal(3)
        res = system.apply_action(-target)
        if res.mode is Mode.STATIC and not system.has_moved(start):
            samples.append(res.reaction)
        else:
            system.reset(start)
    return np.array(samples)


def _initial_reaction(system) -> np.ndarray:
    return np.asarray(getattr(system, "initial_reaction"), dtype=float)


def dedup_samples(samples, eps: float = math.radians(2.0)) -> np.ndarray:
    W = np.atleast_2d(samples)[:1]
    for w in np.atleast_2d(samples)[1:]:
        W = update_estimate(W, w, eps)
    return W


def base_polygon(P_bar, W, rng=None) -> tuple[Plane, np.ndarray, list]:
    """Base plane, polygon vertices and CCW edges for the current estimate."""
    rng = np.random.default_rng(rng)
    P_bar = np.atleast_2d(P_bar)
    W = np.atleast_2d(W)
    normal = normalize(P_bar.mean(axis=0))
    point = W[int(rng.integers(len(W)))]
    plane = Plane(normal, normal * float(point @ normal))
    verts = []
    for e in P_bar:
        try:
            verts.append(ray_plane_intersection(np.zeros(3), e, plane))
        except NoIntersection:
            log.warning("estimate edge %s misses the base plane; dropped", e)
    V = np.array(verts).reshape(-1, 3)
    if len(V) < 2:
        return plane, V, []
    if len(V) == 2:
        return plane, V, [(0, 1), (1, 0)]
    u, v = plane_basis(normal)
    rel = V - V.mean(axis=0)
    order = np.argsort(np.arctan2(rel @ v, rel @ u), kind="stable")
    V = V[order]
    E = [(i, (i + 1) % len(V)) for i in range(len(V))]
    return plane, V, E


def _outward(state: EstimateState, k: int) -> np.ndarray:
    d = state.edge_vector(k)
    return normalize(np.cross(d, state.plane.normal))


def gamma_schedule(mid_norm: float, cfg: EstimatorConfig):
    yield 0.0
    g = cfg.gamma_rel * mid_norm
    for _ in range(cfg.max_gamma_steps):
        yield g
        g *= 2.0


def _refresh(state: EstimateState, rng):
    state.plane, state.V, state.E = base_polygon(state.P_bar, state.W, rng)


def explore(system, state: EstimateState, cfg: EstimatorConfig | None = None,
            rng=None) -> EstimateState:
    """Grow the estimate until every base-polygon edge has been explored."""
    cfg = cfg or EstimatorConfig()
    rng = np.random.default_rng(rng)
    if state.plane is None:
        _refresh(state, rng)
    if not state.E:
        raise TooFewEdges("estimate needs at least two independent rays to explore")
    start = system.state
    max_force = system.cfg.max_force
    while state.probes < cfg.max_probes:
        open_edges = [k for k in range(len(state.E)) if not state.is_explored(k, cfg.explored_tol)]
        if not open_edges:
            break
        lengths = [np.linalg.norm(state.edge_vector(k)) for k in open_edges]
        k = open_edges[int(np.argmax(lengths))]  # argmax keeps the lowest index on ties
        i, j = state.E[k]
        mid = 0.5 * (state.V[i] + state.V[j])
        n_hat = _outward(state, k)
        direction = normalize(state.edge_vector(k))
        state.probes += 1

        moved, sample, gamma = False, None, 0.0
        g = system.gravity()
        room = max_force - math.hypot(g[0], g[1])
        for gamma in gamma_schedule(float(np.linalg.norm(mid)), cfg):
            w_r = mid + gamma * n_hat
            w_cmd = -w_r - g
            if math.hypot(w_cmd[0], w_cmd[1]) > max_force:
                # whether a wrench leaves the cone does not depend on its size,
                # so shrink the probe along its ray instead of giving up
                f = math.hypot(w_r[0], w_r[1])
                if room <= 0 or f == 0.0:
                    break
                w_r = w_r * (room / f)
            res = system.apply_action(-w_r)
            if system.has_moved(start):
                moved, sample = True, res.reaction
                break
        system.reset(start)
        if not moved:
            state.stalls += 1
            state.explored.append(direction)
            log.warning("exploration stalled on edge %d (force cap reached)", k)
            continue
        W_new = update_estimate(state.W, sample, cfg.eps_simplify) if gamma > 0 else state.W
        if W_new is state.W:
            # already on the surface: nothing left to gain in this direction
            state.explored.append(direction)
        else:
            state.W = W_new
            _refresh(state, rng)
    return state


def estimate_cone(system, cfg: EstimatorConfig | None = None) -> EstimateState:
    """Initialisation followed by exploration (the full estimation loop)."""
    cfg = cfg or EstimatorConfig()
    rng = np.random.default_rng(cfg.seed)
    start = system.state
    samples = init_samples(system, cfg.n_init, cfg.sigma, rng, cfg.max_init_attempts)
    system.reset(start)
    W = dedup_samples(samples, cfg.eps_simplify)
    state = EstimateState(W)
    _refresh(state, rng)
    return explore(system, state, cfg, rng)


# --- finalisation and labelling ---------------------------------------------

def _quad_area(V, normal, idx) -> float:
    return polygon_area_3d(V[list(idx)], normal)


def finalize(state: EstimateState, exhaustive_limit: int = 12) -> PolyhedralCone:
    """Keep the four edges whose base polygon has maximal area."""
    P = state.P_bar
    n = len(P)
    if n < 4:
        raise TooFewEdges(f"need at least 4 edges, have {n}")
    normal = normalize(P.mean(axis=0))
    plane = Plane(normal, normal)
    V = np.array([ray_plane_intersection(np.zeros(3), e, plane) for e in P])
    if n <= exhaustive_limit:
        best = max(itertools.combinations(range(n), 4), key=lambda q: _quad_area(V, normal, q))
    else:
        best = list(range(n))
        while len(best) > 4:
            drop = max(best, key=lambda i: _quad_area(V, normal, [b for b in best if b != i]))
            best.remove(drop)
    edges = P[list(best)]
    return PolyhedralCone(edges[order_edges(edges)])


def base_area(cone: PolyhedralCone, height: float = 1.0) -> float:
    axis = cone.axis
    plane = Plane(axis, axis * height)
    V = np.array([ray_plane_intersection(np.zeros(3), e, plane) for e in cone.edges])
    return polygon_area_3d(V, axis)


def _probe_face(system, cone: PolyhedralCone, face: int, beta: float, a: float,
                cfg: EstimatorConfig):
    """Push across one face; returns (moved, contact_lost, dphi, dx_W)."""
    start = system.state
    i, j = cone.faces[face]
    w_des = normalize(cone.edges[i] + cone.edges[j])
    w_a = -(a * cone.face_normals[face] + beta * w_des)
    prev_reaction = None
    moved = lost = False
    for _ in range(cfg.label_max_steps):
        count_before = system.contact_count
        res = system.apply_action(w_a)
        jump = False
        if prev_reaction is not None:
            base = max(np.linalg.norm(prev_reaction), 1e-12)
            jump = np.linalg.norm(res.reaction - prev_reaction) / base > cfg.jump_thresh
        prev_reaction = res.reaction
        if system.has_moved(start):
            moved = True
        if res.contact_count < count_before or (moved and jump):
            lost = True
            break
        travel = np.linalg.norm(system.state.position - start.position)
        if moved and travel >= cfg.label_travel:
            break
    end = system.state
    dphi = end.phi - start.phi
    dx_W = float((np.array([math.cos(start.phi), math.sin(start.phi)]) @
                  (end.position - start.position)))
    system.reset(start)
    return moved, lost, dphi, dx_W


def label_faces(system, cone: PolyhedralCone, cfg: EstimatorConfig | None = None,
                beta: float | None = None) -> PolyhedralCone:
    """Attach sl/sr/cw/ccw labels to the faces of a four-edge cone."""
    cfg = cfg or EstimatorConfig()
    if cone.n_edges != 4:
        raise TooFewEdges("labelling needs a finalised four-edge cone")
    if beta is None:
        beta = float(np.linalg.norm(_initial_reaction(system)))
    a0 = cfg.label_gain * base_area(cone, beta)
    L = system.length_scale
    pivot_score, dphis, dxs = [], [], []
    for face in range(4):
        a = a0
        for _ in range(10):
            moved, lost, dphi, dx = _probe_face(system, cone, face, beta, a, cfg)
            if moved:
                break
            a *= 2.0
        else:
            raise LabelConflict(f"face {face} never produced motion")
        # rotation against translation, both in metres of travel at the scale length
        score = abs(dphi) * L / (abs(dphi) * L + abs(dx) + 1e-15)
        pivot_score.append(1.0 if lost else score)
        dphis.append(dphi)
        dxs.append(dx)
    # pivot faces are opposite each other in the cyclic order, so are slide faces
    pv = (0, 2) if pivot_score[0] + pivot_score[2] >= pivot_score[1] + pivot_score[3] else (1, 3)
    sd = (1, 3) if pv == (0, 2) else (0, 2)
    if pivot_score[pv[0]] < 0.5 or pivot_score[pv[1]] < 0.5:
        log.warning("face probes disagree with the cyclic label pattern; using the best split")
    labels = [None] * 4
    cw = pv[0] if dphis[pv[0]] < dphis[pv[1]] else pv[1]
    labels[cw], labels[pv[0] + pv[1] - cw] = Mode.CW, Mode.CCW
    sr = sd[0] if dxs[sd[0]] > dxs[sd[1]] else sd[1]
    labels[sr], labels[sd[0] + sd[1] - sr] = Mode.SR, Mode.SL
    return labelled_cone(cone.edges, labels)


def labelled_cone(edges, face_labels) -> PolyhedralCone:
    """Cone with face labels, derived edge slide labels and contact groups."""
    n = len(edges)
    cw, ccw = face_labels.index(Mode.CW), face_labels.index(Mode.CCW)
    if set(_face_edges(cw, n)) & set(_face_edges(ccw, n)):
        raise LabelConflict("cw and ccw faces share an edge")
    edge_contact, edge_labels = [], []
    for e in range(n):
        edge_contact.append(0 if e in _face_edges(cw, n) else 1)
        adj = [face_labels[(e - 1) % n], face_labels[e]]
        edge_labels.append(next(m for m in adj if m in (Mode.SL, Mode.SR)))
    return PolyhedralCone(np.array(edges), face_labels=list(face_labels),
                          edge_labels=edge_labels, edge_contact=edge_contact)


def _face_edges(face: int, n: int) -> tuple[int, int]:
    return face, (face + 1) % n


def transform_cone(cone: PolyhedralCone, delta_phi: float, pivot: Mode = Mode.CW,
                   m_hat=None) -> PolyhedralCone:
    """Rotate the edges of the pivoting contact by ``delta_phi``.

    ``m_hat`` is the pivot face's plane normal taken before the motion
    started; it defaults to the one computed from ``cone`` itself.
    """
    if delta_phi == 0.0:
        return cone
    face = cone.face_index(pivot)
    i, j = cone.faces[face]
    if m_hat is None:
        m_hat = coplanarity_normal(cone.edges[i], cone.edges[j])
    edges = cone.edges.copy()
    edges[i] = transform_edge(edges[i], delta_phi, m_hat)
    edges[j] = transform_edge(edges[j], delta_phi, m_hat)
    return cone.with_edges(edges)
