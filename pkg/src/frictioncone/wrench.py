"""Reaction wrench space (RWS) algebra for planar contact.

A wrench is a length-3 array ``(fx, fy, tau / L)``: force in the object frame
plus the moment about the frame origin divided by a characteristic length
``L``. Scaling the moment keeps the space isotropic so that Euclidean
projections and angles mean something; ``L = 1`` gives raw N and N*m.

Contact-mode classification projects ``x = -w_a`` onto the cone. Where the
projection lands (interior, face, edge, apex) picks the mode.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import angle_between, cone_projection, cross2, normalize, plane_basis, rot2

BOUNDARY_BAND = np.deg2rad(0.5)
STATIC_TOL = 1e-9


class InvalidContacts(ValueError):
    pass


class AmbiguousBoundary(ValueError):
    """The wrench sits within the boundary band of two mode regions."""


class ContactSeparation(ValueError):
    """``-w_a`` lies in the polar cone: every contact would separate."""


class ParallelEdges(ValueError):
    pass


class SingularPlane(ValueError):
    pass


class Mode(str, enum.Enum):
    STATIC = "static"
    SL = "sl"
    SR = "sr"
    CW = "cw"
    CCW = "ccw"
    CWSL = "cwsl"
    CWSR = "cwsr"
    CCWSL = "ccwsl"
    CCWSR = "ccwsr"

    @property
    def pivot(self) -> "Mode | None":
        for m in (Mode.CCW, Mode.CW):
            if self.value.startswith(m.value):
                return m
        return None

    @property
    def slide(self) -> "Mode | None":
        for m in (Mode.SL, Mode.SR):
            if self.value.endswith(m.value):
                return m
        return None

    @property
    def is_mixed(self) -> bool:
        return self.pivot is not None and self.slide is not None


PRIMARY_MODES = (Mode.SL, Mode.SR, Mode.CW, Mode.CCW)
MIXED_MODES = (Mode.CWSL, Mode.CWSR, Mode.CCWSL, Mode.CCWSR)


def combine(pivot: Mode, slide: Mode) -> Mode:
    return Mode(pivot.value + slide.value)


@dataclass(frozen=True)
class ContactPoint:
    p: np.ndarray
    surface_normal_B: np.ndarray
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        n = np.asarray(self.surface_normal_B, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("surface normal must be unit length")
        object.__setattr__(self, "surface_normal_B", n)
        if not self.mu > 0:
            raise ValueError("friction coefficient must be positive")


def wrench_from_contact_force(f, p, length_scale: float = 1.0) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return np.array([f[0], f[1], cross2(p, f) / length_scale])


def force_to_wrench_frame(f_B, phi: float) -> np.ndarray:
    return rot2(phi).T @ np.asarray(f_B, dtype=float)


def friction_cone_edges(normal_B, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Left and right friction-cone edges (unit) in the base frame.

    ``f_r`` is the normal turned clockwise by ``atan(mu)``.
    """
    n = normalize(normal_B)
    half = np.arctan(mu)
    return rot2(half) @ n, rot2(-half) @ n


def pivot_plane_normal(p, length_scale: float = 1.0) -> np.ndarray:
    """Normal of the RWS plane holding every wrench through contact ``p``."""
    return np.array([-p[1] / length_scale, p[0] / length_scale, -1.0])


@dataclass
class PolyhedralCone:
    """Convex cone spanned by unit edge wrenches.

    ``edges`` are cyclically ordered counter-clockwise about the axis; face
    ``i`` is spanned by edges ``i`` and ``i + 1``. A two-edge cone is the
    single-contact wedge: ``side_labels`` name the pivot direction on the
    ``+m`` / ``-m`` side (``m = e0 x e1``) and ``edge_labels`` the slide
    direction at each edge.
    """

    edges: np.ndarray
    face_labels: list = field(default_factory=list)
    edge_labels: list = field(default_factory=list)
    side_labels: tuple | None = None
    contacts: list = field(default_factory=list)
    edge_contact: list = field(default_factory=list)

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.edges, dtype=float))
        self.edges = e / np.linalg.norm(e, axis=1, keepdims=True)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_wedge(self) -> bool:
        return self.n_edges == 2

    @property
    def axis(self) -> np.ndarray:
        return normalize(self.edges.mean(axis=0))

    @property
    def faces(self) -> list[tuple[int, int]]:
        n = self.n_edges
        if n == 2:
            return [(0, 1)]
        return [(i, (i + 1) % n) for i in range(n)]

    @cached_property
    def wedge_normal(self) -> np.ndarray:
        return coplanarity_normal(self.edges[0], self.edges[1])

    @cached_property
    def face_normals(self) -> np.ndarray:
        """Outward unit normals, one per face (the ``+m`` normal for a wedge)."""
        if self.is_wedge:
            return self.wedge_normal[None, :]
        axis = self.axis
        out = []
        for i, j in self.faces:
            n = normalize(np.cross(self.edges[i], self.edges[j]))
            out.append(-n if n @ axis > 0 else n)
        return np.array(out)

    def face_index(self, label: Mode) -> int:
        return self.face_labels.index(label)

    def edge_index(self, label: Mode) -> int:
        return self.mixed_labels().index(label)

    def mixed_labels(self) -> list:
        if self.is_wedge or not self.face_labels:
            return [None] * self.n_edges
        n = self.n_edges
        out = []
        for i in range(n):
            a, b = self.face_labels[(i - 1) % n], self.face_labels[i]
            piv = a if a in (Mode.CW, Mode.CCW) else b
            sld = a if a in (Mode.SL, Mode.SR) else b
            if piv in (Mode.CW, Mode.CCW) and sld in (Mode.SL, Mode.SR):
                out.append(combine(piv, sld))
            else:
                out.append(None)
        return out

    def with_edges(self, edges) -> "PolyhedralCone":
        return PolyhedralCone(
            np.array(edges), list(self.face_labels), list(self.edge_labels),
            self.side_labels, list(self.contacts), list(self.edge_contact),
        )

    # --- conic geometry ---------------------------------------------------
    def project(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Nearest point of the cone to ``x`` and its edge coefficients."""
        return cone_projection(self.edges, x)

    def contains(self, x, tol: float = STATIC_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        proj, _ = self.project(x)
        return bool(np.linalg.norm(x - proj) <= tol * max(1.0, np.linalg.norm(x)))

    def angle_outside(self, x) -> float:
        """Angle between ``x`` and the cone (0 when inside)."""
        x = np.asarray(x, dtype=float)
        proj, _ = self.project(x)
        if np.linalg.norm(x - proj) <= STATIC_TOL * max(1.0, np.linalg.norm(x)):
            return 0.0
        if np.linalg.norm(proj) == 0.0:
            # nearest direction then lies on a face
            return min(angle_to_cone2(x, self.edges[i], self.edges[j]) for i, j in self.faces)
        return angle_between(x, proj)

    @cached_property
    def _boundaries(self) -> np.ndarray:
        """Stacked 2D cones ``(u, v)`` separating mode regions."""
        pairs = []
        e = self.edges
        if self.is_wedge:
            m = self.wedge_normal
            pairs.append((e[0], e[1]))
            for i, other in ((0, 1), (1, 0)):
                n_in = normalize(np.cross(m, e[i]))
                if n_in @ e[other] > 0:
                    n_in = -n_in
                pairs += [(e[i], m), (e[i], -m), (m, n_in), (-m, n_in)]
        else:
            normals = self.face_normals
            n = self.n_edges
            for k, (i, j) in enumerate(self.faces):
                pairs += [(e[i], e[j]), (e[i], normals[k]), (e[j], normals[k])]
            for i in range(n):
                pairs.append((normals[(i - 1) % n], normals[i]))
        return np.array(pairs)

    def boundary_angle(self, x) -> float:
        """Smallest angle between ``x`` and any mode-region boundary."""
        x = normalize(x)
        uv = self._boundaries  # (k, 2, 3)
        u, v = uv[:, 0], uv[:, 1]
        # least-squares coefficients of x in span(u, v)
        uu = np.einsum("ij,ij->i", u, u)
        vv = np.einsum("ij,ij->i", v, v)
        uvd = np.einsum("ij,ij->i", u, v)
        xu, xv = u @ x, v @ x
        det = uu * vv - uvd * uvd
        a = (vv * xu - uvd * xv) / det
        b = (uu * xv - uvd * xu) / det
        proj = a[:, None] * u + b[:, None] * v
        pn = np.linalg.norm(proj, axis=1)
        inside = (a >= 0) & (b >= 0) & (pn > 1e-15)
        cos_in = np.where(inside, (proj @ x) / np.where(pn > 0, pn, 1.0), -1.0)
        cos_u = xu / np.sqrt(uu)
        cos_v = xv / np.sqrt(vv)
        best = np.clip(np.max(np.stack([cos_in, cos_u, cos_v]), axis=0), -1.0, 1.0)
        return float(np.min(np.arccos(best)))


def angle_to_cone2(x, u, v) -> float:
    """Angle between ``x`` and the planar cone spanned by ``u`` and ``v``."""
    A = np.column_stack([u, v])
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    if coef[0] >= 0 and coef[1] >= 0 and np.linalg.norm(A @ coef) > 0:
        return angle_between(x, A @ coef)
    return min(angle_between(x, u), angle_between(x, v))


def coplanarity_normal(w_r_hat, w_l_hat) -> np.ndarray:
    c = np.cross(w_r_hat, w_l_hat)
    n = np.linalg.norm(c)
    if n <= 1e-9:
        raise ParallelEdges("edges are parallel")
    return c / n


def transform_edge(w_hat, delta_phi: float, m_hat) -> np.ndarray:
    """Move an edge of a fixed contact through a rotation ``delta_phi``.

    The force part rotates with the frame; the moment is re-solved so the
    edge stays on the plane with normal ``m_hat``.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    m_hat = np.asarray(m_hat, dtype=float)
    if abs(m_hat[2]) <= 1e-9:
        raise SingularPlane("plane normal has no moment component")
    f = rot2(delta_phi).T @ w_hat[:2]
    tau = -(m_hat[0] * f[0] + m_hat[1] * f[1]) / m_hat[2]
    return normalize(np.array([f[0], f[1], tau]))


def coplanarity_residual(w_t, w_t_next, p_A, f_B_sq: float, delta_phi: float,
                         length_scale: float = 1.0) -> np.ndarray:
    lhs = np.cross(np.asarray(w_t, dtype=float), np.asarray(w_t_next, dtype=float))
    return lhs - np.sin(delta_phi) * f_B_sq * pivot_plane_normal(p_A, length_scale)


def _pivot_label(contact: ContactPoint, other: ContactPoint, phi: float) -> Mode:
    # rotating about `contact` must lift `other` off the surface
    n_W = force_to_wrench_frame(contact.surface_normal_B, phi)
    return Mode.CW if cross2(other.p - contact.p, n_W) < 0 else Mode.CCW


def order_edges(edges: np.ndarray) -> np.ndarray:
    """Permutation sorting edges counter-clockwise about their mean."""
    axis = normalize(np.mean(edges, axis=0))
    u, v = plane_basis(axis)
    return np.argsort(np.arctan2(edges @ v, edges @ u), kind="stable")


def analytical_cone(contacts, phi: float, length_scale: float = 1.0) -> PolyhedralCone:
    """Ground-truth cone for one or two known point contacts."""
    contacts = list(contacts)
    if len(contacts) not in (1, 2):
        raise InvalidContacts(f"need 1 or 2 contacts, got {len(contacts)}")
    raw, side, owner = [], [], []
    for k, c in enumerate(contacts):
        f_l, f_r = friction_cone_edges(c.surface_normal_B, c.mu)
        for name, f_B in (("r", f_r), ("l", f_l)):
            raw.append(wrench_from_contact_force(force_to_wrench_frame(f_B, phi), c.p, length_scale))
            side.append(name)
            owner.append(k)
    # a left friction edge resists motion to the right
    slide_of = {"r": Mode.SL, "l": Mode.SR}
    if len(contacts) == 1:
        c = contacts[0]
        cone = PolyhedralCone(np.array(raw), edge_labels=[slide_of[s] for s in side],
                              contacts=contacts, edge_contact=owner)
        ccw_sign = cone.wedge_normal @ pivot_plane_normal(c.p, length_scale)
        cone.side_labels = (Mode.CCW, Mode.CW) if ccw_sign > 0 else (Mode.CW, Mode.CCW)
        return cone

    raw = np.array(raw)
    perm = order_edges(raw)
    side = [side[i] for i in perm]
    owner = [owner[i] for i in perm]
    labels = []
    for i in range(4):
        j = (i + 1) % 4
        if owner[i] == owner[j]:
            k = owner[i]
            labels.append(_pivot_label(contacts[k], contacts[1 - k], phi))
        elif side[i] == side[j]:
            labels.append(slide_of[side[i]])
        else:  # pragma: no cover - impossible for a valid two-contact cone
            raise InvalidContacts("contacts do not form a convex cone")
    return PolyhedralCone(raw[perm], face_labels=labels,
                          edge_labels=[slide_of[s] for s in side],
                          contacts=contacts, edge_contact=owner)


@dataclass
class Resolution:
    """How the contacts answer ``x = -w_a``."""

    mode: Mode
    reaction: np.ndarray
    excess: np.ndarray
    pivot_excess: float = 0.0
    slide_excess: float = 0.0
    pivot_edge: int | None = None  # an edge of the contact that stays put


def _split_excess(excess, n_pivot, n_slide) -> tuple[float, float]:
    A = np.column_stack([n_pivot, n_slide])
    coef, *_ = np.linalg.lstsq(A, excess, rcond=None)
    return max(0.0, float(coef[0])), max(0.0, float(coef[1]))


def resolve(cone: PolyhedralCone, x, tol: float = STATIC_TOL) -> Resolution:
    x = np.asarray(x, dtype=float)
    reaction, coef = cone.project(x)
    excess = x - reaction
    scale = max(1.0, float(np.linalg.norm(x)))
    if np.linalg.norm(excess) <= tol * scale:
        return Resolution(Mode.STATIC, x.copy(), np.zeros(3))
    # weights below round-off of the largest one are ties at an edge
    support = [int(i) for i in np.flatnonzero(coef > 1e-9 * max(coef.max(), 1e-300))]
    dist = float(np.linalg.norm(excess))
    if not support:
        raise ContactSeparation("every contact separates")

    if cone.is_wedge:
        m = cone.wedge_normal
        side = cone.side_labels[0] if x @ m > 0 else cone.side_labels[1]
        if len(support) == 2:
            return Resolution(side, reaction, excess, pivot_excess=dist, pivot_edge=0)
        i = support[0]
        if abs(x @ m) <= tol * scale:
            return Resolution(cone.edge_labels[i], reaction, excess, slide_excess=dist,
                              pivot_edge=i)
        n_in = normalize(np.cross(m, cone.edges[i]))
        if n_in @ cone.edges[1 - i] > 0:
            n_in = -n_in
        piv, sld = _split_excess(excess, m if x @ m > 0 else -m, n_in)
        return Resolution(combine(side, cone.edge_labels[i]), reaction, excess,
                          pivot_excess=piv, slide_excess=sld, pivot_edge=i)

    n = cone.n_edges
    normals = cone.face_normals
    if len(support) == 2:
        i, j = support
        if j == i + 1:
            face = i
        elif i == 0 and j == n - 1:
            face = n - 1
        else:
            raise RuntimeError(f"projection support {support} is not a face")
        label = cone.face_labels[face]
        first = cone.faces[face][0]
        if label in (Mode.CW, Mode.CCW):
            return Resolution(label, reaction, excess, pivot_excess=dist, pivot_edge=first)
        return Resolution(label, reaction, excess, slide_excess=dist)
    if len(support) == 1:
        i = support[0]
        label = cone.mixed_labels()[i]
        prev_f, next_f = (i - 1) % n, i
        if cone.face_labels[prev_f] in (Mode.CW, Mode.CCW):
            piv, sld = _split_excess(excess, normals[prev_f], normals[next_f])
        else:
            piv, sld = _split_excess(excess, normals[next_f], normals[prev_f])
        return Resolution(label, reaction, excess, pivot_excess=piv, slide_excess=sld,
                          pivot_edge=i)
    raise RuntimeError(f"unexpected projection support {support}")


def classify_mode(cone: PolyhedralCone, w_a, band: float = BOUNDARY_BAND) -> Mode:
    """Contact mode produced by the action wrench ``w_a``.

    Raises :class:`AmbiguousBoundary` inside the boundary band and
    :class:`ContactSeparation` when the action pulls the object away.
    """
    x = -np.asarray(w_a, dtype=float)
    if band > 0 and cone.boundary_angle(x) < band:
        raise AmbiguousBoundary("action wrench lies on a mode boundary")
    return resolve(cone, x).mode
