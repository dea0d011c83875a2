"""Planar/3D vector helpers, origin-free convex hulls, clipping and volumes.

Everything here works on plain ``numpy`` arrays. Polytopes are small (tens of
vertices) so clarity wins over speed; hulls are delegated to qhull.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull, QhullError

# triple-product / coplanarity tolerance; wrench magnitudes are O(1-10)
DEGENERACY_EPS = 1e-9
# face residual tolerance used for hull containment and face merging
FACE_EPS = 1e-9


class DegenerateInput(ValueError):
    """Points are affinely dependent (collinear or coplanar)."""


class NoIntersection(ValueError):
    """Ray is parallel to the plane or points away from it."""


def rot2(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def cross2(u, v) -> float:
    """z component of ``(u, 0) x (v, 0)``."""
    return float(u[0] * v[1] - u[1] * v[0])


def normalize(v, eps: float = 0.0) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n <= eps:
        raise ValueError("cannot normalize a zero-length vector")
    return v / n


def angle_between(u, v) -> float:
    """Angle in rad between two nonzero vectors (robust near 0 and pi)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


@lru_cache(maxsize=64)
def _index_sets(n: int, k: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), k)), dtype=int).reshape(-1, k)


def cone_projection(rays, x, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Nearest point of the conic hull of ``rays`` to ``x`` and its ray weights.

    Exact in 3D: ``x`` is inside when some three rays hold it with
    non-negative weights, and otherwise its nearest point lies on the cone of
    at most two rays, solved in closed form for every pair. Inside points are
    returned unchanged.
    """
    R = np.atleast_2d(np.asarray(rays, dtype=float))
    x = np.asarray(x, dtype=float)
    n = len(R)
    coef = np.zeros(n)
    xn = float(np.linalg.norm(x))
    if xn == 0.0 or n == 0:
        return np.zeros(3), coef
    rn = np.linalg.norm(R, axis=1)

    if n >= 3:
        T = _index_sets(n, 3)
        M = R[T].transpose(0, 2, 1)
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-12 * np.prod(rn[T], axis=1)
        if ok.any():
            sol = np.linalg.solve(M[ok], np.broadcast_to(x, (int(ok.sum()), 3))[..., None])[..., 0]
            good = np.all(sol * rn[T[ok]] >= -tol * xn, axis=1)
            if good.any():
                k = int(np.argmax(good))
                coef[T[ok][k]] = np.maximum(sol[k], 0.0)
                return x.copy(), coef

    best_d, best_p, best_c = xn, np.zeros(3), coef.copy()
    # single rays
    t = (R @ x) / rn**2
    for i in np.flatnonzero(t > 0):
        p = t[i] * R[i]
        d = float(np.linalg.norm(x - p))
        if d < best_d:
            best_d, best_p = d, p
            best_c = np.zeros(n)
            best_c[i] = t[i]
    # pairs
    if n >= 2:
        P = _index_sets(n, 2)
        a, b = R[P[:, 0]], R[P[:, 1]]
        aa, bb, ab = rn[P[:, 0]] ** 2, rn[P[:, 1]] ** 2, np.einsum("ij,ij->i", a, b)
        ax, bx = a @ x, b @ x
        det = aa * bb - ab * ab
        ok = det > 1e-12 * aa * bb
        alpha = np.where(ok, (bb * ax - ab * bx) / np.where(ok, det, 1.0), -1.0)
        beta = np.where(ok, (aa * bx - ab * ax) / np.where(ok, det, 1.0), -1.0)
        for k in np.flatnonzero((alpha > 0) & (beta > 0)):
            p = alpha[k] * a[k] + beta[k] * b[k]
            d = float(np.linalg.norm(x - p))
            if d < best_d:
                best_d, best_p = d, p
                best_c = np.zeros(n)
                best_c[P[k]] = alpha[k], beta[k]
    return best_p, best_c


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane orthogonal to ``normal``.

    ``(u, v, normal)`` is right handed, so counter-clockwise order in (u, v)
    is counter-clockwise when looking against the normal.
    """
    n = normalize(normal)
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    u = normalize(np.cross(helper, n))
    v = np.cross(n, u)
    return u, v


@dataclass(frozen=True)
class Plane:
    normal: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normal", normalize(self.normal))
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))

    def signed_distance(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.point) @ self.normal


@dataclass
class ConvexPolytope:
    """Bounded convex polytope in R^3.

    ``faces`` hold vertex indices ordered counter-clockwise seen from outside;
    ``normals``/``offsets`` describe the halfspaces ``normal . x <= offset``.
    """

    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    faces: list = field(default_factory=list)
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    offsets: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def contains(self, x, tol: float = FACE_EPS) -> bool:
        if self.is_empty:
            return False
        return bool(np.all(self.normals @ np.asarray(x, dtype=float) - self.offsets <= tol))

    def edges(self) -> set[tuple[int, int]]:
        out = set()
        for f in self.faces:
            for a, b in zip(f, np.roll(f, -1)):
                out.add((min(a, b), max(a, b)))
        return out


def hull_2d(points: np.ndarray) -> list[int]:
    """Indices of the strict convex hull of 2D points, counter-clockwise.

    Andrew's monotone chain; collinear boundary points are dropped.
    """
    pts = np.asarray(points, dtype=float)
    order = sorted(range(len(pts)), key=lambda i: (pts[i, 0], pts[i, 1]))
    if len(order) <= 2:
        return order
    scale = max(1.0, float(np.abs(pts).max()))
    tol = 1e-12 * scale * scale

    def turn(o, a, b):
        return cross2(pts[a] - pts[o], pts[b] - pts[o])

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and turn(lower[-2], lower[-1], i) <= tol:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(order):
        while len(upper) >= 2 and turn(upper[-2], upper[-1], i) <= tol:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def order_on_plane(points: np.ndarray, normal) -> list[int]:
    """Counter-clockwise hull order (about ``normal``) of points lying on a plane."""
    u, v = plane_basis(normal)
    pts = np.asarray(points, dtype=float)
    return hull_2d(np.column_stack([pts @ u, pts @ v]))


def polygon_area_3d(points: np.ndarray, normal) -> float:
    """Area of the convex hull of coplanar 3D points."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return 0.0
    u, v = plane_basis(normal)
    p2 = np.column_stack([pts @ u, pts @ v])
    idx = hull_2d(p2)
    if len(idx) < 3:
        return 0.0
    q = p2[idx]
    x, y = q[:, 0], q[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def affine_rank(points: np.ndarray, eps: float = DEGENERACY_EPS) -> int:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0
    centred = pts - pts.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    scale = max(1.0, float(np.abs(pts).max()))
    return int(np.sum(s > eps * scale))


def convex_hull_3d(points) -> ConvexPolytope:
    """Minimal convex polytope containing ``points``.

    Raises :class:`DegenerateInput` when the points do not span 3D.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 4 or affine_rank(pts) < 3:
        raise DegenerateInput(f"{len(pts)} points do not span a volume")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:  # pragma: no cover - rank check catches these
        raise DegenerateInput(str(exc)) from exc

    # qhull triangulates; merge coplanar triangles into polygonal faces
    groups: list[tuple[np.ndarray, float, set[int]]] = []
    scale = max(1.0, float(np.abs(pts).max()))
    for simplex, eq in zip(hull.simplices, hull.equations):
        n, d = eq[:3], -eq[3]
        for gn, gd, members in groups:
            if np.linalg.norm(gn - n) < 1e-7 and abs(gd - d) < 1e-7 * scale:
                members.update(int(i) for i in simplex)
                break
        else:
            groups.append((n, d, set(int(i) for i in simplex)))

    faces_global: list[list[int]] = []
    normals, offsets = [], []
    for n, _, members in groups:
        members = sorted(members)
        loop = order_on_plane(pts[members], n)
        if len(loop) < 3:
            continue
        faces_global.append([members[i] for i in loop])
        normals.append(n)
    used = sorted({i for f in faces_global for i in f})
    remap = {g: k for k, g in enumerate(used)}
    verts = pts[used]
    faces = [np.array([remap[g] for g in f]) for f in faces_global]
    normals = np.array(normals)
    # recompute offsets from the kept vertices so residuals are tight
    offsets = np.array([float(np.max(verts[f] @ nrm)) for f, nrm in zip(faces, normals)])
    return ConvexPolytope(verts, faces, normals, offsets)


def polytope_volume(p: ConvexPolytope) -> float:
    if p.is_empty:
        return 0.0
    centre = p.vertices.mean(axis=0)
    vol = 0.0
    for f in p.faces:
        x = p.vertices[f] - centre
        for i in range(1, len(f) - 1):
            vol += np.dot(x[0], np.cross(x[i], x[i + 1]))
    return max(0.0, vol / 6.0)


def clip_polytope(p: ConvexPolytope, h: Plane, eps: float = 1e-12) -> ConvexPolytope:
    """Intersect ``p`` with the halfspace on the anti-normal side of ``h``."""
    if p.is_empty:
        return p
    d = h.signed_distance(p.vertices)
    if np.all(d <= eps):
        return p
    if np.all(d >= -eps):
        return ConvexPolytope()
    kept = [p.vertices[d <= eps]]
    for a, b in p.edges():
        if (d[a] < -eps and d[b] > eps) or (d[a] > eps and d[b] < -eps):
            t = d[a] / (d[a] - d[b])
            kept.append((p.vertices[a] + t * (p.vertices[b] - p.vertices[a]))[None, :])
    pts = np.vstack(kept)
    try:
        return convex_hull_3d(pts)
    except DegenerateInput:
        return ConvexPolytope()


def intersect_polytopes(a: ConvexPolytope, b: ConvexPolytope) -> ConvexPolytope:
    out = a
    for n, off in zip(b.normals, b.offsets):
        out = clip_polytope(out, Plane(n, n * off))
        if out.is_empty:
            break
    return out


def ray_plane_intersection(origin, direction, plane: Plane, eps: float = 1e-9) -> np.ndarray:
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    denom = float(np.dot(direction, plane.normal))
    if abs(denom) <= eps:
        raise NoIntersection("ray is parallel to the plane")
    t = float(np.dot(plane.point - origin, plane.normal)) / denom
    if t < 0:
        raise NoIntersection("plane lies behind the ray origin")
    return origin + t * direction
