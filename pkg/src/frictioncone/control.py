"""Contact-mode controller built on a labelled friction cone.

The action wrench is ``w_a = -(w_n + beta * w_des)``: ``w_des`` sits on the
boundary piece of the target mode (face mean or shared edge) and ``w_n``
pushes out through it. The out-of-plane magnitude comes from a PD law on the
task error, so the object slows down as it reaches the target.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .estimator import transform_cone
from .geometry import normalize
from .sim import detect_contacts
from .wrench import Mode, PolyhedralCone, coplanarity_normal

log = logging.getLogger(__name__)


class UnknownMode(ValueError):
    pass


class ForceCapExceeded(UserWarning):
    pass


class TaskTimeout(RuntimeError):
    pass


class ContactLostUnexpectedly(RuntimeError):
    pass


@dataclass
class Gains:
    kp: float = 2.5
    kd: float = 0.79
    ki: float = 0.0  # integral action on top of the PD law; 0 disables it
    beta: float = 10.0
    beta_end: float | None = None  # ramp target; None keeps beta constant
    ramp_steps: int = 100
    split: float = 0.5  # share of the magnitude on the pivot face in mixed modes
    k_hold: float = 10.0  # N/rad, angle hold while sliding on one contact

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0 or self.ki < 0:
            raise ValueError("PD gains must be non-negative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not 0.0 <= self.split <= 1.0:
            raise ValueError("split must lie in [0, 1]")

    def beta_at(self, step: int) -> float:
        if self.beta_end is None:
            return self.beta
        s = min(1.0, step / max(1, self.ramp_steps))
        return self.beta + s * (self.beta_end - self.beta)


# An estimated cone is an inner approximation, so a pure PD push stalls short of
# the target by the gap to the true face. An integral term that only charges
# while the object is stuck or creeping closes that gap without winding up
# during normal motion.
PIVOT_GAINS = Gains(beta=10.0, ki=10.0)
SLIDE_GAINS = Gains(beta=2.0, ki=10.0)


@dataclass
class TaskSpec:
    kind: str  # "pivot" or "slide"
    target: float  # rad for pivots, m along the surface tangent for slides
    tolerance: float
    timeout: int = 8000
    hold_steps: int = 20

    def __post_init__(self):
        if self.kind not in ("pivot", "slide"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.hold_steps < 1 or self.timeout < 1:
            raise ValueError("hold_steps and timeout must be positive")

    @property
    def mode(self) -> Mode:
        if self.kind == "pivot":
            return Mode.CW if self.target < 0 else Mode.CCW
        return Mode.SR if self.target > 0 else Mode.SL


def _check_mode(cone: PolyhedralCone, mode: Mode):
    if mode is Mode.STATIC or not cone.face_labels:
        raise UnknownMode(f"no boundary for mode {mode!r} on this cone")
    if mode.is_mixed:
        if mode not in cone.mixed_labels():
            raise UnknownMode(f"cone has no edge labelled {mode.value}")
    elif mode not in cone.face_labels:
        raise UnknownMode(f"cone has no face labelled {mode.value}")


def desired_reaction(cone: PolyhedralCone, mode: Mode) -> np.ndarray:
    """Unit reaction on the boundary of ``mode``: face mean or shared edge."""
    _check_mode(cone, mode)
    if mode.is_mixed:
        return cone.edges[cone.edge_index(mode)].copy()
    i, j = cone.faces[cone.face_index(mode)]
    return normalize(cone.edges[i] + cone.edges[j])


def _mixed_normals(cone: PolyhedralCone, mode: Mode) -> tuple[np.ndarray, np.ndarray]:
    return (cone.face_normals[cone.face_index(mode.pivot)],
            cone.face_normals[cone.face_index(mode.slide)])


def clamp_force(w, max_force: float | None) -> tuple[np.ndarray, bool]:
    w = np.array(w, dtype=float)
    if max_force is None:
        return w, False
    fn = math.hypot(w[0], w[1])
    if fn <= max_force:
        return w, False
    w[:2] *= max_force / fn
    warnings.warn(f"action force {fn:.3g} N clamped to {max_force:.3g} N", ForceCapExceeded,
                  stacklevel=3)
    return w, True


def command_wrench(cone: PolyhedralCone, mode: Mode, gains: Gains, a=0.0,
                   max_force: float | None = None, step: int = 0) -> np.ndarray:
    """Action wrench holding (``a = 0``) or entering ``mode``.

    For mixed modes ``a`` may be a pair ``(a1, a2)`` on the pivot and slide
    faces; a scalar is split by ``gains.split``.
    """
    w_des = desired_reaction(cone, mode)
    if mode.is_mixed:
        n1, n2 = _mixed_normals(cone, mode)
        a1, a2 = (a * gains.split, a * (1 - gains.split)) if np.isscalar(a) else a
        w_n = a1 * n1 + a2 * n2
    else:
        w_n = a * cone.face_normals[cone.face_index(mode)]
    w_a = -(w_n + gains.beta_at(step) * w_des)
    return clamp_force(w_a, max_force)[0]


def pd_magnitude(e: float, e_dot: float, gains: Gains) -> float:
    """Out-of-plane magnitude; never pushes back against the target mode."""
    return max(0.0, gains.kp * e + gains.kd * e_dot)


def edge_slide_wrench(cone: PolyhedralCone, mode: Mode, gains: Gains, a_slide: float,
                      a_pivot: float, step: int = 0) -> np.ndarray:
    """Slide on a single contact while holding the angle.

    ``mode`` is the mixed label of the shared edge (pivot face of the contact
    left touching, slide direction wanted). The slide push lies in the pivot
    face's plane, so it does not rotate; ``a_pivot`` is a signed correction
    along that plane's outward normal.
    """
    w_des = desired_reaction(cone, mode)
    i, j = cone.faces[cone.face_index(mode.pivot)]
    other = cone.edges[j] if np.allclose(cone.edges[i], w_des) else cone.edges[i]
    m = cone.face_normals[cone.face_index(mode.pivot)]
    t = normalize(np.cross(m, w_des))
    if t @ other > 0:
        t = -t
    return -(a_slide * t + a_pivot * m + gains.beta_at(step) * w_des)


@dataclass
class TaskResult:
    task: TaskSpec
    success: bool
    steps: int
    duration: float
    final_error: float
    drift: float  # pivot-contact travel (pivots) or off-target angle change (slides)
    translation: float
    rotation: float
    cone: PolyhedralCone
    rows: list = field(default_factory=list)


TRAJECTORY_COLUMNS = ("e", "a", "target_mode")


def _contact_points(system) -> np.ndarray:
    cs = detect_contacts(system.state, system.surface, system.cfg.snap_tol)
    return system.state.to_base(np.array([c.p for c in cs])) if cs else np.zeros((0, 2))


def run_task(system, cone: PolyhedralCone, task: TaskSpec, gains: Gains | None = None,
             raise_on_failure: bool = True) -> TaskResult:
    """Drive ``system`` through one pivot or slide task.

    Pivot tasks rotate the pivoting face's edges of ``cone`` with the measured
    angle change each step; the returned result carries the final cone.
    """
    if gains is None:
        gains = PIVOT_GAINS if task.kind == "pivot" else SLIDE_GAINS
    mode = task.mode
    _check_mode(cone, mode)
    start = system.state
    phi0 = start.phi
    # track the touching corner that sits furthest along the slide direction
    corner = _anchor_corner(system, 1.0 if task.target >= 0 else -1.0)
    pos0 = _corner_position(system.state, corner)
    tangent = system.surface.tangent
    contacts0 = _contact_points(system)
    n0 = system.contact_count
    if n0 == 0:
        raise ContactLostUnexpectedly("object is not in contact")

    work = cone
    m_hat = n_out = None
    if task.kind == "pivot":
        i, j = cone.faces[cone.face_index(mode)]
        m_hat = coplanarity_normal(cone.edges[i], cone.edges[j])
        n_out = cone.face_normals[cone.face_index(mode)].copy()
    single = task.kind == "slide" and n0 == 1
    if single:
        pivot_face = _single_contact_pivot(cone, system)
        edge_mode = Mode(pivot_face.value + mode.value)
        _check_mode(cone, edge_mode)

    sign = 1.0 if task.target >= 0 else -1.0
    goal = abs(task.target)
    rows = []
    held = 0
    e_prev = None
    e = goal
    integral = 0.0
    creep = 5e-4  # progress per step, relative to the error, below which we count as stuck
    for step in range(task.timeout):
        s = system.state
        if task.kind == "pivot":
            progress = sign * (s.phi - phi0)
        else:
            progress = sign * float((_corner_position(s, corner) - pos0) @ tangent)
        e = goal - progress
        e_dot = 0.0 if e_prev is None else (e - e_prev) / system.cfg.dt
        e_prev_step, e_prev = e_prev, e
        if abs(e) <= task.tolerance:
            held += 1
            if held > task.hold_steps:
                break
        else:
            held = 0
            if e_prev_step is not None and abs(e - e_prev_step) < creep * abs(e):
                integral += e * system.cfg.dt
        a = max(0.0, pd_magnitude(e, e_dot, gains) + gains.ki * integral) if gains.ki else \
            pd_magnitude(e, e_dot, gains)

        if task.kind == "pivot":
            dphi = s.phi - phi0
            work = transform_cone(cone, dphi, mode, m_hat) if dphi != 0.0 else cone
            w_des = desired_reaction(work, mode)
            w_a = -(a * n_out + gains.beta_at(step) * w_des)
        elif single:
            a_pivot = gains.k_hold * (s.phi - phi0) * (1.0 if pivot_face is Mode.CW else -1.0)
            w_a = edge_slide_wrench(cone, edge_mode, gains, a, a_pivot, step)
        else:
            w_a = command_wrench(cone, mode, gains, a, step=step)

        res = system.apply_action(w_a)
        rows.append(tuple(system.log[-1]) + (float(e), float(a), mode.value))
        if res.contact_count == 0:
            raise ContactLostUnexpectedly("object left the surface")
        if task.kind == "slide" and res.contact_count < n0:
            raise ContactLostUnexpectedly("a contact separated while sliding")
    success = abs(e) <= task.tolerance and held > 0

    end = system.state
    contacts1 = _contact_points(system)
    if task.kind == "pivot" and len(contacts0) and len(contacts1):
        d = np.linalg.norm(contacts1[:, None, :] - contacts0[None, :, :], axis=2)
        drift = float(d.min(axis=1).min())
    elif task.kind == "slide":
        drift = abs(end.phi - phi0)
    else:
        drift = math.nan
    result = TaskResult(
        task, success, len(rows), len(rows) * system.cfg.dt, float(e), drift,
        float((_corner_position(end, corner) - pos0) @ tangent), end.phi - phi0, work, rows,
    )
    if not success and raise_on_failure:
        raise TaskTimeout(f"{task.kind} task missed its target by {e:.4g} after {len(rows)} steps")
    return result


def _anchor_corner(system, direction: float) -> int:
    corners = system.state.corners_W()
    d = system.surface.distance(system.state.to_base(corners))
    touching = np.flatnonzero(d <= system.cfg.snap_tol)
    if len(touching) == 0:
        return int(np.argmin(d))
    along = system.state.to_base(corners[touching]) @ system.surface.tangent
    return int(touching[np.argmax(direction * along)])


def _corner_position(state, corner: int) -> np.ndarray:
    return state.to_base(state.corners_W()[corner])[0]


def _single_contact_pivot(cone: PolyhedralCone, system) -> Mode:
    """Pivot face whose contact is the one still touching.

    After a cw pivot the object rests on the contact of the cw face; the
    current tilt sign gives it away for either direction.
    """
    tilt = system.state.phi - system.surface.slope
    return Mode.CW if tilt < 0 else Mode.CCW


def run_tasks(system, cone: PolyhedralCone, tasks, gains_for=None) -> list[TaskResult]:
    """Run tasks back to back, handing the transformed cone forward."""
    out = []
    for task in tasks:
        gains = gains_for(task) if gains_for else None
        res = run_task(system, cone, task, gains)
        cone = res.cone
        out.append(res)
    return out
