"""Quasi-static planar simulator: a cuboid against a straight surface.

Each step the commanded wrench plus gravity is resolved against the true
friction cone of the current contacts. Inside the cone nothing moves. Outside,
the body moves along the twist of the resolved mode with speed proportional
to how far ``-w_total`` sits outside the cone (first-order law, gain
``speed_gain``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import rot2
from .wrench import (
    ContactPoint,
    Mode,
    analytical_cone,
    force_to_wrench_frame,
    resolve,
)


class Penetration(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


class NoContact(RuntimeError):
    pass


@dataclass(frozen=True)
class Surface:
    slope: float = 0.0
    origin: tuple = (0.0, 0.0)
    mu: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.slope <= math.pi / 2 + 1e-12:
            raise ConfigError("slope must lie in [0, pi/2]")

    @property
    def tangent(self) -> np.ndarray:
        return np.array([math.cos(self.slope), math.sin(self.slope)])

    @property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.slope), math.cos(self.slope)])

    def distance(self, pts_B) -> np.ndarray:
        return (np.atleast_2d(pts_B) - np.asarray(self.origin, dtype=float)) @ self.normal


@dataclass(frozen=True)
class BodyState:
    pose: tuple  # (x, y, phi) of the object frame in the base frame
    half_extents: tuple
    mass: float
    moving: bool = False

    def __post_init__(self):
        if min(self.half_extents) <= 0 or self.mass <= 0:
            raise ConfigError("half extents and mass must be positive")

    @property
    def position(self) -> np.ndarray:
        return np.array(self.pose[:2], dtype=float)

    @property
    def phi(self) -> float:
        return float(self.pose[2])

    @property
    def diagonal(self) -> float:
        return 2.0 * math.hypot(*self.half_extents)

    def corners_W(self) -> np.ndarray:
        hw, hh = self.half_extents
        return np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]], dtype=float)

    def to_base(self, pts_W) -> np.ndarray:
        return np.atleast_2d(pts_W) @ rot2(self.phi).T + self.position


def resting_state(length: float, mass: float, surface: Surface, height: float | None = None,
                  offset: float = 0.0) -> BodyState:
    """Cuboid lying flat on ``surface``, bottom face centred at ``offset`` along it."""
    hw = length / 2.0
    hh = (length if height is None else height) / 2.0
    centre = np.asarray(surface.origin, dtype=float) + offset * surface.tangent + hh * surface.normal
    return BodyState((float(centre[0]), float(centre[1]), surface.slope), (hw, hh), mass)


@dataclass
class SimConfig:
    dt: float = 0.01
    motion_thresh_pos: float = 1e-4
    motion_thresh_ang: float = 1e-3
    max_force: float = 10.0
    speed_gain: float = 0.1  # (m/s)/N: 1 N of excess moves 1 mm per 10 ms step
    snap_tol: float = 5e-4
    gravity: float = 9.81
    seed: int = 0
    stiction: float = 1.0  # breakaway friction multiplier; 1 disables stiction
    length_scale: float | None = None  # moment scale; None uses the body diagonal

    def validate(self):
        for name in ("dt", "motion_thresh_pos", "motion_thresh_ang", "max_force",
                     "speed_gain", "snap_tol", "gravity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.stiction < 1.0:
            raise ConfigError("stiction multiplier must be >= 1")

    def scale_for(self, body: BodyState) -> float:
        return self.length_scale if self.length_scale else body.diagonal


@dataclass
class StepResult:
    state: BodyState
    reaction: np.ndarray
    mode: Mode
    contact_count: int
    contact_lost: bool
    clamped: bool = False
    contacts_B: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))


def detect_contacts(body: BodyState, surface: Surface, snap_tol: float = 5e-4,
                    mu: float | None = None) -> list[ContactPoint]:
    corners = body.corners_W()
    d = surface.distance(body.to_base(corners))
    if np.min(d) < -snap_tol:
        raise Penetration(f"corner {np.argmin(d)} is {-np.min(d):.3g} m below the surface")
    mu = surface.mu if mu is None else mu
    return [ContactPoint(corners[i], surface.normal, mu) for i in np.flatnonzero(d <= snap_tol)]


def gravity_wrench(body: BodyState, surface: Surface | None = None, g: float = 9.81) -> np.ndarray:
    """Gravity in the object frame; the frame sits at the centre of mass."""
    f = force_to_wrench_frame((0.0, -body.mass * g), body.phi)
    return np.array([f[0], f[1], 0.0])


def ground_truth_cone(body: BodyState, surface: Surface, cfg: SimConfig, mu: float | None = None):
    contacts = detect_contacts(body, surface, cfg.snap_tol, mu)
    if not contacts:
        raise NoContact("object is not touching the surface")
    return analytical_cone(contacts, body.phi, cfg.scale_for(body))


def _moved_pose(body: BodyState, pivot_B, dphi: float, shift) -> tuple:
    pos = body.position
    if dphi != 0.0:
        pos = pivot_B + rot2(dphi) @ (pos - pivot_B)
    pos = pos + shift
    return (float(pos[0]), float(pos[1]), body.phi + dphi)


def apply_command(state: BodyState, surface: Surface, w_cmd, cfg: SimConfig) -> StepResult:
    cfg.validate()
    w_cmd = np.array(w_cmd, dtype=float)
    clamped = False
    fn = math.hypot(w_cmd[0], w_cmd[1])
    if fn > cfg.max_force:
        w_cmd[:2] *= cfg.max_force / fn
        clamped = True
    w_total = w_cmd + gravity_wrench(state, surface, cfg.gravity)

    mu = surface.mu * cfg.stiction if not state.moving else surface.mu
    cone = ground_truth_cone(state, surface, cfg, mu)
    n_before = cone.n_edges // 2
    x = -w_total
    res = resolve(cone, x)
    if res.mode is Mode.STATIC:
        contacts_B = state.to_base(np.array([c.p for c in cone.contacts]))
        new_state = state if not state.moving else replace(state, moving=False)
        return StepResult(new_state, res.reaction, res.mode, n_before, False, clamped, contacts_B)

    L = cfg.scale_for(state)
    dphi = 0.0
    pivot_B = state.position
    if res.mode.pivot is not None:
        p = cone.contacts[cone.edge_contact[res.pivot_edge]].p
        omega = cfg.speed_gain * res.pivot_excess / math.sqrt(p[0] ** 2 + p[1] ** 2 + L * L)
        dphi = (omega if res.mode.pivot is Mode.CCW else -omega) * cfg.dt
        pivot_B = state.to_base(p)[0]
    shift = np.zeros(2)
    if res.mode.slide is not None:
        v = cfg.speed_gain * res.slide_excess
        shift = (v if res.mode.slide is Mode.SR else -v) * cfg.dt * surface.tangent

    new_pose = _moved_pose(state, pivot_B, dphi, shift)
    trial = replace(state, pose=new_pose, moving=True)
    if dphi != 0.0 and np.min(surface.distance(trial.to_base(trial.corners_W()))) < 0.0:
        # stop the rotation where the first corner touches down
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            t = replace(state, pose=_moved_pose(state, pivot_B, mid * dphi, shift))
            if np.min(surface.distance(t.to_base(t.corners_W()))) < 0.0:
                hi = mid
            else:
                lo = mid
        trial = replace(state, pose=_moved_pose(state, pivot_B, lo * dphi, shift), moving=True)

    contacts = detect_contacts(trial, surface, cfg.snap_tol)
    contacts_B = trial.to_base(np.array([c.p for c in contacts])) if contacts else np.zeros((0, 2))
    return StepResult(trial, res.reaction, res.mode, len(contacts), len(contacts) < n_before,
                      clamped, contacts_B)


def has_moved(history, cfg: SimConfig) -> bool:
    """Strictly-above-threshold motion between the first and last pose."""
    if len(history) < 2:
        raise ValueError("need at least two states")
    a, b = history[0], history[-1]
    pa = a.pose if isinstance(a, BodyState) else a
    pb = b.pose if isinstance(b, BodyState) else b
    dpos = math.hypot(pb[0] - pa[0], pb[1] - pa[1])
    return dpos > cfg.motion_thresh_pos or abs(pb[2] - pa[2]) > cfg.motion_thresh_ang


LOG_COLUMNS = ("t", "x", "y", "phi", "mode", "fx", "fy", "tau", "contacts",
               "c0x", "c0y", "c1x", "c1y")


class Simulator:
    """Stateful wrapper: the "system" probed by the estimator and controller.

    ``apply_action`` takes the net action wrench (gravity compensated), the
    way a gravity-compensated arm would command it.
    """

    def __init__(self, state: BodyState, surface: Surface, cfg: SimConfig | None = None,
                 press: float = 5.0):
        self.cfg = cfg or SimConfig()
        self.cfg.validate()
        self.surface = surface
        self.state = state
        self.t = 0.0
        self.steps = 0
        self.last: StepResult | None = None
        self.log: list[tuple] = []
        self.rng = np.random.default_rng(self.cfg.seed)
        self.contact_count = len(detect_contacts(state, surface, self.cfg.snap_tol))
        # the arm starts by pressing the object onto the surface
        n_W = force_to_wrench_frame(surface.normal, state.phi)
        self.initial_reaction = np.array([press * n_W[0], press * n_W[1], 0.0])

    @property
    def length_scale(self) -> float:
        return self.cfg.scale_for(self.state)

    def gravity(self) -> np.ndarray:
        return gravity_wrench(self.state, self.surface, self.cfg.gravity)

    def apply_command(self, w_cmd) -> StepResult:
        res = apply_command(self.state, self.surface, w_cmd, self.cfg)
        self.state = res.state
        self.contact_count = res.contact_count
        self.last = res
        self.t += self.cfg.dt
        self.steps += 1
        self._record(res)
        return res

    def apply_action(self, w_a) -> StepResult:
        return self.apply_command(np.asarray(w_a, dtype=float) - self.gravity())

    def has_moved(self, since) -> bool:
        return has_moved([since, self.state], self.cfg)

    def reset(self, state: BodyState):
        self.state = replace(state, moving=False)
        self.contact_count = len(detect_contacts(self.state, self.surface, self.cfg.snap_tol))

    def _record(self, res: StepResult):
        c = np.full(4, np.nan)
        flat = res.contacts_B.reshape(-1)[:4]
        c[: len(flat)] = flat
        x, y, phi = res.state.pose
        self.log.append((self.t, x, y, phi, res.mode.value, *map(float, res.reaction),
                         res.contact_count, *map(float, c)))
