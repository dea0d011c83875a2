"""Estimation sweeps and manipulation trials shared by the CLI, scripts and tests."""
from __future__ import annotations

import copy
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import Scenario
from .control import TaskSpec, TaskTimeout, ContactLostUnexpectedly, run_task
from .estimator import (
    EstimateState,
    LabelConflict,
    TooFewEdges,
    estimate_cone,
    finalize,
    label_faces,
)
from .evaluation import metric_v
from .sim import SimConfig, Simulator, Surface, ground_truth_cone, resting_state
from .wrench import PolyhedralCone

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("length", "mu", "slope_deg", "rep", "seed", "v", "v_final", "probes",
                  "samples", "max_outside_deg", "labelled")
SUMMARY_COLUMNS = ("length", "mu", "slope_deg", "n", "min", "q1", "median", "q3", "max")
PHASE_COLUMNS = ("cone", "trial", "phase", "success", "steps", "duration", "final_error",
                 "drift", "translation", "rotation_deg")


def run_seed(base: int, *key: int) -> int:
    """Independent 32-bit seed for one run, derived from the scenario seed."""
    return int(np.random.SeedSequence([int(base), *map(int, key)]).generate_state(1)[0])


def make_system(length: float, mu: float, slope_deg: float, sc: Scenario,
                sim_cfg: SimConfig | None = None, offset: float = 0.0) -> Simulator:
    surface = Surface(math.radians(slope_deg), (0.0, 0.0), mu)
    body = resting_state(length, sc.mass, surface, offset=offset)
    return Simulator(body, surface, copy.deepcopy(sim_cfg or sc.sim), press=sc.press)


@dataclass
class EstimateRun:
    length: float
    mu: float
    slope_deg: float
    rep: int
    seed: int
    state: EstimateState
    ground_truth: PolyhedralCone
    cone: PolyhedralCone | None  # finalised, labelled four-edge cone
    v: float  # metric on the full estimate
    v_final: float  # metric on the four-edge cone (nan when finalisation failed)
    max_outside_deg: float
    error: str = ""

    def row(self) -> tuple:
        return (self.length, self.mu, self.slope_deg, self.rep, self.seed, self.v, self.v_final,
                self.state.probes, len(self.state.W), self.max_outside_deg,
                int(self.cone is not None))


def estimate_run(length: float, mu: float, slope_deg: float, rep: int, sc: Scenario,
                 cell: int = 0) -> EstimateRun:
    seed = run_seed(sc.seed, cell, rep)
    system = make_system(length, mu, slope_deg, sc, replace(sc.sim, seed=seed))
    start = system.state
    gt = ground_truth_cone(start, system.surface, system.cfg)
    est_cfg = replace(sc.estimator, seed=seed)
    state = estimate_cone(system, est_cfg)
    system.reset(start)
    outside = max(gt.angle_outside(w) for w in state.W)
    v = metric_v(state.P_bar, gt, sc.metric)
    cone, v_final, err = None, math.nan, ""
    try:
        cone = label_faces(system, finalize(state), est_cfg)
        v_final = metric_v(cone, gt, sc.metric)
    except (TooFewEdges, LabelConflict) as exc:
        err = str(exc)
        log.warning("run L=%g mu=%g slope=%g rep=%d: %s", length, mu, slope_deg, rep, exc)
    system.reset(start)
    return EstimateRun(length, mu, slope_deg, rep, seed, state, gt, cone, v, v_final,
                       math.degrees(outside), err)


def _task(args):
    return estimate_run(*args)


def run_sweep(sc: Scenario) -> list[EstimateRun]:
    """Every (length, mu, slope) cell times ``repetitions``, in a fixed order."""
    jobs = [(L, mu, s, rep, sc, cell)
            for cell, (L, mu, s) in enumerate(sc.cells()) for rep in range(sc.repetitions)]
    if sc.jobs > 1:
        with ProcessPoolExecutor(sc.jobs) as pool:
            return list(pool.map(_task, jobs))
    return [_task(j) for j in jobs]


def best_run(runs: list[EstimateRun], worst: bool = False) -> EstimateRun:
    ok = [r for r in runs if r.cone is not None]
    if not ok:
        raise LabelConflict("no run produced a labelled cone")
    key = (lambda r: (r.v_final, -r.rep)) if not worst else (lambda r: (-r.v_final, -r.rep))
    return max(ok, key=key)


@dataclass
class TrialResult:
    cone_name: str
    trial: int
    results: list  # TaskResult per phase
    rows: list  # trajectory rows across phases
    failure: str = ""

    @property
    def success(self) -> bool:
        return not self.failure and all(r.success for r in self.results)


def manipulation_tasks(sc: Scenario) -> list[TaskSpec]:
    m = sc.manipulation
    return [
        TaskSpec("pivot", math.radians(m.pivot_deg), math.radians(m.pivot_tol_deg),
                 m.pivot_timeout, m.hold_steps),
        TaskSpec("slide", m.slide, m.slide_tol, m.slide_timeout, m.hold_steps),
    ]


def manipulation_trial(cone: PolyhedralCone | None, sc: Scenario, trial: int,
                       cone_name: str = "analytical") -> TrialResult:
    """Pivot then slide one object; ``cone=None`` uses the analytical cone."""
    m = sc.manipulation
    seed = run_seed(sc.seed, 1000, trial)
    rng = np.random.default_rng(seed)
    offset = float(rng.uniform(-m.placement_jitter, m.placement_jitter))
    sim_cfg = replace(sc.sim, seed=seed, max_force=m.max_force)
    system = make_system(m.length, m.mu, m.slope_deg, sc, sim_cfg, offset)
    if cone is None:
        cone = ground_truth_cone(system.state, system.surface, system.cfg)
    results, rows, failure = [], [], ""
    for task in manipulation_tasks(sc):
        gains = m.pivot_gains if task.kind == "pivot" else m.slide_gains
        try:
            res = run_task(system, cone, task, gains, raise_on_failure=False)
        except ContactLostUnexpectedly as exc:
            failure = f"{task.kind}: {exc}"
            break
        results.append(res)
        rows.extend(res.rows)
        cone = res.cone
        if not res.success:
            failure = str(TaskTimeout(f"{task.kind} missed its target by {res.final_error:.4g}"))
            break
    return TrialResult(cone_name, trial, results, rows, failure)


def phase_rows(trial: TrialResult) -> list[tuple]:
    return [(trial.cone_name, trial.trial, r.task.kind, int(r.success), r.steps, r.duration,
             r.final_error, r.drift, r.translation, math.degrees(r.rotation))
            for r in trial.results]
