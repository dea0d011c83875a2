"""Friction-cone estimation and contact-mode control for planar objects."""
from .control import Gains, TaskSpec, command_wrench, desired_reaction, pd_magnitude, run_task
from .estimator import EstimatorConfig, estimate_cone, finalize, label_faces, transform_cone
from .evaluation import MetricConfig, metric_v, summarize, truncate_cone
from .sim import BodyState, SimConfig, Simulator, Surface, ground_truth_cone, resting_state
from .wrench import Mode, PolyhedralCone, analytical_cone, classify_mode, transform_edge

__all__ = [
    "BodyState", "EstimatorConfig", "Gains", "MetricConfig", "Mode", "PolyhedralCone",
    "SimConfig", "Simulator", "Surface", "TaskSpec", "analytical_cone", "classify_mode",
    "command_wrench", "desired_reaction", "estimate_cone", "finalize", "ground_truth_cone",
    "label_faces", "metric_v", "pd_magnitude", "resting_state", "run_task", "summarize",
    "transform_cone", "transform_edge", "truncate_cone",
]
