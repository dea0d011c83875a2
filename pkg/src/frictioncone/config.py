"""Scenario configuration: nested dataclasses loaded from YAML."""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field

import yaml

from .control import Gains
from .estimator import EstimatorConfig
from .evaluation import MetricConfig
from .sim import ConfigError, SimConfig


@dataclass
class ManipulationConfig:
    length: float = 0.10
    mu: float = 0.5
    slope_deg: float = 0.0
    pivot_deg: float = -20.0
    pivot_tol_deg: float = 0.5
    slide: float = 0.06  # m
    slide_tol: float = 3e-3  # m
    pivot_timeout: int = 8000
    slide_timeout: int = 8000
    hold_steps: int = 20
    trials: int = 5
    max_force: float = 20.0  # N; the press plus beta = 10 exceeds the 10 N sim default
    placement_jitter: float = 0.01  # m, seeded start offset along the surface per trial
    pivot_gains: Gains = field(default_factory=lambda: Gains(beta=10.0, ki=10.0))
    slide_gains: Gains = field(default_factory=lambda: Gains(beta=2.0, ki=10.0))


@dataclass
class Scenario:
    lengths: list = field(default_factory=lambda: [0.05, 0.10, 0.30])
    mus: list = field(default_factory=lambda: [0.5, 0.6, 0.7])
    slopes_deg: list = field(default_factory=lambda: [0.0])
    mass: float = 0.1  # kg
    press: float = 5.0  # N, initial push onto the surface
    repetitions: int = 10
    seed: int = 0
    jobs: int = 1
    sim: SimConfig = field(default_factory=SimConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    manipulation: ManipulationConfig = field(default_factory=ManipulationConfig)

    def validate(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not (self.lengths and self.mus and self.slopes_deg):
            raise ConfigError("lengths, mus and slopes_deg must be non-empty")
        if any(v <= 0 for v in self.lengths) or any(v < 0 for v in self.mus):
            raise ConfigError("lengths must be positive and mus non-negative")
        if any(not 0 <= s <= 90 for s in self.slopes_deg):
            raise ConfigError("slopes_deg must lie in [0, 90]")
        if self.mass <= 0 or self.press <= 0:
            raise ConfigError("mass and press must be positive")
        if self.jobs < 1 or self.manipulation.trials < 1:
            raise ConfigError("jobs and trials must be >= 1")
        self.sim.validate()
        return self

    def cells(self):
        for L in self.lengths:
            for mu in self.mus:
                for s in self.slopes_deg:
                    yield float(L), float(mu), float(s)


PRESETS = {
    "grid": {},
    "slope": {"lengths": [0.30], "mus": [0.3], "slopes_deg": [0.0, 30.0, 60.0, 90.0]},
}


def _line_of(node, path) -> int | None:
    for key in path:
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if k.value == key:
                node = v
                break
        else:
            break
    return node.start_mark.line + 1 if node is not None else None


def _coerce(tp, value, where: str):
    origin = typing.get_origin(tp)
    if tp is float or tp == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is int or tp == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is list or tp == "list" or origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return [_coerce(float, v, f"{where}[{i}]") for i, v in enumerate(value)]
    if isinstance(tp, str) and "None" in tp:
        if value is None:
            return None
        return _coerce(tp.split("|")[0].strip(), value, where)
    return value


def _build(cls, data, path, root):
    if not isinstance(data, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = ".".join(path + [str(key)])
        if key not in fields:
            line = _line_of(root, path + [str(key)]) if root is not None else None
            raise ConfigError(f"unknown field {where!r}" + (f" (line {line})" if line else ""))
        f = fields[key]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        try:
            if dataclasses.is_dataclass(default):
                kwargs[key] = _build(type(default), value, path + [str(key)], root)
            else:
                kwargs[key] = _coerce(f.type, value, where)
        except (ConfigError, ValueError) as exc:
            if isinstance(exc, ConfigError) and "line" in str(exc):
                raise
            line = _line_of(root, path + [str(key)]) if root is not None else None
            raise ConfigError(f"{exc}" + (f" (line {line})" if line else "")) from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{'.'.join(path) or 'config'}: {exc}") from exc


def scenario_from_dict(data: dict, root=None) -> Scenario:
    return _build(Scenario, data or {}, [], root).validate()


def load_scenario(path=None, preset: str = "grid") -> Scenario:
    base = dict(PRESETS[preset])
    if path is None:
        return scenario_from_dict(base)
    with open(path) as fh:
        text = fh.read()
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base.update(data)
    return scenario_from_dict(base, root)


def scenario_to_dict(sc: Scenario) -> dict:
    return dataclasses.asdict(sc)


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=False)
