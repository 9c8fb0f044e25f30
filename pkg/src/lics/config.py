"""Strict YAML run configuration.

Unknown keys are fatal.  Errors carry the line and column of the offending
YAML node where one can be found.

Example::

    scenario:
      preset: fig5
      overrides:
        schedule: {delta2: -1.5}
    integrator: {rel_tol: 1.0e-8}
    simulate: {samples: 801}
    output: {directory: out}
"""

from __future__ import annotations

import dataclasses
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticError

from .dynamics import OBSERVABLES, AmplitudeState, IntegratorConfig, SystemParams
from .errors import LicsError, ValidationError
from .model import Scenario
from .optimize import FreeParameter, Objective
from .pulses import PulseSchedule
from .scenarios import preset
from .sweep import SweepAxis, SweepSpec


class ConfigError(ValidationError):
    def __init__(self, message, line=None, column=None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


Complex = tuple[float, float]


def _as_pair(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v), 0.0)
    return v


class ScheduleBlock(_Strict):
    g_mn0: float = 0.0
    g_nn0: float = 0.0
    g_ff0: float = 0.0
    g_nf0: Union[float, Literal["auto"]] = "auto"
    delta2: float = 0.0
    delta3: float = 0.0
    d2: float = 1.0
    d3: float = 1.0
    e1: bool = True
    e2: bool = True
    e3: bool = True


class ScheduleOverride(_Strict):
    g_mn0: Optional[float] = None
    g_nn0: Optional[float] = None
    g_ff0: Optional[float] = None
    g_nf0: Union[float, Literal["auto"], None] = None
    delta2: Optional[float] = None
    delta3: Optional[float] = None
    d2: Optional[float] = None
    d3: Optional[float] = None
    e1: Optional[bool] = None
    e2: Optional[bool] = None
    e3: Optional[bool] = None


class ParamsBlock(_Strict):
    eta_m: float = 0.0
    eta_n: float = 0.0
    eta_f: float = 0.0
    delta_mn: float = 0.0
    delta_nf: float = 0.0
    q_nn: float = 0.0
    q_ff: float = 0.0
    q_nf: float = 0.0


class ParamsOverride(_Strict):
    eta_m: Optional[float] = None
    eta_n: Optional[float] = None
    eta_f: Optional[float] = None
    delta_mn: Optional[float] = None
    delta_nf: Optional[float] = None
    q_nn: Optional[float] = None
    q_ff: Optional[float] = None
    q_nf: Optional[float] = None


class InitBlock(_Strict):
    """Amplitudes as ``[re, im]`` pairs; a bare number is a real amplitude."""

    a_m: Complex = (0.0, 0.0)
    a_n: Complex = (0.0, 0.0)
    a_f: Complex = (0.0, 0.0)
    W: float = 0.0
    T: float = 0.0

    @field_validator("a_m", "a_n", "a_f", mode="before")
    @classmethod
    def _pairs(cls, v):
        return _as_pair(v)


class OverrideBlock(_Strict):
    schedule: Optional[ScheduleOverride] = None
    params: Optional[ParamsOverride] = None
    init: Optional[InitBlock] = None


class ExplicitScenario(_Strict):
    schedule: ScheduleBlock
    params: ParamsBlock = Field(default_factory=ParamsBlock)
    init: InitBlock


class ScenarioBlock(_Strict):
    preset: Optional[str] = None
    overrides: Optional[OverrideBlock] = None
    explicit: Optional[ExplicitScenario] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.explicit is None):
            raise ValueError("give exactly one of 'preset' or 'explicit'")
        if self.overrides is not None and self.preset is None:
            raise ValueError("'overrides' only applies to a preset")
        return self


class IntegratorBlock(_Strict):
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.01
    t_start: Optional[float] = None
    t_end: Optional[float] = None


class SimulateBlock(_Strict):
    samples: int = Field(default=801, ge=2)
    final_only: bool = False


class AxisBlock(_Strict):
    path: str
    min: float
    max: float
    count: int


class SweepBlock(_Strict):
    """Axes default to the preset's own sweep descriptor."""

    axis1: Optional[AxisBlock] = None
    axis2: Optional[AxisBlock] = None
    observables: Optional[list[str]] = None


class FreeBlock(_Strict):
    path: str
    min: float
    max: float


class OptimizeBlock(_Strict):
    targets: dict[str, float]
    weights: dict[str, float] = Field(default_factory=dict)
    free: list[FreeBlock]
    budget: int = 400
    start: Optional[dict[str, float]] = None


class OutputBlock(_Strict):
    directory: str = "out"
    formats: list[Literal["csv", "tsv"]] = Field(default_factory=lambda: ["csv"])


class RunConfig(_Strict):
    scenario: ScenarioBlock
    integrator: IntegratorBlock = Field(default_factory=IntegratorBlock)
    simulate: Optional[SimulateBlock] = None
    sweep: Optional[SweepBlock] = None
    optimize: Optional[OptimizeBlock] = None
    output: OutputBlock = Field(default_factory=OutputBlock)

    # --- construction of library objects -------------------------------
    def build_scenario(self) -> Scenario:
        integrator = IntegratorConfig(**self.integrator.model_dump())
        if self.scenario.explicit is not None:
            ex = self.scenario.explicit
            return Scenario(
                PulseSchedule(**ex.schedule.model_dump()),
                SystemParams(**ex.params.model_dump()),
                _state(ex.init),
                integrator,
            )
        base = preset(self.scenario.preset)
        schedule, params, init = base.schedule, base.params, base.init
        ov = self.scenario.overrides
        if ov is not None:
            if ov.schedule is not None:
                schedule = schedule.replace(**ov.schedule.model_dump(exclude_none=True))
            if ov.params is not None:
                params = params.replace(**ov.params.model_dump(exclude_none=True))
            if ov.init is not None:
                init = _state(ov.init)
        return Scenario(schedule, params, init, integrator)

    def build_sweep(self, scenario: Scenario) -> SweepSpec:
        block = self.sweep or SweepBlock()
        default = None
        if self.scenario.preset is not None:
            default = preset(self.scenario.preset).swept
        if block.axis1 is None:
            if default is None:
                raise ValidationError("sweep.axis1 is required (the scenario has no default sweep)")
            axis1, axis2 = default.axis1, default.axis2
            if block.axis2 is not None:
                axis2 = SweepAxis(**block.axis2.model_dump())
        else:
            axis1 = SweepAxis(**block.axis1.model_dump())
            axis2 = None if block.axis2 is None else SweepAxis(**block.axis2.model_dump())
        if block.observables is not None:
            observables = tuple(block.observables)
        elif default is not None:
            observables = default.observables
        else:
            observables = ("W",)
        return SweepSpec(scenario, axis1, axis2, observables).validate()

    def build_objective(self, scenario: Scenario) -> Objective:
        if self.optimize is None:
            raise ValidationError("the optimize command needs an 'optimize' block")
        block = self.optimize
        free = tuple(FreeParameter(f.path, f.min, f.max) for f in block.free)
        if block.budget < len(free) + 2:
            raise ValidationError(
                f"optimize.budget={block.budget} is below the minimum {len(free) + 2} "
                "(free parameters + 2)"
            )
        return Objective(scenario, dict(block.targets), free, dict(block.weights), block.start)

    def dump(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.dump(), sort_keys=False, allow_unicode=True)


def _state(block: InitBlock) -> AmplitudeState:
    return AmplitudeState(complex(*block.a_m), complex(*block.a_n), complex(*block.a_f),
                          block.W, block.T)


def scenario_to_explicit(scenario: Scenario) -> dict:
    """Explicit scenario block reproducing ``scenario`` exactly."""
    init = scenario.init
    return {
        "explicit": {
            "schedule": dataclasses.asdict(scenario.schedule),
            "params": dataclasses.asdict(scenario.params),
            "init": {
                "a_m": [init.a_m.real, init.a_m.imag],
                "a_n": [init.a_n.real, init.a_n.imag],
                "a_f": [init.a_f.real, init.a_f.imag],
                "W": init.W,
                "T": init.T,
            },
        }
    }


def _locate(node, loc):
    """Walk a composed YAML node along a pydantic error location."""
    mark = node.start_mark if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    mark = k.start_mark
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            mark = node.start_mark
        else:
            break
    return mark


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse and fully validate a YAML config for ``command``."""
    try:
        raw = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}",
                          mark.line + 1 if mark else None, mark.column + 1 if mark else None) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level", 1, 1)
    try:
        cfg = RunConfig.model_validate(raw)
    except PydanticError as exc:
        err = exc.errors()[0]
        mark = _locate(root, err["loc"])
        path = ".".join(str(p) for p in err["loc"])
        extra = f" (+{len(exc.errors()) - 1} more)" if len(exc.errors()) > 1 else ""
        raise ConfigError(f"{path}: {err['msg']}{extra}",
                          mark.line + 1 if mark else None, mark.column + 1 if mark else None) from exc

    if command is not None:
        for other in ("simulate", "sweep", "optimize"):
            if other != command and getattr(cfg, other) is not None:
                raise ConfigError(f"block '{other}' does not apply to the {command} command",
                                  *_line_col(root, (other,)))
    try:
        scenario = cfg.build_scenario()
        if command == "sweep":
            cfg.build_sweep(scenario)
        elif command == "optimize":
            cfg.build_objective(scenario)
    except LicsError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _line_col(root, loc):
    mark = _locate(root, loc)
    return (mark.line + 1, mark.column + 1) if mark else (None, None)


def load_config(path, command: Optional[str] = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), command)


__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "scenario_to_explicit", "OBSERVABLES"]
