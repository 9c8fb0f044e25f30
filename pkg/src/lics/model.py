"""A runnable scenario (schedule + parameters + initial state) and dotted
parameter paths such as ``schedule.delta3`` or ``params.q_nf``."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .dynamics import AmplitudeState, IntegratorConfig, SystemParams
from .errors import ValidationError
from .pulses import PulseSchedule

TIME_AXIS = "time"

_SECTIONS = {"schedule": PulseSchedule, "params": SystemParams}
_NON_SCALAR = {"e1", "e2", "e3"}


@dataclass(frozen=True)
class Scenario:
    schedule: PulseSchedule = field(default_factory=PulseSchedule)
    params: SystemParams = field(default_factory=SystemParams)
    init: AmplitudeState = field(default_factory=lambda: AmplitudeState(a_m=1.0))
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def scalar_paths() -> list[str]:
    """Every parameter path that names a real scalar field."""
    paths = []
    for section, cls in _SECTIONS.items():
        for f in dataclasses.fields(cls):
            if f.name not in _NON_SCALAR:
                paths.append(f"{section}.{f.name}")
    return paths


def resolve_path(path: str) -> tuple[str, str]:
    """Normalise ``path`` to ``(section, field)``.

    A bare field name is accepted when it is unambiguous.
    """
    if not isinstance(path, str) or not path:
        raise ValidationError(f"invalid parameter path {path!r}")
    known = scalar_paths()
    if "." in path:
        if path not in known:
            raise ValidationError(f"unknown parameter path {path!r}; known paths: {', '.join(known)}")
        section, name = path.split(".", 1)
        return section, name
    matches = [p for p in known if p.split(".", 1)[1] == path]
    if len(matches) != 1:
        raise ValidationError(f"unknown parameter path {path!r}; known paths: {', '.join(known)}")
    section, name = matches[0].split(".", 1)
    return section, name


def canonical_path(path: str) -> str:
    return ".".join(resolve_path(path))


def get_value(scenario: Scenario, path: str) -> float:
    section, name = resolve_path(path)
    value = getattr(getattr(scenario, section), name)
    if isinstance(value, str):
        if section == "schedule" and name == "g_nf0":
            return scenario.schedule.cross_peak
        raise ValidationError(f"{path} is not numeric")
    return float(value)


def with_values(scenario: Scenario, values: dict[str, float]) -> Scenario:
    """Copy of ``scenario`` with each path set; inner validation is re-run."""
    changes: dict[str, dict[str, float]] = {}
    for path, value in values.items():
        section, name = resolve_path(path)
        changes.setdefault(section, {})[name] = float(value)
    updated = {
        section: dataclasses.replace(getattr(scenario, section), **fields)
        for section, fields in changes.items()
    }
    return dataclasses.replace(scenario, **updated)
