"""Deterministic 1D/2D parameter sweeps over final (or time-resolved) observables.

Every grid cell is an independent integration whose result is written into
a pre-shaped array, so the output does not depend on the worker count or on
the order in which cells finish.  The integration kernel releases the GIL,
which lets a thread pool do the work without pickling scenarios.
"""

from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import OBSERVABLES, integrate
from .errors import IntegrationError, LicsError, ValidationError
from .model import TIME_AXIS, Scenario, canonical_path, with_values


@dataclass(frozen=True)
class SweepAxis:
    path: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if isinstance(self.count, bool) or not isinstance(self.count, (int, np.integer)):
            raise ValidationError(f"axis count must be an integer, got {self.count!r}")
        if self.count < 2:
            raise ValidationError(f"axis {self.path!r} needs count >= 2, got {self.count}")
        for name in ("min", "max"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"axis {self.path!r} {name} is not finite")
        if self.max < self.min:
            raise ValidationError(f"axis {self.path!r} has max < min")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)

    @property
    def is_time(self) -> bool:
        return self.path == TIME_AXIS


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep.  ``axis2`` may be the special ``time`` axis, in which
    case each axis1 value is one integration sampled at the axis2 times."""

    base: Optional[Scenario]
    axis1: SweepAxis
    axis2: Optional[SweepAxis] = None
    observables: tuple[str, ...] = ("W",)

    def __post_init__(self):
        obs = tuple(self.observables)
        object.__setattr__(self, "observables", obs)
        if not obs:
            raise ValidationError("no observables requested")
        unknown = [o for o in obs if o not in OBSERVABLES]
        if unknown:
            raise ValidationError(f"unknown observables {unknown}; choose from {list(OBSERVABLES)}")
        if len(set(obs)) != len(obs):
            raise ValidationError("duplicate observables requested")

    def validate(self) -> "SweepSpec":
        """Resolve paths up front; raises before any integration starts."""
        if self.base is None:
            raise ValidationError("sweep has no base scenario")
        if self.axis1.is_time:
            raise ValidationError("the time axis is only allowed as axis2")
        axis1 = dataclasses.replace(self.axis1, path=canonical_path(self.axis1.path))
        axis2 = self.axis2
        if axis2 is not None and not axis2.is_time:
            axis2 = dataclasses.replace(axis2, path=canonical_path(axis2.path))
            if axis2.path == axis1.path:
                raise ValidationError("axis1 and axis2 name the same parameter")
        spec = dataclasses.replace(self, axis1=axis1, axis2=axis2)
        # probe the box corners so physical validation errors surface now
        for v1 in (axis1.min, axis1.max):
            for v2 in ((axis2.min, axis2.max) if axis2 is not None and not axis2.is_time else (None,)):
                spec.cell_scenario(v1, v2)
        return spec

    def with_base(self, base: Scenario) -> "SweepSpec":
        return dataclasses.replace(self, base=base)

    def cell_scenario(self, v1: float, v2: Optional[float] = None) -> Scenario:
        values = {self.axis1.path: v1}
        if self.axis2 is not None and not self.axis2.is_time:
            values[self.axis2.path] = v2
        return with_values(self.base, values)

    def to_dict(self) -> dict:
        return {
            "axis1": dataclasses.asdict(self.axis1),
            "axis2": None if self.axis2 is None else dataclasses.asdict(self.axis2),
            "observables": list(self.observables),
        }


@dataclass
class SweepResult:
    axis1_path: str
    axis1: np.ndarray
    axis2_path: Optional[str]
    axis2: Optional[np.ndarray]
    data: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    @property
    def shape(self) -> tuple[int, ...]:
        if self.axis2 is None:
            return (len(self.axis1),)
        return (len(self.axis1), len(self.axis2))

    @property
    def failed_cells(self) -> list:
        return self.metadata.get("failed_cells", [])

    def to_dict(self) -> dict:
        return {
            "axis1": {"path": self.axis1_path, "values": self.axis1.tolist()},
            "axis2": None
            if self.axis2 is None
            else {"path": self.axis2_path, "values": self.axis2.tolist()},
            "observables": {k: _nan_to_none(v) for k, v in self.data.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        axis2 = d.get("axis2")
        return cls(
            axis1_path=d["axis1"]["path"],
            axis1=np.asarray(d["axis1"]["values"], dtype=float),
            axis2_path=None if axis2 is None else axis2["path"],
            axis2=None if axis2 is None else np.asarray(axis2["values"], dtype=float),
            data={k: np.array(v, dtype=float) for k, v in d["observables"].items()},
            metadata=d.get("metadata", {}),
        )


def _nan_to_none(arr: np.ndarray):
    return np.where(np.isnan(arr), None, arr).tolist()


class SweepFailed(IntegrationError):
    def __init__(self, message, failed):
        super().__init__(message)
        self.failed = failed


def _run_task(spec: SweepSpec, i: int, j: Optional[int], v1: float, v2):
    """Integrate one task; returns observable rows or raises LicsError."""
    scenario = spec.cell_scenario(v1, v2)
    if spec.axis2 is not None and spec.axis2.is_time:
        traj = integrate(scenario.schedule, scenario.params, scenario.init, scenario.integrator,
                         sampling=spec.axis2.values)
        n = spec.axis2.count
        return {name: traj.observable(name)[:n] for name in spec.observables}
    traj = integrate(scenario.schedule, scenario.params, scenario.init, scenario.integrator)
    final = traj.final_observables()
    return {name: final[name] for name in spec.observables}


def default_workers() -> int:
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, workers: Optional[int] = None, permit_partial: bool = False) -> SweepResult:
    """Evaluate every grid cell of ``spec``.

    Cells are split into contiguous static blocks, one per worker.  A failing
    cell aborts the run with :class:`SweepFailed` unless ``permit_partial`` is
    set, in which case it is filled with NaN and listed in the metadata.
    """
    spec = spec.validate()
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")

    ax1 = spec.axis1.values
    ax2 = None if spec.axis2 is None else spec.axis2.values
    time_axis = spec.axis2 is not None and spec.axis2.is_time
    shape = (len(ax1),) if ax2 is None else (len(ax1), len(ax2))
    data = {name: np.full(shape, np.nan) for name in spec.observables}

    tasks = []
    for i, v1 in enumerate(ax1):
        if ax2 is None or time_axis:
            tasks.append((i, None, v1, None))
        else:
            tasks.extend((i, j, v1, v2) for j, v2 in enumerate(ax2))

    def run_block(block):
        results = []
        for i, j, v1, v2 in block:
            try:
                results.append((i, j, _run_task(spec, i, j, v1, v2), None))
            except LicsError as exc:
                results.append((i, j, None, str(exc)))
        return results

    size = math.ceil(len(tasks) / workers)
    blocks = [tasks[k:k + size] for k in range(0, len(tasks), size)]
    start = time.perf_counter()
    if workers == 1 or len(blocks) == 1:
        outcomes = [run_block(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_block, blocks))
    wall = time.perf_counter() - start

    failed = []
    for block in outcomes:
        for i, j, values, error in block:
            if error is not None:
                failed.append({"i": i, "j": j, "error": error})
                continue
            for name, value in values.items():
                if j is None:
                    data[name][i] = value
                else:
                    data[name][i, j] = value
    if failed and not permit_partial:
        listing = "; ".join(f"({f['i']}, {f['j']}): {f['error']}" for f in failed[:10])
        raise SweepFailed(f"{len(failed)} sweep cell(s) failed: {listing}", failed)

    metadata = {
        "spec": spec.to_dict(),
        "integrator": dataclasses.asdict(spec.base.integrator),
        "wall_time_s": wall,
        "workers": workers,
        "partial": bool(failed),
        "failed_cells": failed,
    }
    return SweepResult(
        axis1_path=spec.axis1.path,
        axis1=ax1,
        axis2_path=None if spec.axis2 is None else spec.axis2.path,
        axis2=ax2,
        data=data,
        metadata=metadata,
    )
