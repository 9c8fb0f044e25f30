"""Multi-start Nelder-Mead search over pulse-schedule parameters.

The objective is a weighted sum of squared deviations of final observables
from their targets.  Starts come from a Latin hypercube over the parameter
box; each start is refined by a box-clipped Nelder-Mead simplex.  Results are
deterministic for a given seed regardless of how many workers run the starts.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .dynamics import integrate
from .errors import IntegrationError, LicsError, ValidationError
from .model import Scenario, canonical_path, with_values

TARGETABLE = ("pop_m", "pop_n", "pop_f", "W")

# reflection, expansion, contraction, shrink
ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5
SPREAD_TOL = 1e-8
INITIAL_STEP = 0.1  # fraction of the box width
EVALS_PER_START = 20  # per simplex vertex, sets the start count from the budget
MAX_STARTS = 32
ZERO_OBJECTIVE = 1e-14
REVERIFY_TOL = 1e-9


@dataclass(frozen=True)
class FreeParameter:
    path: str
    min: float
    max: float

    def __post_init__(self):
        object.__setattr__(self, "path", canonical_path(self.path))
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValidationError(f"bounds of {self.path} must be finite")
        if not self.min < self.max:
            raise ValidationError(f"bounds of {self.path} need min < max, got [{self.min}, {self.max}]")


@dataclass(frozen=True)
class Objective:
    base: Scenario
    targets: dict[str, float]
    free: tuple[FreeParameter, ...]
    weights: dict[str, float] = field(default_factory=dict)
    start: Optional[dict[str, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        if not self.targets:
            raise ValidationError("objective needs at least one target")
        if not self.free:
            raise ValidationError("objective needs at least one free parameter")
        for name, value in self.targets.items():
            if name not in TARGETABLE:
                raise ValidationError(f"cannot target {name!r}; choose from {list(TARGETABLE)}")
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"target {name}={value} outside [0, 1]")
        for name, w in self.weights.items():
            if name not in self.targets:
                raise ValidationError(f"weight given for untargeted observable {name!r}")
            if not (math.isfinite(w) and w > 0):
                raise ValidationError(f"weight of {name} must be positive, got {w}")
        paths = [p.path for p in self.free]
        if len(set(paths)) != len(paths):
            raise ValidationError("free parameters repeat a path")
        if self.start is not None:
            start = {canonical_path(k): float(v) for k, v in self.start.items()}
            if set(start) != set(paths):
                raise ValidationError("start must give a value for every free parameter")
            for p in self.free:
                if not p.min <= start[p.path] <= p.max:
                    raise ValidationError(f"start value of {p.path} lies outside its bounds")
            object.__setattr__(self, "start", start)

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.min for p in self.free])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.max for p in self.free])

    def scenario_at(self, x) -> Scenario:
        return with_values(self.base, {p.path: float(v) for p, v in zip(self.free, x)})

    def observables_at(self, x) -> dict[str, float]:
        sc = self.scenario_at(x)
        return integrate(sc.schedule, sc.params, sc.init, sc.integrator).final_observables()

    def score(self, observables: dict[str, float]) -> float:
        return float(sum(
            self.weights.get(name, 1.0) * (observables[name] - target) ** 2
            for name, target in self.targets.items()
        ))


@dataclass
class StartReport:
    index: int
    x0: list[float]
    f0: float
    best_x: list[float]
    best_f: float
    evaluations: int
    converged: bool
    errors: list[str] = field(default_factory=list)


@dataclass
class OptimizeResult:
    best: dict[str, float]
    best_vector: np.ndarray
    achieved: dict[str, float]
    objective: float
    evaluations: int
    converged: bool
    trace: list[tuple[int, float]]
    starts: list[StartReport]
    scenario: Scenario

    def to_dict(self) -> dict:
        return {
            "best": self.best,
            "achieved": self.achieved,
            "objective": self.objective,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "trace": [list(t) for t in self.trace],
            "starts": [dataclasses.asdict(s) for s in self.starts],
        }


class _BudgetExhausted(Exception):
    pass


class _Counter:
    """Wraps the objective, enforces the evaluation budget, logs failures."""

    def __init__(self, fn: Callable[[np.ndarray], float], budget: int):
        self.fn = fn
        self.budget = budget
        self.count = 0
        self.errors: list[str] = []
        self.history: list[float] = []

    def __call__(self, x: np.ndarray) -> float:
        if self.count >= self.budget:
            raise _BudgetExhausted
        self.count += 1
        try:
            value = self.fn(x)
        except LicsError as exc:
            self.errors.append(f"x={x.tolist()}: {exc}")
            value = math.inf
        self.history.append(value)
        return value


def nelder_mead(f, x0, lower, upper, max_evals, spread_tol=SPREAD_TOL):
    """Box-clipped Nelder-Mead minimisation.

    Returns ``(best_x, best_f, evaluations, converged, history)`` where
    ``history`` lists every objective value in evaluation order.
    """
    counter = _Counter(f, max_evals)
    n = len(x0)
    clip = lambda x: np.clip(x, lower, upper)  # noqa: E731
    simplex = [clip(np.asarray(x0, dtype=float))]
    fvals = []
    converged = False
    try:
        fvals.append(counter(simplex[0]))
        width = upper - lower
        for i in range(n):
            x = simplex[0].copy()
            step = INITIAL_STEP * width[i]
            x[i] = x[i] + step if x[i] + step <= upper[i] else x[i] - step
            simplex.append(x)
            fvals.append(counter(x))

        while True:
            order = np.argsort(fvals, kind="stable")
            simplex = [simplex[k] for k in order]
            fvals = [fvals[k] for k in order]
            spread = fvals[-1] - fvals[0]
            if math.isfinite(spread) and spread < spread_tol:
                converged = True
                break
            centroid = np.mean(simplex[:-1], axis=0)
            worst = simplex[-1]
            xr = clip(centroid + ALPHA * (centroid - worst))
            fr = counter(xr)
            if fr < fvals[0]:
                xe = clip(centroid + GAMMA * (xr - centroid))
                fe = counter(xe)
                simplex[-1], fvals[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < fvals[-2]:
                simplex[-1], fvals[-1] = xr, fr
                continue
            if fr < fvals[-1]:
                xc = clip(centroid + RHO * (xr - centroid))
                fc = counter(xc)
                if fc <= fr:
                    simplex[-1], fvals[-1] = xc, fc
                    continue
            else:
                xc = clip(centroid + RHO * (worst - centroid))
                fc = counter(xc)
                if fc < fvals[-1]:
                    simplex[-1], fvals[-1] = xc, fc
                    continue
            best = simplex[0]
            for k in range(1, n + 1):
                simplex[k] = clip(best + SIGMA * (simplex[k] - best))
                fvals[k] = counter(simplex[k])
    except _BudgetExhausted:
        pass
    k = int(np.argmin(fvals)) if fvals else 0
    best_x = simplex[k] if fvals else simplex[0]
    best_f = fvals[k] if fvals else math.inf
    return best_x, best_f, counter.count, converged, counter.history, counter.errors


def start_count(budget: int, n_free: int) -> int:
    return int(min(MAX_STARTS, max(1, budget // (EVALS_PER_START * (n_free + 1)))))


def optimize(objective: Objective, budget: int = 400, seed: int = 0, workers: int = 1) -> OptimizeResult:
    """Search the free-parameter box for the schedule closest to the targets."""
    d = len(objective.free)
    if isinstance(budget, bool) or not isinstance(budget, (int, np.integer)) or budget < d + 2:
        raise ValidationError(f"budget must be an integer >= {d + 2} (free parameters + 2), got {budget!r}")
    lower, upper = objective.lower, objective.upper
    # resolve every path and bound once before spending evaluations
    objective.scenario_at(lower)
    objective.scenario_at(upper)

    def fn(x):
        return objective.score(objective.observables_at(x))

    remaining = int(budget)
    starts_x: list[np.ndarray] = []
    if objective.start is not None:
        x_start = np.array([objective.start[p.path] for p in objective.free])
        f_start = fn(x_start)
        remaining -= 1
        if f_start <= ZERO_OBJECTIVE:
            report = StartReport(0, x_start.tolist(), f_start, x_start.tolist(), f_start, 1, True)
            return _finish(objective, x_start, f_start, 1, True, [(1, f_start)], [report])
        starts_x.append(x_start)

    n_lhs = start_count(remaining, d)
    sampler = qmc.LatinHypercube(d=d, seed=np.random.default_rng(seed))
    unit = sampler.random(n_lhs)
    starts_x.extend(qmc.scale(unit, lower, upper))
    per_start = remaining // len(starts_x)
    if per_start < d + 1:
        starts_x = starts_x[: max(1, remaining // (d + 1))]
        per_start = remaining // len(starts_x)

    def run_start(item):
        index, x0 = item
        best_x, best_f, used, conv, history, errors = nelder_mead(fn, x0, lower, upper, per_start)
        f0 = history[0] if history else math.inf
        return StartReport(index, list(map(float, x0)), f0, best_x.tolist(), best_f, used, conv, errors), history

    items = list(enumerate(starts_x))
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_start, items))
    else:
        outcomes = [run_start(it) for it in items]

    reports = [r for r, _ in outcomes]
    if all(not math.isfinite(r.best_f) for r in reports):
        detail = "; ".join(f"start {r.index}: {r.errors[:1]}" for r in reports)
        raise IntegrationError(f"every optimisation start failed: {detail}")

    trace: list[tuple[int, float]] = []
    count = budget - remaining
    best_so_far = math.inf
    if objective.start is not None:
        best_so_far = f_start
        trace.append((count, best_so_far))
    for _, history in outcomes:
        for value in history:
            count += 1
            if value < best_so_far:
                best_so_far = value
                trace.append((count, value))

    winner = min(reports, key=lambda r: (r.best_f, r.index))
    return _finish(objective, np.array(winner.best_x), winner.best_f, count, winner.converged,
                   trace, reports)


def _finish(objective, x, f, evaluations, converged, trace, reports) -> OptimizeResult:
    achieved = objective.observables_at(x)
    check = objective.score(achieved)
    if abs(check - f) > REVERIFY_TOL:
        raise IntegrationError(f"optimum failed re-verification: {f} vs {check}")
    return OptimizeResult(
        best={p.path: float(v) for p, v in zip(objective.free, x)},
        best_vector=np.asarray(x, dtype=float),
        achieved=achieved,
        objective=check,
        evaluations=evaluations,
        converged=converged,
        trace=trace,
        starts=reports,
        scenario=objective.scenario_at(x),
    )
