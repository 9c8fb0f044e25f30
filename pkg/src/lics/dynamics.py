"""State types, the reduced three-amplitude equations, and their integration.

Amplitudes are the slowly varying (barred) amplitudes of levels m, n, f in
dimensionless time T (units of the E1 half-duration).  The dissociation yield
W is carried as a fourth state component whose derivative is the exact
population-loss rate into the continuum, so for vanishing decay rates
``|a_m|^2 + |a_n|^2 + |a_f|^2 + W`` is conserved.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernel
from .errors import IntegrationError, StiffnessError, ValidationError
from .pulses import InstantCouplings, PulseSchedule

OBSERVABLES = ("pop_m", "pop_n", "pop_f", "W", "sum_total")

#: Step-size floor below which integration is declared stiff.
H_MIN = 1e-12
MAX_STEPS = 5_000_000
WINDOW_MARGIN = 4.0
DEFAULT_WINDOW = (-8.0, 8.0)


def _check_finite(name, value):
    if isinstance(value, complex):
        ok = math.isfinite(value.real) and math.isfinite(value.imag)
    else:
        ok = math.isfinite(value)
    if not ok:
        raise ValidationError(f"{name} is not finite: {value!r}")


@dataclass(frozen=True)
class AmplitudeState:
    a_m: complex = 0j
    a_n: complex = 0j
    a_f: complex = 0j
    W: float = 0.0
    T: float = 0.0

    def __post_init__(self):
        for name in ("a_m", "a_n", "a_f"):
            value = complex(getattr(self, name))
            _check_finite(name, value)
            object.__setattr__(self, name, value)
        _check_finite("W", self.W)
        if math.isnan(self.T):
            raise ValidationError("T is NaN")
        if self.W < 0:
            raise ValidationError(f"W must be non-negative, got {self.W}")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.a_m, self.a_n, self.a_f], dtype=np.complex128)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def observables(self) -> dict[str, float]:
        pops = np.abs(self.amplitudes) ** 2
        return {
            "pop_m": float(pops[0]),
            "pop_n": float(pops[1]),
            "pop_f": float(pops[2]),
            "W": float(self.W),
            "sum_total": float(pops.sum() + self.W),
        }

    def to_vector(self) -> np.ndarray:
        a = self.amplitudes
        return np.array(
            [a[0].real, a[0].imag, a[1].real, a[1].imag, a[2].real, a[2].imag, self.W]
        )

    @classmethod
    def from_vector(cls, y, T=0.0) -> "AmplitudeState":
        return cls(
            complex(y[0], y[1]), complex(y[2], y[3]), complex(y[4], y[5]), max(float(y[6]), 0.0), T
        )

    def scaled(self, factor: complex) -> "AmplitudeState":
        """Multiply every amplitude by ``factor`` (W and T unchanged)."""
        return dataclasses.replace(
            self, a_m=self.a_m * factor, a_n=self.a_n * factor, a_f=self.a_f * factor
        )


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless decay rates, detunings and effective Fano parameters."""

    eta_m: float = 0.0
    eta_n: float = 0.0
    eta_f: float = 0.0
    delta_mn: float = 0.0
    delta_nf: float = 0.0
    q_nn: float = 0.0
    q_ff: float = 0.0
    q_nf: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"{f.name} must be a real number, got {value!r}")
            _check_finite(f.name, value)
        for name in ("eta_m", "eta_n", "eta_f"):
            if getattr(self, name) < 0:
                raise ValidationError(f"decay rate {name} must be non-negative")

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.eta_m, self.eta_n, self.eta_f, self.delta_mn, self.delta_nf,
             self.q_nn, self.q_ff, self.q_nf],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and window of the adaptive integrator.

    ``t_start``/``t_end`` left as None are chosen from the pulse schedule so
    every enabled pulse has four durations of margin on each side.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.01
    t_start: Optional[float] = None
    t_end: Optional[float] = None

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("t_start", "t_end"):
            value = getattr(self, name)
            if value is not None:
                _check_finite(name, value)
        if self.t_start is not None and self.t_end is not None and not self.t_start < self.t_end:
            raise ValidationError(f"t_start={self.t_start} must be < t_end={self.t_end}")

    def replace(self, **changes) -> "IntegratorConfig":
        return dataclasses.replace(self, **changes)

    @property
    def conservation_slack(self) -> float:
        """Allowed drift of the conserved total, scaled with a loosened rel_tol."""
        return 1e-6 * max(1.0, self.rel_tol / 1e-8)

    def window(self, schedule: Optional[PulseSchedule]) -> tuple[float, float]:
        auto_lo, auto_hi = default_window(schedule)
        lo = auto_lo if self.t_start is None else self.t_start
        hi = auto_hi if self.t_end is None else self.t_end
        if not lo < hi:
            raise ValidationError(f"empty integration window [{lo}, {hi}]")
        if schedule is not None and (lo > auto_lo or hi < auto_hi):
            for peak, dur in schedule.pulse_spans():
                if peak - WINDOW_MARGIN * dur < lo or peak + WINDOW_MARGIN * dur > hi:
                    warnings.warn(
                        f"window [{lo}, {hi}] leaves less than {WINDOW_MARGIN:g} durations "
                        f"around the pulse peaked at T={peak:g}",
                        stacklevel=3,
                    )
                    break
        return lo, hi


def default_window(schedule: Optional[PulseSchedule]) -> tuple[float, float]:
    lo, hi = DEFAULT_WINDOW
    if schedule is not None:
        for peak, dur in schedule.pulse_spans():
            lo = min(lo, peak - WINDOW_MARGIN * dur)
            hi = max(hi, peak + WINDOW_MARGIN * dur)
    return lo, hi


def rhs(state: AmplitudeState, couplings: InstantCouplings, params: SystemParams):
    """Time derivatives ``(da_m, da_n, da_f, dW)`` of the reduced equations.

    Couplings are the instantaneous values g_mn, g_nn, g_ff, g_nf; the cross
    coupling enters both off-diagonal terms with the same Fano factor
    ``1 + i q_nf``.
    """
    for name in ("a_m", "a_n", "a_f"):
        _check_finite(name, complex(getattr(state, name)))
    for name in ("g_mn", "g_nn", "g_ff", "g_nf"):
        _check_finite(name, getattr(couplings, name))
    a_m, a_n, a_f = complex(state.a_m), complex(state.a_n), complex(state.a_f)
    g_mn, g_nn, g_ff, g_nf = couplings.g_mn, couplings.g_nn, couplings.g_ff, couplings.g_nf
    p = params
    cross = g_nf * (1 + 1j * p.q_nf)
    da_m = -1j * g_mn * a_n - (p.eta_m + 1j * (p.delta_mn - p.delta_nf)) * a_m
    da_n = (
        -1j * g_mn * a_m
        - cross * a_f
        - (p.eta_n + g_nn + 1j * (p.delta_nf + p.q_nn * g_nn)) * a_n
    )
    da_f = -cross * a_n - (p.eta_f + g_ff + 1j * p.q_ff * g_ff) * a_f
    dW = 2 * (g_nn * abs(a_n) ** 2 + g_ff * abs(a_f) ** 2 + 2 * (g_nf * a_n * a_f.conjugate()).real)
    return da_m, da_n, da_f, dW


@dataclass
class Trajectory:
    """Sampled solution: times, complex amplitudes (N x 3) and yield W."""

    times: np.ndarray
    amplitudes: np.ndarray
    W: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    n_fev: int = 0

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> AmplitudeState:
        a = self.amplitudes[i]
        return AmplitudeState(a[0], a[1], a[2], max(float(self.W[i]), 0.0), float(self.times[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def final(self) -> AmplitudeState:
        return self[-1]

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def sum_total(self) -> np.ndarray:
        return self.populations.sum(axis=1) + self.W

    def observable(self, name: str) -> np.ndarray:
        pops = self.populations
        series = {
            "pop_m": lambda: pops[:, 0],
            "pop_n": lambda: pops[:, 1],
            "pop_f": lambda: pops[:, 2],
            "W": lambda: self.W,
            "sum_total": lambda: pops.sum(axis=1) + self.W,
        }
        if name not in series:
            raise ValidationError(f"unknown observable {name!r}; choose from {OBSERVABLES}")
        return series[name]()

    def final_observables(self) -> dict[str, float]:
        return {name: float(self.observable(name)[-1]) for name in OBSERVABLES}


Sampling = Union[None, int, Sequence[float], np.ndarray]


def _sample_times(sampling: Sampling, lo: float, hi: float) -> np.ndarray:
    if sampling is None:
        times = np.array([hi])
    elif isinstance(sampling, (int, np.integer)) and not isinstance(sampling, bool):
        if sampling < 2:
            raise ValidationError("a sample count must be at least 2")
        times = np.linspace(lo, hi, int(sampling))
    else:
        times = np.asarray(sampling, dtype=np.float64).ravel()
        if times.size == 0:
            raise ValidationError("empty sampling grid")
        if not np.all(np.isfinite(times)):
            raise ValidationError("sampling grid contains non-finite times")
        if np.any(np.diff(times) < 0):
            raise ValidationError("sampling times must be non-decreasing")
        if times[-1] != hi:
            times = np.append(times, hi)
    return times


def integrate(
    schedule: Union[PulseSchedule, InstantCouplings],
    params: SystemParams,
    init: AmplitudeState,
    cfg: Optional[IntegratorConfig] = None,
    sampling: Sampling = None,
) -> Trajectory:
    """Propagate ``init`` through the pulse schedule.

    ``schedule`` may be an :class:`InstantCouplings` to hold the couplings
    constant.  ``sampling`` is None (final state only), a sample count spread
    evenly over the window, or an explicit sorted array of times; the window
    is widened to contain every requested time and the final time is always
    included.  With constant couplings the window runs from ``init.T`` (or
    ``cfg.t_start``) to ``cfg.t_end``, which is then required.
    """
    cfg = cfg or IntegratorConfig()
    if init.norm2 > 1 + 1e-9:
        raise ValidationError(f"initial state is over-normalized: norm^2={init.norm2:.12g}")

    pulse = schedule if isinstance(schedule, PulseSchedule) else None
    if isinstance(schedule, InstantCouplings) and (cfg.t_start is None or cfg.t_end is None):
        lo = init.T if cfg.t_start is None else cfg.t_start
        if cfg.t_end is None:
            raise ValidationError("constant couplings need an explicit t_end")
        hi = cfg.t_end
        if not lo < hi:
            raise ValidationError(f"empty integration window [{lo}, {hi}]")
    else:
        lo, hi = cfg.window(pulse)

    if sampling is not None and not isinstance(sampling, (int, np.integer)):
        grid = np.asarray(sampling, dtype=np.float64).ravel()
        if grid.size:
            lo = min(lo, float(grid.min()))
            hi = max(hi, float(grid.max()))
    times = _sample_times(sampling, lo, hi)

    env = schedule.envelope()
    par = params.as_vector()
    y0 = init.to_vector()
    out = np.empty((times.size, 7))
    status, t_reached, n_acc, n_rej, nfev = _kernel.dopri5(
        y0, lo, hi, env, par, cfg.rel_tol, cfg.abs_tol, cfg.max_step, H_MIN, MAX_STEPS, times, out
    )
    if status == _kernel.STEP_UNDERFLOW:
        raise StiffnessError(
            f"stiffness failure: step size fell below {H_MIN:g} at T={t_reached:.9g}", t=t_reached
        )
    if status == _kernel.MAX_STEPS:
        raise IntegrationError(
            f"tolerance not met: step limit {MAX_STEPS} reached at T={t_reached:.9g}", t=t_reached
        )
    if status == _kernel.NON_FINITE:
        raise IntegrationError(f"non-finite state encountered at T={t_reached:.9g}", t=t_reached)

    amplitudes = out[:, 0:6:2] + 1j * out[:, 1:6:2]
    return Trajectory(times, amplitudes, out[:, 6].copy(), n_acc, n_rej, nfev)


def final_observables(schedule, params, init, cfg=None) -> dict[str, float]:
    """Observables at the end of the window; shorthand for sweeps and fits."""
    return integrate(schedule, params, init, cfg).final_observables()


@dataclass(frozen=True)
class DimensionalParams:
    """Physical rates (s^-1), detunings (rad/s) and the E1 half-duration (s)."""

    tau: float
    gamma_m: float = 0.0
    gamma_n: float = 0.0
    gamma_f: float = 0.0
    Omega_mn: float = 0.0
    Omega_nf: float = 0.0
    gamma_nn: float = 0.0
    gamma_ff: float = 0.0
    gamma_nf: float = 0.0
    G_mn: float = 0.0


def scale_to_dimensionless(
    dim: DimensionalParams, q_nn: float = 0.0, q_ff: float = 0.0, q_nf: float = 0.0
) -> tuple[SystemParams, dict[str, float]]:
    """Multiply every rate by tau.

    Returns the :class:`SystemParams` and the peak couplings
    ``{"g_mn0", "g_nn0", "g_ff0", "g_nf0"}``.
    """
    for f in dataclasses.fields(dim):
        _check_finite(f.name, getattr(dim, f.name))
    tau = dim.tau
    if tau <= 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    params = SystemParams(
        eta_m=dim.gamma_m * tau,
        eta_n=dim.gamma_n * tau,
        eta_f=dim.gamma_f * tau,
        delta_mn=dim.Omega_mn * tau,
        delta_nf=dim.Omega_nf * tau,
        q_nn=q_nn,
        q_ff=q_ff,
        q_nf=q_nf,
    )
    peaks = {
        "g_mn0": dim.G_mn * tau,
        "g_nn0": dim.gamma_nn * tau,
        "g_ff0": dim.gamma_ff * tau,
        "g_nf0": dim.gamma_nf * tau,
    }
    return params, peaks
