"""Figure presets, the two-pulse LICS wrapper, and the closed-form solution
of the equations with time-independent couplings."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .dynamics import AmplitudeState, IntegratorConfig, SystemParams, integrate
from .errors import LicsError, ValidationError
from .model import TIME_AXIS, Scenario
from .pulses import AUTO, InstantCouplings, PulseSchedule
from .sweep import SweepAxis, SweepSpec

# Fano parameters and resonance conditions shared by every figure
FANO = SystemParams(q_nn=0.2, q_ff=-0.5, q_nf=10.0)

# Axis extents the figures do not print; chosen to bracket the operating points.
Q_RANGE = (-20.0, 20.0)
DETUNING_RANGE = (-10.0, 10.0)
SCAN_POINTS = 201
DELAY_RANGE = (-4.0, 4.0)
DELAY_POINTS = 81
TIME_GRID = SweepAxis(TIME_AXIS, -8.0, 8.0, 161)
INTENSITY_AXIS = SweepAxis("schedule.g_nn0", 0.1, 400.0, 100)


@dataclass(frozen=True)
class ScenarioPreset(Scenario):
    name: str = ""
    citation: str = ""
    swept: Optional[SweepSpec] = None

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.schedule, self.params, self.init, self.integrator)

    def sweep_spec(self) -> SweepSpec:
        if self.swept is None:
            raise ValidationError(f"preset {self.name!r} has no sweep descriptor")
        return self.swept.with_base(self.scenario)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "citation": self.citation,
            "schedule": dataclasses.asdict(self.schedule),
            "params": dataclasses.asdict(self.params),
            "init": state_to_dict(self.init),
            "integrator": dataclasses.asdict(self.integrator),
            "swept": None if self.swept is None else self.swept.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioPreset":
        swept = None
        if d.get("swept") is not None:
            s = d["swept"]
            swept = SweepSpec(
                base=None,
                axis1=SweepAxis(**s["axis1"]),
                axis2=None if s["axis2"] is None else SweepAxis(**s["axis2"]),
                observables=tuple(s["observables"]),
            )
        return cls(
            schedule=PulseSchedule(**d["schedule"]),
            params=SystemParams(**d["params"]),
            init=state_from_dict(d["init"]),
            integrator=IntegratorConfig(**d["integrator"]),
            name=d["name"],
            citation=d["citation"],
            swept=swept,
        )


def state_to_dict(state: AmplitudeState) -> dict:
    return {
        "a_m": [state.a_m.real, state.a_m.imag],
        "a_n": [state.a_n.real, state.a_n.imag],
        "a_f": [state.a_f.real, state.a_f.imag],
        "W": state.W,
        "T": state.T,
    }


def state_from_dict(d: dict) -> AmplitudeState:
    def c(v):
        if isinstance(v, (list, tuple)):
            return complex(v[0], v[1])
        return complex(v)

    return AmplitudeState(c(d.get("a_m", 0)), c(d.get("a_n", 0)), c(d.get("a_f", 0)),
                          float(d.get("W", 0.0)), float(d.get("T", 0.0)))


def _sweep(axis1, observables, axis2=TIME_GRID):
    return SweepSpec(base=None, axis1=axis1, axis2=axis2, observables=tuple(observables))


def _build_presets() -> dict[str, ScenarioPreset]:
    on_n = AmplitudeState(a_n=1.0)
    on_m = AmplitudeState(a_m=1.0)

    fig2 = ScenarioPreset(
        schedule=PulseSchedule(g_nn0=3.61, g_ff0=9.61, g_nf0=AUTO, delta2=0.0, delta3=-3.9,
                               d2=1.0, d3=1.0, e1=False),
        params=FANO,
        init=on_n,
        name="fig2",
        citation="two-pulse LICS transfer n -> f vs time and E2/E3 delay; E1 off, "
                 "g_nn0=3.61, g_ff0=9.61, g_nf0=5.89, q_nn=0.2, q_ff=-0.5, q_nf=10",
        swept=_sweep(SweepAxis("schedule.delta3", -6.0, 2.0, 81), ("W", "pop_f")),
    )
    fig3a = dataclasses.replace(
        fig2, name="fig3a",
        citation="transfer and dissociation vs Fano parameter q_nf; "
                 "delta2=0, delta3=-3.9, delta_nf=0",
        swept=_sweep(SweepAxis("params.q_nf", *Q_RANGE, SCAN_POINTS), ("pop_f", "W")),
    )
    fig3b = dataclasses.replace(
        fig2, name="fig3b",
        citation="transfer and dissociation vs two-photon detuning; "
                 "delta2=0, delta3=-3.9, q_nf=10",
        swept=_sweep(SweepAxis("params.delta_nf", *DETUNING_RANGE, SCAN_POINTS), ("pop_f", "W")),
    )

    fig4 = ScenarioPreset(
        schedule=PulseSchedule(g_mn0=2.0, g_nn0=3.61, g_ff0=9.61, g_nf0=AUTO, delta2=0.0,
                               delta3=-3.9, d2=1.0, d3=1.0, e3=False),
        params=FANO,
        init=on_m,
        name="fig4",
        citation="two-pulse dissociation from m with E3 off; Omega_mn=0, g_mn0=2, "
                 "g_nn0=3.61, delta2=0",
        swept=_sweep(INTENSITY_AXIS, ("W", "pop_m"), axis2=None),
    )
    delay2 = SweepAxis("schedule.delta2", *DELAY_RANGE, DELAY_POINTS)
    fig4a = dataclasses.replace(
        fig4, name="fig4a", citation="dissociation vs time and E2 delay, g_nn0=3.61",
        swept=_sweep(delay2, ("W",)),
    )
    fig4b = dataclasses.replace(
        fig4, name="fig4b", schedule=fig4.schedule.replace(g_nn0=400.0),
        citation="dissociation vs time and E2 delay, g_nn0=400",
        swept=_sweep(delay2, ("W",)),
    )
    fig4c = dataclasses.replace(
        fig4, name="fig4c", citation="dissociation vs time and E2 intensity, delta2=0",
        swept=_sweep(INTENSITY_AXIS, ("W",)),
    )
    fig4d = dataclasses.replace(
        fig4, name="fig4d",
        citation="ground-level population vs time and E2 intensity, delta2=0",
        swept=_sweep(INTENSITY_AXIS, ("pop_m",)),
    )

    fig5 = ScenarioPreset(
        schedule=PulseSchedule(g_mn0=2.0, g_nn0=0.25, g_ff0=0.36, g_nf0=AUTO, delta2=0.0,
                               delta3=0.0, d2=1.0, d3=1.6),
        params=FANO,
        init=on_m,
        name="fig5",
        citation="three-pulse control; Omega_mn=Omega_nf=0, g_mn0=2, g_nn0=0.25, "
                 "g_ff0=0.36, g_nf0=0.3, d2=1, d3=1.6, delta3=0",
        swept=_sweep(delay2, ("pop_m", "pop_n", "pop_f", "W"), axis2=None),
    )
    fig5a = dataclasses.replace(
        fig5, name="fig5a", citation="dissociation vs time and E2 delay",
        swept=_sweep(delay2, ("W",)),
    )
    fig5b = dataclasses.replace(
        fig5, name="fig5b", citation="upper-level population vs time and E2 delay",
        swept=_sweep(delay2, ("pop_f",)),
    )
    fig5c = dataclasses.replace(
        fig5, name="fig5c",
        citation="population and dissociation dynamics, all pulses peak together",
        swept=None,
    )
    fig5d = dataclasses.replace(
        fig5, name="fig5d", schedule=fig5.schedule.replace(delta2=-1.5),
        citation="population and dissociation dynamics, E2 advanced to delta2=-1.5",
        swept=None,
    )

    fig6_schedule = fig5.schedule.replace(delta2=2.8, delta3=0.0)
    fig6a = dataclasses.replace(
        fig5, name="fig6a", schedule=fig6_schedule,
        citation="three-pulse population of f vs q_nf; delta2=2.8, delta3=0, Omega_nf=0",
        swept=_sweep(SweepAxis("params.q_nf", *Q_RANGE, SCAN_POINTS), ("pop_f",)),
    )
    fig6b = dataclasses.replace(
        fig5, name="fig6b", schedule=fig6_schedule,
        citation="three-pulse population of f vs two-photon detuning; q_nf=10",
        swept=_sweep(SweepAxis("params.delta_nf", *DETUNING_RANGE, SCAN_POINTS), ("pop_f",)),
    )
    fig7 = dataclasses.replace(
        fig5, name="fig7", schedule=fig6_schedule,
        citation="dissociation and population of n vs two-photon detuning; q_nf=10",
        swept=_sweep(SweepAxis("params.delta_nf", *DETUNING_RANGE, SCAN_POINTS), ("W", "pop_n")),
    )
    presets = [fig2, fig3a, fig3b, fig4, fig4a, fig4b, fig4c, fig4d,
               fig5, fig5a, fig5b, fig5c, fig5d, fig6a, fig6b, fig7]
    return {p.name: p for p in presets}


PRESETS = _build_presets()


def preset_names() -> list[str]:
    return list(PRESETS)


def preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}"
        ) from None


def coefficient_matrix(couplings: InstantCouplings, params: SystemParams) -> np.ndarray:
    """Matrix M of the linear system d(a_m, a_n, a_f)/dT = M (a_m, a_n, a_f)."""
    p = params
    g_mn, g_nn, g_ff, g_nf = couplings.g_mn, couplings.g_nn, couplings.g_ff, couplings.g_nf
    cross = g_nf * (1 + 1j * p.q_nf)
    return np.array(
        [
            [-(p.eta_m + 1j * (p.delta_mn - p.delta_nf)), -1j * g_mn, 0.0],
            [-1j * g_mn, -(p.eta_n + g_nn + 1j * (p.delta_nf + p.q_nn * g_nn)), -cross],
            [0.0, -cross, -(p.eta_f + g_ff + 1j * p.q_ff * g_ff)],
        ],
        dtype=np.complex128,
    )


# eigenvector matrices worse conditioned than this are treated as defective
_COND_LIMIT = 1e8
_ZERO = 1e-12


def _exp_eigs(eigvals: np.ndarray, dt: float) -> np.ndarray:
    if math.isfinite(dt):
        return np.exp(eigvals * dt)
    out = np.empty_like(eigvals)
    for k, lam in enumerate(eigvals):
        if abs(lam) <= _ZERO:
            out[k] = 1.0
        elif lam.real < -_ZERO:
            out[k] = 0.0
        else:
            raise ValidationError(f"no T -> infinity limit: eigenvalue {lam} does not decay")
    return out


def constant_coefficient_solution(
    couplings: InstantCouplings, params: SystemParams, init: AmplitudeState, T: float
) -> AmplitudeState:
    """Exact amplitudes at time ``T`` for couplings held fixed since ``init.T``.

    Uses ``V exp(L dt) V^-1`` from the eigendecomposition of the coefficient
    matrix; a nearly defective matrix falls back to the matrix exponential.
    ``T = inf`` returns the asymptotic state when it exists.  W is not
    propagated and is returned as ``init.W``.
    """
    dt = T - init.T
    if math.isnan(dt) or dt < 0:
        raise ValidationError(f"T={T} precedes the initial time {init.T}")
    M = coefficient_matrix(couplings, params)
    a0 = init.amplitudes
    try:
        eigvals, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise LicsError(f"eigendecomposition failed: {exc}") from exc
    if np.linalg.cond(V) < _COND_LIMIT:
        coeffs = np.linalg.solve(V, a0)
        a = V @ (_exp_eigs(eigvals, dt) * coeffs)
    else:
        if not math.isfinite(dt):
            raise ValidationError("asymptotic limit needs a diagonalisable coefficient matrix")
        a = scipy.linalg.expm(M * dt) @ a0
    if not np.all(np.isfinite(a)):
        raise LicsError("closed-form solution is not finite")
    return AmplitudeState(a[0], a[1], a[2], init.W, float(T))


def two_pulse_lics(
    delta3: float,
    base: Optional[ScenarioPreset] = None,
    cfg: Optional[IntegratorConfig] = None,
    **schedule_overrides,
) -> dict[str, float]:
    """Final ``pop_n``, ``pop_f`` and ``W`` for the E2/E3 transfer from level n.

    E1 is switched off and level n starts fully populated, whatever ``base``
    (default: the fig2 preset) says.
    """
    base = base or PRESETS["fig2"]
    schedule = base.schedule.replace(delta3=delta3, e1=False, **schedule_overrides)
    traj = integrate(schedule, base.params, AmplitudeState(a_n=1.0), cfg or base.integrator)
    final = traj.final_observables()
    return {"pop_n": final["pop_n"], "pop_f": final["pop_f"], "W": final["W"]}
