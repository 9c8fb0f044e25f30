"""Three-pulse coherent control of photodissociation through two laser-induced continuum structures."""

from .dynamics import (
    OBSERVABLES,
    AmplitudeState,
    DimensionalParams,
    IntegratorConfig,
    SystemParams,
    Trajectory,
    integrate,
    rhs,
    scale_to_dimensionless,
)
from .errors import IntegrationError, LicsError, StiffnessError, ValidationError
from .model import Scenario
from .optimize import FreeParameter, Objective, OptimizeResult, optimize
from .pulses import InstantCouplings, PulseSchedule, couplings_at
from .scenarios import PRESETS, constant_coefficient_solution, preset, two_pulse_lics
from .sweep import SweepAxis, SweepResult, SweepSpec, run_sweep

__version__ = "0.1.0"
