"""Gaussian coupling schedules for the three pulses.

E1 drives the bound-bound transition m-n with a field-amplitude Gaussian
``g_mn0 * exp(-T**2 / 2)`` peaked at T = 0.  E2 and E3 dress the continuum
from levels n and f; their induced widths follow the intensity envelopes
``g_nn0 * exp(-(T - delta2)**2 / d2**2)`` and ``g_ff0 * exp(-(T - delta3)**2 / d3**2)``.
The cross width g_nf is the geometric mean of the two half-Gaussians, so
``g_nf(T)**2 <= g_nn(T) * g_ff(T)`` holds at every T.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError

AUTO = "auto"

# Layout of the envelope vector consumed by the integration kernel:
# [g_mn0, c1, k1, g_nn0, c2, k2, g_ff0, c3, k3, g_nf0]
# where each coupling is peak * exp(-k * (T - c)**2) and the cross term is
# g_nf0 * exp(-(k2 * (T - c2)**2 + k3 * (T - c3)**2) / 2).
ENVELOPE_SIZE = 10


@dataclass(frozen=True)
class InstantCouplings:
    """Instantaneous coupling values at one time (or held constant)."""

    g_mn: float = 0.0
    g_nn: float = 0.0
    g_ff: float = 0.0
    g_nf: float = 0.0

    def __post_init__(self):
        for name in ("g_mn", "g_nn", "g_ff", "g_nf"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"coupling {name} is not finite: {value!r}")
            if value < 0:
                raise ValidationError(f"coupling {name} must be non-negative, got {value}")

    def envelope(self) -> np.ndarray:
        """Envelope vector with zero curvature, i.e. constant couplings."""
        return np.array(
            [self.g_mn, 0.0, 0.0, self.g_nn, 0.0, 0.0, self.g_ff, 0.0, 0.0, self.g_nf],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class PulseSchedule:
    """Peak couplings, delays and durations of the three Gaussian pulses.

    Delays are measured from the peak of E1 at T = 0 in units of its
    half-duration.  ``delta3 < 0`` with ``delta2 = 0`` is the counterintuitive
    ordering where E3 arrives first.  ``g_nf0 = "auto"`` sets the cross
    coupling to ``sqrt(g_nn0 * g_ff0)``.
    """

    g_mn0: float = 0.0
    g_nn0: float = 0.0
    g_ff0: float = 0.0
    g_nf0: Union[float, str] = AUTO
    delta2: float = 0.0
    delta3: float = 0.0
    d2: float = 1.0
    d3: float = 1.0
    e1: bool = True
    e2: bool = True
    e3: bool = True

    def __post_init__(self):
        for name in ("g_mn0", "g_nn0", "g_ff0", "delta2", "delta3", "d2", "d3"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValidationError(f"{name} is not finite: {value!r}")
        for name in ("g_mn0", "g_nn0", "g_ff0"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative, got {getattr(self, name)}")
        for name in ("d2", "d3"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"pulse duration {name} must be positive, got {getattr(self, name)}")
        if isinstance(self.g_nf0, str):
            if self.g_nf0 != AUTO:
                raise ValidationError(f"g_nf0 must be a number or 'auto', got {self.g_nf0!r}")
        else:
            g = self.g_nf0
            if isinstance(g, bool) or not math.isfinite(g) or g < 0:
                raise ValidationError(f"g_nf0 must be finite and non-negative, got {g!r}")
            bound = math.sqrt(self.g_nn0 * self.g_ff0)
            if g > bound * (1 + 1e-12) + 1e-300:
                raise ValidationError(
                    f"g_nf0={g} violates g_nf0**2 <= g_nn0*g_ff0 (max {bound:.6g})"
                )

    @property
    def auto_cross(self) -> bool:
        return isinstance(self.g_nf0, str)

    @property
    def cross_peak(self) -> float:
        """Peak cross coupling, resolving ``auto`` to the geometric mean."""
        if self.auto_cross:
            return math.sqrt(self.g_nn0 * self.g_ff0)
        return float(self.g_nf0)

    def replace(self, **changes) -> "PulseSchedule":
        return dataclasses.replace(self, **changes)

    def envelope(self) -> np.ndarray:
        gmn = self.g_mn0 if self.e1 else 0.0
        gnn = self.g_nn0 if self.e2 else 0.0
        gff = self.g_ff0 if self.e3 else 0.0
        gnf = self.cross_peak if (self.e2 and self.e3) else 0.0
        return np.array(
            [
                gmn, 0.0, 0.5,
                gnn, self.delta2, 1.0 / self.d2**2,
                gff, self.delta3, 1.0 / self.d3**2,
                gnf,
            ],
            dtype=np.float64,
        )

    def pulse_spans(self) -> list[tuple[float, float]]:
        """(peak time, duration) of every enabled pulse."""
        spans = []
        if self.e1:
            spans.append((0.0, 1.0))
        if self.e2:
            spans.append((self.delta2, self.d2))
        if self.e3:
            spans.append((self.delta3, self.d3))
        return spans


def evaluate_envelope(env: np.ndarray, T):
    """Evaluate an envelope vector at scalar or array times.

    Returns ``(g_mn, g_nn, g_ff, g_nf)`` with the same shape as ``T``.
    """
    T = np.asarray(T, dtype=np.float64)
    x1 = env[2] * (T - env[1]) ** 2
    x2 = env[5] * (T - env[4]) ** 2
    x3 = env[8] * (T - env[7]) ** 2
    return (
        env[0] * np.exp(-x1),
        env[3] * np.exp(-x2),
        env[6] * np.exp(-x3),
        env[9] * np.exp(-0.5 * (x2 + x3)),
    )


def couplings_at(schedule: PulseSchedule, T: float) -> InstantCouplings:
    """Instantaneous couplings of ``schedule`` at dimensionless time ``T``."""
    if math.isnan(T):
        raise ValidationError("time is NaN")
    values = evaluate_envelope(schedule.envelope(), T)
    return InstantCouplings(*(float(v) for v in values))


def coupling_series(schedule: PulseSchedule, times) -> dict[str, np.ndarray]:
    """Vectorised couplings on a time grid, keyed by coupling name."""
    g_mn, g_nn, g_ff, g_nf = evaluate_envelope(schedule.envelope(), times)
    return {"g_mn": g_mn, "g_nn": g_nn, "g_ff": g_ff, "g_nf": g_nf}
