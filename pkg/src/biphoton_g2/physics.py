"""Biphoton amplitudes and second-order correlation functions.

Type-II SPDC in a crystal of length L produces an H/V pair whose two
beamsplitter amplitudes are displaced by the e-o delay ``tau0 = D*L/2``.
A fibre with group-velocity dispersion k'' maps the spectral amplitude
``sinc(tau0*Omega)`` onto time, so after a length z the correlation
function takes the spectral shape with width ``tau_f = 2*k''*z/tau0``.

All functions here are pure and vectorized over the time grid. Times are
in seconds, lengths in meters, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .errors import FibreAbsentError, InvalidParameterError

_SERIES_CUTOFF = 1e-6

DEFAULT_GRID_POINTS = 2**14 + 1
DEFAULT_SPAN_TAU_F = 5.0
FAR_FIELD_THRESHOLD = 50.0


# -----------------------------
# Domain types
# -----------------------------

@dataclass(frozen=True)
class SpdcSource:
    """Crystal parameters. ``omega0`` is carried as metadata only."""

    crystal_length_L: float
    inverse_gv_difference_D: float
    pump_half_frequency_omega0: Optional[float] = None

    def __post_init__(self):
        if not (self.crystal_length_L > 0 and math.isfinite(self.crystal_length_L)):
            raise InvalidParameterError(f"crystal length must be > 0, got {self.crystal_length_L}")
        if not (self.inverse_gv_difference_D > 0 and math.isfinite(self.inverse_gv_difference_D)):
            raise InvalidParameterError(
                f"inverse group-velocity difference must be > 0, got {self.inverse_gv_difference_D}"
            )

    @property
    def tau0(self) -> float:
        return eo_delay(self)


@dataclass(frozen=True)
class DispersiveFibre:
    k_prime: float = 0.0
    k_double_prime: float = 0.0
    length_z: float = 0.0

    def __post_init__(self):
        if self.length_z < 0 or not math.isfinite(self.length_z):
            raise InvalidParameterError(f"fibre length must be >= 0, got {self.length_z}")
        if self.k_prime < 0 or not math.isfinite(self.k_prime):
            raise InvalidParameterError(f"k' must be >= 0, got {self.k_prime}")
        if not math.isfinite(self.k_double_prime):
            raise InvalidParameterError("k'' must be finite")

    @property
    def group_delay(self) -> float:
        return self.k_prime * self.length_z

    @property
    def gdd(self) -> float:
        """Accumulated group-delay dispersion k''*z (s^2)."""
        return self.k_double_prime * self.length_z

    @property
    def present(self) -> bool:
        return self.gdd != 0.0


@dataclass(frozen=True)
class AnalyzerConfig:
    """Polarizer angles from horizontal and birefringent compensation delay.

    ``polarizer_angles=None`` means no polarizers (incoherent sum of the two
    amplitudes). Angles only enter through products of sin and cos, so they
    are effectively taken modulo pi.
    """

    polarizer_angles: Optional[Tuple[float, float]] = None
    compensation_delay_tau_c: float = 0.0

    def __post_init__(self):
        if self.compensation_delay_tau_c < 0 or not math.isfinite(self.compensation_delay_tau_c):
            raise InvalidParameterError(
                f"compensation delay must be >= 0, got {self.compensation_delay_tau_c}"
            )
        if self.polarizer_angles is not None:
            a1, a2 = self.polarizer_angles
            object.__setattr__(self, "polarizer_angles", (float(a1), float(a2)))

    @classmethod
    def plus(cls, tau_c: float = 0.0) -> "AnalyzerConfig":
        """Polarizers at (45, 45) degrees."""
        return cls((math.pi / 4, math.pi / 4), tau_c)

    @classmethod
    def minus(cls, tau_c: float = 0.0) -> "AnalyzerConfig":
        """Polarizers at (45, -45) degrees."""
        return cls((math.pi / 4, -math.pi / 4), tau_c)

    @classmethod
    def none(cls, tau_c: float = 0.0) -> "AnalyzerConfig":
        return cls(None, tau_c)

    def projection_weights(self) -> Tuple[float, float]:
        """Weights of the (H1 V2) and (V1 H2) amplitudes after the polarizers."""
        a1, a2 = self.polarizer_angles
        return math.cos(a1) * math.sin(a2), math.sin(a1) * math.cos(a2)


@dataclass(frozen=True)
class TimeGrid:
    start_theta: float
    step: float
    count: int

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidParameterError(f"grid step must be > 0, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError(f"grid needs at least 2 points, got {self.count}")

    @property
    def theta(self) -> np.ndarray:
        return self.start_theta + self.step * np.arange(self.count)

    @property
    def stop_theta(self) -> float:
        return self.start_theta + self.step * (self.count - 1)

    @classmethod
    def symmetric(cls, half_span: float, count: int = DEFAULT_GRID_POINTS) -> "TimeGrid":
        """Grid on [-half_span, half_span]; odd ``count`` puts a point at zero."""
        if half_span <= 0:
            raise InvalidParameterError("half_span must be > 0")
        step = 2.0 * half_span / (count - 1)
        return cls(-half_span, step, count)

    @classmethod
    def with_step(cls, half_span: float, step: float) -> "TimeGrid":
        """Symmetric grid with a fixed step, always containing zero."""
        m = int(math.ceil(half_span / step))
        return cls(-m * step, step, 2 * m + 1)


@dataclass
class CorrelationCurve:
    grid: TimeGrid
    values: np.ndarray
    normalization_note: str = "arbitrary rate-density units"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.count,):
            raise InvalidParameterError(
                f"curve has {self.values.size} values for a {self.grid.count}-point grid"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("curve values must be finite")
        if np.any(self.values < 0):
            raise InvalidParameterError("curve values must be nonnegative")

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    def integral(self) -> float:
        return float(trapezoid(self.values, dx=self.grid.step))

    def scaled(self, factor: float, note: Optional[str] = None) -> "CorrelationCurve":
        if factor < 0:
            raise InvalidParameterError("scale factor must be >= 0")
        return CorrelationCurve(self.grid, self.values * factor, note or self.normalization_note)

    def peak_normalized(self) -> "CorrelationCurve":
        peak = self.values.max()
        if peak <= 0:
            raise InvalidParameterError("cannot peak-normalize an all-zero curve")
        return self.scaled(1.0 / peak, "peak-normalized (max = 1)")

    def integral_normalized(self) -> "CorrelationCurve":
        total = self.integral()
        if total <= 0:
            raise InvalidParameterError("cannot integral-normalize a zero-integral curve")
        return self.scaled(1.0 / total, "integral-normalized (trapezoid integral = 1, units 1/s)")


@dataclass(frozen=True)
class ComplexAmplitudeSample:
    theta: float
    value: complex


@dataclass(frozen=True)
class FarFieldReport:
    ratio: float
    threshold: float
    valid: bool


class Sign(str, Enum):
    PLUS = "plus"
    MINUS = "minus"


# -----------------------------
# Scalar helpers
# -----------------------------

def sinc(u):
    """Unnormalized sinc, sin(u)/u, with a series branch near zero."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    out = np.where(small, 1.0 - u * u / 6.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def eo_delay(source: SpdcSource) -> float:
    """e-o delay tau0 = D*L/2."""
    L, D = source.crystal_length_L, source.inverse_gv_difference_D
    if not (L > 0 and D > 0):
        raise InvalidParameterError("L and D must be > 0")
    return D * L / 2.0


def spread_width(fibre: DispersiveFibre, tau0: float) -> float:
    """Correlation width after the fibre, tau_f = 2*k''*z/tau0."""
    if not tau0 > 0:
        raise InvalidParameterError(f"tau0 must be > 0, got {tau0}")
    return 2.0 * fibre.gdd / tau0


def spectral_amplitude(omega_shift, tau0: float):
    """Type-II spectral amplitude sinc(tau0*Omega)."""
    if not tau0 > 0:
        raise InvalidParameterError(f"tau0 must be > 0, got {tau0}")
    return sinc(tau0 * np.asarray(omega_shift, dtype=float))


def dispersed_amplitude(theta, fibre: DispersiveFibre, tau0: float):
    """Biphoton amplitude after the fibre, in shifted time theta = tau - k'z.

    The quadratic phase is absolute here, so this form loses phase precision
    for |theta| much larger than sqrt(k''z); correlation functions use
    :func:`g2_dispersed`, which only needs phase differences.
    """
    gdd = fibre.gdd
    if gdd == 0.0:
        raise FibreAbsentError("k''*z == 0: no dispersive spreading, use g2_pre_fibre")
    theta = np.asarray(theta, dtype=float)
    prefactor = 1.0 / np.sqrt(4j * np.pi * gdd)
    envelope = spectral_amplitude(theta / (2.0 * gdd), tau0)
    out = prefactor * np.exp(1j * theta**2 / (4.0 * gdd)) * envelope
    return out if out.ndim else complex(out)


def far_field_check(source: SpdcSource, fibre: DispersiveFibre,
                    threshold: float = FAR_FIELD_THRESHOLD) -> FarFieldReport:
    """Advisory check that tau_f >> tau0 (inclusive threshold)."""
    tau0 = eo_delay(source)
    ratio = abs(spread_width(fibre, tau0)) / tau0
    return FarFieldReport(ratio=ratio, threshold=threshold, valid=bool(ratio >= threshold))


def default_grid(tau_f: float, count: int = DEFAULT_GRID_POINTS,
                 span: float = DEFAULT_SPAN_TAU_F) -> TimeGrid:
    return TimeGrid.symmetric(span * abs(tau_f), count)


# -----------------------------
# Correlation functions
# -----------------------------

def _two_amplitude_intensity(a, b, dphi):
    """|a + b*exp(i*dphi)|^2 for real a, b, written to stay nonnegative.

    Uses (a-b)^2 + 4ab cos^2(dphi/2) when ab >= 0 and
    (a+b)^2 - 4ab sin^2(dphi/2) otherwise; both are sums of nonnegative
    terms, and the second cancels exactly when a = -b and dphi = 0.
    """
    ab = a * b
    same = (a - b) ** 2 + 4.0 * ab * np.cos(0.5 * dphi) ** 2
    opposite = (a + b) ** 2 - 4.0 * ab * np.sin(0.5 * dphi) ** 2
    return np.where(ab >= 0, same, opposite)


def g2_dispersed(grid: TimeGrid, source: SpdcSource, fibre: DispersiveFibre,
                 analyzer: AnalyzerConfig) -> CorrelationCurve:
    """Exact G2 after the fibre for arbitrary polarizers and compensation.

    The common quadratic phase of the two amplitudes cancels analytically;
    only the phase difference -2*theta*tau_e/(tau0*tau_f) is evaluated.
    """
    if not fibre.present:
        raise FibreAbsentError("k''*z == 0: no dispersive spreading, use g2_pre_fibre")
    tau0 = eo_delay(source)
    tau_f = spread_width(fibre, tau0)
    tau_e = tau0 - analyzer.compensation_delay_tau_c
    theta = grid.theta

    f1 = sinc((theta - tau_e) / tau_f)
    f2 = sinc((theta + tau_e) / tau_f)
    scale = 1.0 / (4.0 * np.pi * abs(fibre.gdd))

    if analyzer.polarizer_angles is None:
        values = scale * (f1 * f1 + f2 * f2)
        note = "|F~(theta-tau_e)|^2 + |F~(theta+tau_e)|^2, units 1/s"
    else:
        w1, w2 = analyzer.projection_weights()
        dphi = -2.0 * theta * tau_e / (tau0 * tau_f)
        values = scale * _two_amplitude_intensity(w1 * f1, w2 * f2, dphi)
        note = "|w1 F~(theta-tau_e) + w2 F~(theta+tau_e)|^2, units 1/s"
    return CorrelationCurve(grid, np.maximum(values, 0.0), note)


def g2_approx(grid: TimeGrid, tau_f: float, sign: Sign | str) -> CorrelationCurve:
    """Far-field limit of G+/G- (tau_f >> tau0), dimensionless.

    minus: sin^4(u)/u^2, plus: sin^2(u) cos^2(u)/u^2 with u = theta/tau_f.
    """
    if not tau_f > 0:
        raise InvalidParameterError(f"tau_f must be > 0, got {tau_f}")
    sign = Sign(sign)
    u = grid.theta / tau_f
    s = sinc(u)
    trig = np.sin(u) if sign is Sign.MINUS else np.cos(u)
    return CorrelationCurve(grid, (s * trig) ** 2, f"far-field G{'-' if sign is Sign.MINUS else '+'}, "
                            "dimensionless")


def g2_pre_fibre(grid: TimeGrid, source: SpdcSource, analyzer: AnalyzerConfig) -> CorrelationCurve:
    """G2 without the fibre: two unit rectangles of half-width tau0 at +-tau_e.

    The rectangles are closed intervals, so at tau_c = 0 they touch at
    tau = 0 only.
    """
    tau0 = eo_delay(source)
    tau_e = tau0 - analyzer.compensation_delay_tau_c
    tau = grid.theta
    a = (np.abs(tau - tau_e) <= tau0).astype(float)
    b = (np.abs(tau + tau_e) <= tau0).astype(float)
    if analyzer.polarizer_angles is None:
        values = a * a + b * b
    else:
        w1, w2 = analyzer.projection_weights()
        values = (w1 * a + w2 * b) ** 2
    return CorrelationCurve(grid, values, "unit-rectangle amplitudes, dimensionless")
