"""What the START-STOP apparatus records from an ideal correlation curve.

Detector jitter is a single Gaussian of given FWHM applied once to the
delay distribution (the combined response of both detectors). The MCA is a
row of equal-width channels; anything outside lands in the under/overflow
tallies so totals are always conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import fftconvolve

from .errors import (
    ConfigurationError,
    InvalidParameterError,
    NormalizationError,
    ResolutionError,
    UndefinedFwhmError,
    UndefinedVisibilityError,
)
from .physics import CorrelationCurve, TimeGrid

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
KERNEL_REACH_SIGMA = 8.0
MIN_SAMPLES_PER_FWHM = 10
DEFAULT_CHANNEL_WIDTH = 2.5e-12


@dataclass(frozen=True)
class JitterModel:
    fwhm: float = 0.0
    shape: str = "gaussian"

    def __post_init__(self):
        if self.fwhm < 0 or not math.isfinite(self.fwhm):
            raise InvalidParameterError(f"jitter FWHM must be >= 0, got {self.fwhm}")
        if self.shape != "gaussian":
            raise InvalidParameterError(f"unsupported jitter shape {self.shape!r}")

    @property
    def sigma(self) -> float:
        return self.fwhm / FWHM_PER_SIGMA

    def kernel(self, step: float) -> np.ndarray:
        """Unit-sum Gaussian sampled at multiples of ``step``, odd length."""
        half = int(math.ceil(KERNEL_REACH_SIGMA * self.sigma / step))
        x = np.arange(-half, half + 1) * step
        k = np.exp(-0.5 * (x / self.sigma) ** 2)
        return k / k.sum()


@dataclass(frozen=True)
class McaConfig:
    channel_width: float
    channel_count: int
    origin: float

    def __post_init__(self):
        if not (self.channel_width > 0 and math.isfinite(self.channel_width)):
            raise InvalidParameterError(f"channel width must be > 0, got {self.channel_width}")
        if int(self.channel_count) != self.channel_count or self.channel_count < 1:
            raise InvalidParameterError(f"channel count must be a positive integer, got {self.channel_count}")

    @classmethod
    def centered(cls, channel_width: float = DEFAULT_CHANNEL_WIDTH,
                 channel_count: int = 2001) -> "McaConfig":
        """Channels laid out so that, for odd counts, the middle one is centered on zero."""
        return cls(channel_width, channel_count, -0.5 * channel_count * channel_width)

    @property
    def edges(self) -> np.ndarray:
        return self.origin + self.channel_width * np.arange(self.channel_count + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.origin + self.channel_width * (np.arange(self.channel_count) + 0.5)

    @property
    def end(self) -> float:
        return self.origin + self.channel_width * self.channel_count


@dataclass
class CoincidenceHistogram:
    config: McaConfig
    counts: np.ndarray
    underflow: float = 0
    overflow: float = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.counts.shape != (self.config.channel_count,):
            raise ConfigurationError(
                f"{self.counts.size} counts for {self.config.channel_count} channels"
            )
        if np.any(self.counts < 0) or self.underflow < 0 or self.overflow < 0:
            raise InvalidParameterError("histogram counts must be nonnegative")

    @property
    def recorded(self):
        return self.counts.sum()

    @property
    def total(self):
        return self.recorded + self.underflow + self.overflow

    @property
    def centers(self) -> np.ndarray:
        return self.config.centers

    def rebin(self, factor: int) -> "CoincidenceHistogram":
        """Merge groups of ``factor`` adjacent channels; leftovers go to overflow."""
        if factor < 1:
            raise InvalidParameterError("rebin factor must be >= 1")
        n = self.config.channel_count // factor
        if n == 0:
            raise ConfigurationError("rebin factor larger than channel count")
        merged = self.counts[: n * factor].reshape(n, factor).sum(axis=1)
        spill = self.counts[n * factor:].sum()
        cfg = McaConfig(self.config.channel_width * factor, n, self.config.origin)
        return CoincidenceHistogram(cfg, merged, self.underflow, self.overflow + spill)


# -----------------------------
# Operations
# -----------------------------

def convolve_jitter(curve: CorrelationCurve, jitter: JitterModel,
                    extend: bool = False) -> CorrelationCurve:
    """Convolve with a unit-area Gaussian of the jitter FWHM.

    The input is zero outside its grid. With ``extend=False`` the result is
    cropped to the input grid, so mass smeared past the ends is lost; with
    ``extend=True`` the grid grows by the kernel reach on both sides and the
    integral is preserved.
    """
    if jitter.fwhm == 0.0:
        return CorrelationCurve(curve.grid, curve.values.copy(), curve.normalization_note)
    step = curve.grid.step
    if step > jitter.fwhm / MIN_SAMPLES_PER_FWHM:
        raise ResolutionError(
            f"grid step {step:.3g} s too coarse for jitter FWHM {jitter.fwhm:.3g} s "
            f"(need <= FWHM/{MIN_SAMPLES_PER_FWHM})"
        )
    kernel = jitter.kernel(step)
    half = kernel.size // 2
    full = fftconvolve(curve.values, kernel, mode="full")
    # FFT round-off can dip a hair below zero where the true result is ~0
    full = np.maximum(full, 0.0)
    note = f"{curve.normalization_note}; jitter {jitter.fwhm:.6g} s FWHM"
    if extend:
        grid = TimeGrid(curve.grid.start_theta - half * step, step, full.size)
        return CorrelationCurve(grid, full, note)
    return CorrelationCurve(curve.grid, full[half: half + curve.grid.count], note)


def _cumulative(curve: CorrelationCurve) -> np.ndarray:
    return cumulative_trapezoid(curve.values, dx=curve.grid.step, initial=0.0)


def window_integral(curve: CorrelationCurve, window: Tuple[float, float]) -> float:
    """Integral of the curve over ``window``, zero outside the grid."""
    lo, hi = window
    if hi < lo:
        raise InvalidParameterError("window upper bound below lower bound")
    c = np.interp([lo, hi], curve.theta, _cumulative(curve))
    return float(c[1] - c[0])


def bin_histogram(curve: CorrelationCurve, mca: McaConfig,
                  total_expected_counts: float) -> CoincidenceHistogram:
    """Expected MCA counts: integral per channel, scaled to the grand total."""
    if total_expected_counts < 0:
        raise InvalidParameterError("total expected counts must be >= 0")
    theta = curve.theta
    if mca.end <= theta[0] or mca.origin >= theta[-1]:
        raise ConfigurationError("MCA range does not overlap the curve grid")
    cum = _cumulative(curve)
    total = cum[-1]
    if total <= 0:
        if total_expected_counts == 0:
            return CoincidenceHistogram(mca, np.zeros(mca.channel_count))
        raise NormalizationError("curve has zero integral")
    scale = total_expected_counts / total
    at_edges = np.interp(mca.edges, theta, cum)
    counts = np.maximum(np.diff(at_edges), 0.0) * scale
    return CoincidenceHistogram(
        mca,
        counts,
        underflow=float(at_edges[0] * scale),
        overflow=float((total - at_edges[-1]) * scale),
    )


def fwhm(curve: CorrelationCurve) -> float:
    """Full width at half maximum by linear interpolation.

    For oscillating curves the outermost half-maximum crossings are used, so
    a fringe dip below half maximum does not split the peak.
    """
    v = curve.values
    peak = v.max()
    if peak <= 0 or peak == v.min():
        raise UndefinedFwhmError("curve is flat or all zero")
    half = 0.5 * peak
    above = np.flatnonzero(v >= half)
    i0, i1 = above[0], above[-1]
    if i0 == 0 or i1 == v.size - 1:
        raise UndefinedFwhmError("half maximum not reached inside the grid")
    theta = curve.theta
    left = theta[i0 - 1] + (half - v[i0 - 1]) / (v[i0] - v[i0 - 1]) * curve.grid.step
    right = theta[i1] + (v[i1] - half) / (v[i1] - v[i1 + 1]) * curve.grid.step
    return float(right - left)


def central_window(width: float = DEFAULT_CHANNEL_WIDTH) -> Tuple[float, float]:
    return (-0.5 * width, 0.5 * width)


def visibility(curve_plus: CorrelationCurve, curve_minus: CorrelationCurve,
               window: Optional[Tuple[float, float]] = None) -> float:
    """(N+ - N-)/(N+ + N-) over ``window`` (default: one 2.5 ps channel at zero)."""
    if curve_plus.grid != curve_minus.grid:
        raise ConfigurationError("visibility needs both curves on the same grid")
    window = central_window() if window is None else window
    n_plus = window_integral(curve_plus, window)
    n_minus = window_integral(curve_minus, window)
    if n_plus + n_minus <= 0:
        raise UndefinedVisibilityError("no counts in the visibility window")
    return (n_plus - n_minus) / (n_plus + n_minus)


def integrated_rate(curve: CorrelationCurve) -> float:
    """Coincidence rate with the window equal to the whole grid span."""
    return curve.integral()
