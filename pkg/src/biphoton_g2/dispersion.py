"""Fibre GVD from the width of a measured coincidence peak.

The forward model is the no-polarizer correlation curve for a trial k'',
convolved with the known jitter and binned onto the measured MCA channels.
Both histograms are normalized to unit sum over the channels and compared
by least squares; k'' is searched in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .detection import (
    KERNEL_REACH_SIGMA,
    MIN_SAMPLES_PER_FWHM,
    CoincidenceHistogram,
    JitterModel,
    McaConfig,
    bin_histogram,
    convolve_jitter,
    fwhm,
)
from .errors import InvalidParameterError, NoConvergenceError, UnderdeterminedError
from .physics import (
    AnalyzerConfig,
    CorrelationCurve,
    DispersiveFibre,
    SpdcSource,
    TimeGrid,
    eo_delay,
    g2_dispersed,
    spread_width,
)

# (s^2/m); equals [1e-30, 1e-24] s^2/cm
DEFAULT_BRACKET = (1e-28, 1e-22)
DEFAULT_LOG_TOL = 1e-4
SCAN_POINTS = 25
MAX_MODEL_POINTS = 2**18
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DispersionEstimate:
    k_double_prime_hat: float
    objective_residual: float
    iterations: int
    bracket: Tuple[float, float]


def histogram_as_curve(hist: CoincidenceHistogram) -> CorrelationCurve:
    """Counts per channel as a curve sampled at channel centers."""
    cfg = hist.config
    grid = TimeGrid(cfg.origin + 0.5 * cfg.channel_width, cfg.channel_width, cfg.channel_count)
    return CorrelationCurve(grid, np.asarray(hist.counts, dtype=float), "counts per channel")


def measurement_grid(mca: McaConfig, tau_f: float, jitter: JitterModel) -> TimeGrid:
    """Grid covering the MCA range plus the jitter reach, fine enough for both widths."""
    half = max(abs(mca.origin), abs(mca.end))
    step = min(mca.channel_width, abs(tau_f) / 10.0)
    if jitter.fwhm > 0:
        step = min(step, jitter.fwhm / MIN_SAMPLES_PER_FWHM)
        half += KERNEL_REACH_SIGMA * jitter.sigma
    step = max(step, 2.0 * half / MAX_MODEL_POINTS)
    return TimeGrid.with_step(half, step)


class ForwardModel:
    """Normalized expected channel contents as a function of k''."""

    def __init__(self, hist: CoincidenceHistogram, source: SpdcSource, length_z: float,
                 jitter: JitterModel):
        self.mca = hist.config
        self.source = source
        self.length_z = length_z
        self.jitter = jitter
        self.tau0 = eo_delay(source)

    def grid_for(self, tau_f: float) -> TimeGrid:
        return measurement_grid(self.mca, tau_f, self.jitter)

    def __call__(self, k2: float) -> np.ndarray:
        fibre = DispersiveFibre(0.0, k2, self.length_z)
        tau_f = spread_width(fibre, self.tau0)
        curve = g2_dispersed(self.grid_for(tau_f), self.source, fibre, AnalyzerConfig.none())
        if self.jitter.fwhm > 0:
            curve = convolve_jitter(curve, self.jitter, extend=True)
        counts = np.asarray(bin_histogram(curve, self.mca, 1.0).counts, dtype=float)
        total = counts.sum()
        return counts / total if total > 0 else counts


def golden_section(fn: Callable[[float], float], lo: float, hi: float, tol: float):
    """Minimize a unimodal ``fn`` on [lo, hi]; returns (x, f(x), evaluations)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    evals = 2
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
        evals += 1
    x = 0.5 * (a + b)
    return x, fn(x), evals + 1


def estimate_dispersion(measured: CoincidenceHistogram, source: SpdcSource, length_z: float,
                        jitter: JitterModel, bracket: Tuple[float, float] = DEFAULT_BRACKET,
                        log_tol: float = DEFAULT_LOG_TOL) -> DispersionEstimate:
    """Least-squares k'' (s^2/m) for a no-polarizer coincidence histogram.

    A coarse log-spaced scan locates the basin, then golden-section search
    refines ln(k'') inside the neighbouring scan interval to ``log_tol``.
    """
    if not length_z > 0:
        raise InvalidParameterError(f"fibre length must be > 0 to estimate k'', got {length_z}")
    lo, hi = bracket
    if not 0 < lo < hi:
        raise InvalidParameterError(f"bad k'' bracket {bracket}")
    counts = np.asarray(measured.counts, dtype=float)
    if counts.sum() <= 0:
        raise UnderdeterminedError("measured histogram is empty")

    measured_width = fwhm(histogram_as_curve(measured))
    if measured_width <= jitter.fwhm:
        raise UnderdeterminedError(
            f"measured FWHM {measured_width:.4g} s does not exceed the jitter FWHM {jitter.fwhm:.4g} s"
        )
    target = counts / counts.sum()
    model = ForwardModel(measured, source, length_z, jitter)

    def objective(log_k2: float) -> float:
        return float(np.sum((model(math.exp(log_k2)) - target) ** 2))

    x_lo, x_hi = math.log(lo), math.log(hi)
    scan = np.linspace(x_lo, x_hi, SCAN_POINTS)
    values = [objective(x) for x in scan]
    best = int(np.argmin(values))
    a = scan[max(best - 1, 0)]
    b = scan[min(best + 1, SCAN_POINTS - 1)]
    x, f, evals = golden_section(objective, a, b, log_tol)
    if x - x_lo <= log_tol or x_hi - x <= log_tol:
        raise NoConvergenceError(f"k'' search ran into the bracket edge at {math.exp(x):.4g} s^2/m")
    residual = math.sqrt(f / float(np.sum(target**2)))
    return DispersionEstimate(
        k_double_prime_hat=math.exp(x),
        objective_residual=residual,
        iterations=SCAN_POINTS + evals,
        bracket=(lo, hi),
    )
