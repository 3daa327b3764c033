"""Event-level simulation of the START-STOP measurement.

Each pair contributes one start-stop delay drawn from the normalized
correlation curve (inverse CDF, linear between grid points) plus one
Gaussian jitter deviate. Events are generated in fixed-size chunks, each
with its own counter-keyed RNG stream, so results do not depend on how
chunks are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from .detection import CoincidenceHistogram, JitterModel, McaConfig
from .errors import ConfigurationError, InvalidParameterError, NormalizationError
from .physics import CorrelationCurve

CHUNK_SIZE = 2**16

# spawn-key prefixes of the independent RNG streams derived from one seed
_STREAM_PAIRS = 0
_STREAM_PAIR_COUNT = 1
_STREAM_ACCIDENTALS = 2


@dataclass(frozen=True)
class EventSimConfig:
    """Either ``pair_count`` or ``pair_rate`` with ``duration`` must be set.

    With a rate, the number of pairs is Poisson with mean rate*duration.
    Accidentals need ``duration``.
    """

    pair_count: Optional[int] = None
    pair_rate: Optional[float] = None
    duration: Optional[float] = None
    accidental_rate_density: float = 0.0
    rng_seed: int = 0
    jitter: JitterModel = field(default_factory=JitterModel)

    def __post_init__(self):
        if self.pair_count is not None:
            if int(self.pair_count) != self.pair_count or self.pair_count < 0:
                raise InvalidParameterError(f"pair_count must be a nonnegative integer, got {self.pair_count}")
            if self.pair_rate is not None:
                raise InvalidParameterError("give either pair_count or pair_rate, not both")
        elif self.pair_rate is None or self.duration is None:
            raise InvalidParameterError("need pair_count, or pair_rate together with duration")
        for name in ("pair_rate", "duration"):
            value = getattr(self, name)
            if value is not None and (value < 0 or not math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {value}")
        if self.accidental_rate_density < 0 or not math.isfinite(self.accidental_rate_density):
            raise InvalidParameterError("accidental_rate_density must be finite and >= 0")
        if self.accidental_rate_density > 0 and self.duration is None:
            raise InvalidParameterError("accidentals need an acquisition duration")

    @property
    def seed(self) -> int:
        return int(self.rng_seed) & (2**64 - 1)


@dataclass(frozen=True)
class TacModel:
    applied_delay: float = 0.0
    range: Tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        lo, hi = self.range
        if not lo < hi:
            raise InvalidParameterError(f"TAC range must be non-empty, got {self.range}")


@dataclass(frozen=True)
class FitReport:
    chi2: float
    dof: int
    reduced_chi2: float
    p_value: float
    groups: int


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


class _InverseCdf:
    def __init__(self, curve: CorrelationCurve):
        cum = cumulative_trapezoid(curve.values, dx=curve.grid.step, initial=0.0)
        if not cum[-1] > 0:
            raise NormalizationError("curve has zero integral; cannot sample from it")
        self.cdf = cum / cum[-1]
        self.theta = curve.theta

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, self.cdf, self.theta)


def resolve_pair_count(config: EventSimConfig) -> int:
    if config.pair_count is not None:
        return int(config.pair_count)
    mean = config.pair_rate * config.duration
    return int(_rng(config.seed, _STREAM_PAIR_COUNT).poisson(mean))


def _chunk_sizes(n: int):
    full, rest = divmod(n, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _sample_chunk(icdf: _InverseCdf, sigma: float, seed: int, index: int, size: int) -> np.ndarray:
    rng = _rng(seed, _STREAM_PAIRS, index)
    delays = icdf(rng.random(size))
    if sigma > 0:
        delays += rng.normal(0.0, sigma, size)
    return delays


def _map_chunks(fn, sizes, workers: int):
    jobs = list(enumerate(sizes))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(i, s) for i, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def sample_coincidences(curve: CorrelationCurve, config: EventSimConfig,
                        workers: int = 1) -> np.ndarray:
    """Start-stop delays for all pairs, in chunk order."""
    icdf = _InverseCdf(curve)
    n = resolve_pair_count(config)
    sigma = config.jitter.sigma
    parts = _map_chunks(lambda i, s: _sample_chunk(icdf, sigma, config.seed, i, s),
                        _chunk_sizes(n), workers)
    return np.concatenate(parts) if parts else np.empty(0)


def _bin_delays(samples: np.ndarray, tac: TacModel, mca: McaConfig):
    measured = np.asarray(samples, dtype=float) + tac.applied_delay
    lo, hi = tac.range
    in_tac = (measured >= lo) & (measured < hi)
    underflow = int(np.count_nonzero(measured < lo))
    overflow = int(np.count_nonzero(measured >= hi))
    idx = np.floor((measured[in_tac] - mca.origin) / mca.channel_width).astype(np.int64)
    underflow += int(np.count_nonzero(idx < 0))
    overflow += int(np.count_nonzero(idx >= mca.channel_count))
    inside = idx[(idx >= 0) & (idx < mca.channel_count)]
    counts = np.bincount(inside, minlength=mca.channel_count).astype(np.int64)
    return counts, underflow, overflow


def _accidentals(tac: TacModel, mca: McaConfig, config: EventSimConfig) -> np.ndarray:
    counts = np.zeros(mca.channel_count, dtype=np.int64)
    if config.accidental_rate_density == 0:
        return counts
    lo, hi = tac.range
    centers = mca.centers
    live = (centers >= lo) & (centers < hi)
    mean = config.accidental_rate_density * mca.channel_width * config.duration
    rng = _rng(config.seed, _STREAM_ACCIDENTALS)
    counts[live] = rng.poisson(mean, int(live.sum()))
    return counts


def accumulate_tac(samples: np.ndarray, tac: TacModel, mca: McaConfig,
                   accidental: Optional[EventSimConfig] = None) -> CoincidenceHistogram:
    """Shift by the delay line, apply the TAC range, bin, add accidentals.

    Delays outside the TAC range or the MCA channels are tallied in the
    underflow/overflow counters on the side where they fell.
    """
    counts, underflow, overflow = _bin_delays(samples, tac, mca)
    if accidental is not None:
        counts += _accidentals(tac, mca, accidental)
    return CoincidenceHistogram(mca, counts, underflow, overflow)


def simulate_histogram(curve: CorrelationCurve, config: EventSimConfig, tac: TacModel,
                       mca: McaConfig, workers: int = 1) -> CoincidenceHistogram:
    """Chunked equivalent of ``accumulate_tac(sample_coincidences(...))``.

    Histograms are built per chunk and summed, so memory stays flat.
    """
    icdf = _InverseCdf(curve)
    n = resolve_pair_count(config)
    sigma = config.jitter.sigma

    def one(i, size):
        return _bin_delays(_sample_chunk(icdf, sigma, config.seed, i, size), tac, mca)

    counts = np.zeros(mca.channel_count, dtype=np.int64)
    underflow = overflow = 0
    for c, u, o in _map_chunks(one, _chunk_sizes(n), workers):
        counts += c
        underflow += u
        overflow += o
    counts += _accidentals(tac, mca, config)
    return CoincidenceHistogram(mca, counts, underflow, overflow)


def _pool(observed: np.ndarray, expected: np.ndarray, min_expected: float):
    obs_groups, exp_groups = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_groups.append(o_acc)
            exp_groups.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_groups:
            obs_groups[-1] += o_acc
            exp_groups[-1] += e_acc
        else:
            obs_groups.append(o_acc)
            exp_groups.append(e_acc)
    return np.array(obs_groups), np.array(exp_groups)


def goodness_of_fit(hist: CoincidenceHistogram, expected: CoincidenceHistogram,
                    min_expected: float = 5.0, ddof: int = 1) -> FitReport:
    """Pearson chi-square over channels, pooling runs with expected < ``min_expected``.

    ``ddof=1`` accounts for the expected histogram being scaled to the same
    total as the observed one.
    """
    if hist.config != expected.config:
        raise ConfigurationError("histograms have different MCA configurations")
    obs, exp = _pool(np.asarray(hist.counts, float), np.asarray(expected.counts, float), min_expected)
    if exp.size == 0 or np.any(exp <= 0):
        raise ConfigurationError("expected histogram has no positive counts to compare against")
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    dof = exp.size - ddof
    if dof < 1:
        raise ConfigurationError("not enough pooled channels for a chi-square test")
    return FitReport(chi2=chi2, dof=dof, reduced_chi2=chi2 / dof,
                     p_value=float(stats.chi2.sf(chi2, dof)), groups=int(exp.size))


def central_dip_ratio(hist: CoincidenceHistogram, half_width: float = 25e-12) -> float:
    """Center-neighborhood mean over the mean of the two side-lobe maxima.

    Counts are boxcar-averaged over +-``half_width`` first; the side lobes are
    the largest averaged values left and right of zero delay.
    """
    k = max(int(round(half_width / hist.config.channel_width)), 0)
    box = np.ones(2 * k + 1) / (2 * k + 1)
    smooth = np.convolve(np.asarray(hist.counts, float), box, mode="same")
    centers = hist.centers
    mid = int(np.argmin(np.abs(centers)))
    left, right = smooth[: mid - k], smooth[mid + k + 1:]
    if left.size == 0 or right.size == 0:
        raise ConfigurationError("histogram does not extend to both sides of zero delay")
    lobes = 0.5 * (left.max() + right.max())
    if lobes <= 0:
        raise NormalizationError("no counts in the side lobes")
    return float(smooth[mid] / lobes)
