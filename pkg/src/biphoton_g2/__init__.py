"""Dispersion spreading of type-II SPDC biphotons in fibre and G2 polarization interference."""

from .detection import (
    CoincidenceHistogram,
    JitterModel,
    McaConfig,
    bin_histogram,
    convolve_jitter,
    fwhm,
    integrated_rate,
    visibility,
)
from .dispersion import DispersionEstimate, estimate_dispersion
from .montecarlo import (
    EventSimConfig,
    TacModel,
    accumulate_tac,
    goodness_of_fit,
    sample_coincidences,
    simulate_histogram,
)
from .physics import (
    AnalyzerConfig,
    CorrelationCurve,
    DispersiveFibre,
    SpdcSource,
    TimeGrid,
    dispersed_amplitude,
    eo_delay,
    far_field_check,
    g2_approx,
    g2_dispersed,
    g2_pre_fibre,
    spectral_amplitude,
    spread_width,
)

__version__ = "0.1.0"
