"""Named scenarios: analytic pipeline, detection chain, optional Monte Carlo.

Each runner returns an ordered summary record and writes the requested
files into the configured output directory.
"""

from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from .config import ScenarioConfig
from .detection import (
    JitterModel,
    bin_histogram,
    central_window,
    convolve_jitter,
    fwhm,
    integrated_rate,
    visibility,
    window_integral,
)
from .dispersion import estimate_dispersion, histogram_as_curve, measurement_grid
from .errors import ConfigurationError, UndefinedFwhmError
from .fileio import write_columns_csv, write_curve_csv, write_histogram, write_paired_csv, write_summary
from .montecarlo import central_dip_ratio, goodness_of_fit, simulate_histogram
from .physics import (
    AnalyzerConfig,
    CorrelationCurve,
    TimeGrid,
    eo_delay,
    far_field_check,
    g2_dispersed,
    g2_pre_fibre,
    spread_width,
)

RATE_POINTS_PER_TAU_F = 20
SAMPLED_FWHM_REBIN = 10
DIP_HALF_WIDTH = 25e-12


def _require_fibre(cfg: ScenarioConfig) -> None:
    if not cfg.fibre.present:
        raise ConfigurationError(f"scenario {cfg.name} needs a dispersive fibre (k2*z != 0)")


def tau_f_of(cfg: ScenarioConfig) -> float:
    return spread_width(cfg.fibre, eo_delay(cfg.source))


def analytic_grid(cfg: ScenarioConfig) -> TimeGrid:
    return TimeGrid.symmetric(cfg.grid_span * abs(tau_f_of(cfg)), cfg.grid_points)


def rate_grid(cfg: ScenarioConfig) -> TimeGrid:
    """Wide grid for integrated rates; the sinc^2 tails decay only as 1/theta^2."""
    tau_f = abs(tau_f_of(cfg))
    return TimeGrid.with_step(cfg.rate_span * tau_f, tau_f / RATE_POINTS_PER_TAU_F)


def pre_fibre_grid(cfg: ScenarioConfig, jitter: JitterModel) -> TimeGrid:
    tau0 = eo_delay(cfg.source)
    step = tau0 / 16.0
    if jitter.fwhm > 0:
        step = max(step, jitter.fwhm / 20.0)
    return TimeGrid.with_step(4.0 * tau0, step)


def jittered(curve: CorrelationCurve, jitter: JitterModel) -> CorrelationCurve:
    return convolve_jitter(curve, jitter, extend=True)


def expected_total(cfg: ScenarioConfig) -> float:
    ev = cfg.events
    if ev.pair_count is not None:
        return float(ev.pair_count)
    return ev.pair_rate * ev.duration


def _base_record(cfg: ScenarioConfig) -> Dict[str, object]:
    tau0 = eo_delay(cfg.source)
    record: Dict[str, object] = {"scenario": cfg.name, "tau0_s": tau0}
    if cfg.fibre.present:
        ff = far_field_check(cfg.source, cfg.fibre, cfg.far_field_threshold)
        record.update(tau_f_s=spread_width(cfg.fibre, tau0), far_field_ratio=ff.ratio,
                      far_field_valid=ff.valid)
    record["jitter_fwhm_s"] = cfg.jitter.fwhm
    return record


def _rates(cfg: ScenarioConfig, tau_c: float):
    grid = rate_grid(cfg)
    plus = integrated_rate(g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.plus(tau_c)))
    minus = integrated_rate(g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.minus(tau_c)))
    return plus, minus, (plus - minus) / (plus + minus)


def _pm_curves(cfg: ScenarioConfig, tau_c: float, jitter: JitterModel):
    grid = analytic_grid(cfg)
    plus = g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.plus(tau_c))
    minus = g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.minus(tau_c))
    return jittered(plus, jitter), jittered(minus, jitter)


def _width_or_nan(curve: CorrelationCurve) -> float:
    """FWHM, or NaN for a curve with nothing to measure (e.g. a fully nulled G-)."""
    try:
        return fwhm(curve)
    except UndefinedFwhmError:
        return math.nan


def _emit(cfg: ScenarioConfig, kind: str) -> bool:
    return kind in cfg.emit


def run_fig2(cfg: ScenarioConfig) -> Dict[str, object]:
    """Delay distributions for (45,45) and (45,-45), with the configured jitter."""
    _require_fibre(cfg)
    tau_c = cfg.analyzer.compensation_delay_tau_c
    grid = analytic_grid(cfg)
    none = g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.none(tau_c))
    plus, minus = _pm_curves(cfg, tau_c, cfg.jitter)
    none_j = jittered(none, cfg.jitter)
    rate_plus, rate_minus, v_int = _rates(cfg, tau_c)

    record = _base_record(cfg)
    record.update(
        tau_c_s=tau_c,
        fwhm_ideal_no_polarizer_s=fwhm(none),
        fwhm_no_polarizer_s=fwhm(none_j),
        fwhm_plus_s=_width_or_nan(plus),
        fwhm_minus_s=_width_or_nan(minus),
        central_window_s=cfg.visibility_window,
        central_visibility=visibility(plus, minus, central_window(cfg.visibility_window)),
        integrated_rate_span_s=rate_grid(cfg).stop_theta,
        integrated_rate_plus=rate_plus,
        integrated_rate_minus=rate_minus,
        integrated_visibility=v_int,
    )
    out = cfg.out_dir
    if _emit(cfg, "curves"):
        write_paired_csv(out / "g2_pm.csv", plus, minus)
        write_curve_csv(out / "g2_none.csv", none_j)
    if _emit(cfg, "hist"):
        total = expected_total(cfg)
        write_histogram(out / "hist_plus_expected.txt", bin_histogram(plus, cfg.mca, total))
        write_histogram(out / "hist_minus_expected.txt", bin_histogram(minus, cfg.mca, total))
    return record


def _sampled_window_visibility(h_plus, h_minus, window: float) -> float:
    inside = np.abs(h_plus.centers) <= 0.5 * window
    if not inside.any():
        inside = np.abs(h_plus.centers) == np.abs(h_plus.centers).min()
    n_p = float(np.sum(h_plus.counts[inside]))
    n_m = float(np.sum(h_minus.counts[inside]))
    return (n_p - n_m) / (n_p + n_m) if n_p + n_m > 0 else float("nan")


def _expected_histogram(cfg: ScenarioConfig, curve: CorrelationCurve, total: float):
    """Expected MCA contents for a delay curve seen through the TAC delay line."""
    if cfg.tac.applied_delay:
        g = curve.grid
        curve = CorrelationCurve(TimeGrid(g.start_theta + cfg.tac.applied_delay, g.step, g.count),
                                 curve.values, curve.normalization_note)
    return bin_histogram(curve, cfg.mca, total)


def run_fig3_sim(cfg: ScenarioConfig) -> Dict[str, object]:
    """Monte Carlo START-STOP histograms without polarizers and for both settings."""
    _require_fibre(cfg)
    tau_c = cfg.analyzer.compensation_delay_tau_c
    grid = analytic_grid(cfg)
    ideal = {
        "none": g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.none(tau_c)),
        "plus": g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.plus(tau_c)),
        "minus": g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.minus(tau_c)),
    }
    model = {k: jittered(c, cfg.jitter) for k, c in ideal.items()}
    sampled, expected = {}, {}
    for offset, key in enumerate(("none", "plus", "minus")):
        events = replace(cfg.events, rng_seed=cfg.events.rng_seed + offset, jitter=cfg.jitter)
        sampled[key] = simulate_histogram(ideal[key], events, cfg.tac, cfg.mca, cfg.workers)
        expected[key] = _expected_histogram(cfg, model[key], float(sampled[key].total))

    fit_plus = goodness_of_fit(sampled["plus"], expected["plus"])
    fit_minus = goodness_of_fit(sampled["minus"], expected["minus"])
    fit_cross = goodness_of_fit(
        sampled["minus"], _expected_histogram(cfg, model["plus"], float(sampled["minus"].total)))

    record = _base_record(cfg)
    record.update(
        events_per_setting=int(sampled["none"].total),
        fwhm_ideal_no_polarizer_s=fwhm(ideal["none"]),
        fwhm_no_polarizer_s=fwhm(model["none"]),
        fwhm_sampled_no_polarizer_s=fwhm(histogram_as_curve(sampled["none"].rebin(SAMPLED_FWHM_REBIN))),
        central_window_s=cfg.visibility_window,
        central_visibility_model=visibility(model["plus"], model["minus"],
                                            central_window(cfg.visibility_window)),
        central_visibility_sampled=_sampled_window_visibility(sampled["plus"], sampled["minus"],
                                                              cfg.visibility_window),
        dip_ratio_minus_sampled=central_dip_ratio(sampled["minus"], DIP_HALF_WIDTH),
        dip_ratio_minus_expected=central_dip_ratio(expected["minus"], DIP_HALF_WIDTH),
        reduced_chi2_plus=fit_plus.reduced_chi2,
        reduced_chi2_minus=fit_minus.reduced_chi2,
        reduced_chi2_minus_vs_plus_model=fit_cross.reduced_chi2,
        chi2_dof_plus=fit_plus.dof,
    )
    out = cfg.out_dir
    if _emit(cfg, "curves"):
        write_paired_csv(out / "g2_pm.csv", model["plus"], model["minus"])
        write_curve_csv(out / "g2_none.csv", model["none"])
    if _emit(cfg, "hist"):
        for key, hist in sampled.items():
            write_histogram(out / f"hist_{key}.txt", hist)
    return record


def run_compensation_sweep(cfg: ScenarioConfig) -> Dict[str, object]:
    """Integrated and central visibility versus compensation delay on [0, tau0]."""
    _require_fibre(cfg)
    tau0 = eo_delay(cfg.source)
    tau_cs = np.linspace(0.0, tau0, cfg.sweep_points)
    integrated: List[float] = []
    central: List[float] = []
    for tau_c in tau_cs:
        integrated.append(_rates(cfg, float(tau_c))[2])
        plus, minus = _pm_curves(cfg, float(tau_c), cfg.jitter)
        central.append(visibility(plus, minus, central_window(cfg.visibility_window)))
    record = _base_record(cfg)
    record.update(
        sweep_points=len(tau_cs),
        integrated_visibility_at_zero=integrated[0],
        integrated_visibility_at_tau0=integrated[-1],
        integrated_visibility_monotonic=bool(np.all(np.diff(integrated) >= -1e-12)),
        central_visibility_at_zero=central[0],
    )
    if _emit(cfg, "curves"):
        write_columns_csv(cfg.out_dir / "compensation_sweep.csv", {
            "tau_c_s": tau_cs, "integrated_visibility": integrated, "central_visibility": central})
    return record


def jitter_sweep_values(cfg: ScenarioConfig) -> np.ndarray:
    values = np.linspace(0.0, cfg.sweep_jitter_max, cfg.sweep_points)
    return np.unique(np.append(values, cfg.jitter.fwhm))


def run_jitter_sweep(cfg: ScenarioConfig) -> Dict[str, object]:
    """Central-window visibility as the jitter FWHM grows."""
    _require_fibre(cfg)
    tau_c = cfg.analyzer.compensation_delay_tau_c
    grid = analytic_grid(cfg)
    plus = g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.plus(tau_c))
    minus = g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.minus(tau_c))
    fwhms = jitter_sweep_values(cfg)
    vis = []
    for f in fwhms:
        jm = JitterModel(float(f))
        vis.append(visibility(jittered(plus, jm), jittered(minus, jm),
                              central_window(cfg.visibility_window)))
    ref = int(np.flatnonzero(fwhms == cfg.jitter.fwhm)[0])
    record = _base_record(cfg)
    record.update(
        sweep_points=len(fwhms),
        central_visibility_at_zero_jitter=vis[0],
        central_visibility_at_reference_jitter=vis[ref],
        central_visibility_at_max_jitter=vis[-1],
        central_visibility_monotonic=bool(np.all(np.diff(vis) <= 1e-12)),
    )
    if _emit(cfg, "curves"):
        write_columns_csv(cfg.out_dir / "jitter_sweep.csv",
                          {"jitter_fwhm_s": fwhms, "central_visibility": vis})
    return record


def run_dispersion_estimate(cfg: ScenarioConfig) -> Dict[str, object]:
    """Round trip: simulate a no-polarizer histogram, then recover k''."""
    _require_fibre(cfg)
    # sample from the same grid the forward model uses, so truncation cannot bias k''
    grid = measurement_grid(cfg.mca, tau_f_of(cfg), cfg.jitter)
    none = g2_dispersed(grid, cfg.source, cfg.fibre, AnalyzerConfig.none())
    events = replace(cfg.events, jitter=cfg.jitter)
    hist = simulate_histogram(none, events, cfg.tac, cfg.mca, cfg.workers)
    est = estimate_dispersion(hist, cfg.source, cfg.fibre.length_z, cfg.jitter,
                              cfg.k2_bracket, cfg.log_tol)
    record = _base_record(cfg)
    record.update(estimate_record(est, cfg.fibre.k_double_prime))
    record["events"] = int(hist.total)
    if _emit(cfg, "hist"):
        write_histogram(cfg.out_dir / "hist_synthetic.txt", hist)
    return record


def estimate_record(est, k2_true=None) -> Dict[str, object]:
    record: Dict[str, object] = {
        "k2_hat_s2_per_m": est.k_double_prime_hat,
        "k2_hat_s2_per_cm": est.k_double_prime_hat / 100.0,
    }
    if k2_true is not None:
        record["k2_true_s2_per_m"] = k2_true
        record["k2_relative_error"] = est.k_double_prime_hat / k2_true - 1.0
    record.update(objective_residual=est.objective_residual, iterations=est.iterations,
                  bracket_low_s2_per_m=est.bracket[0], bracket_high_s2_per_m=est.bracket[1])
    return record


def run_custom(cfg: ScenarioConfig) -> Dict[str, object]:
    """Single curve for the configured analyzer; pre-fibre path when k''*z == 0."""
    record = _base_record(cfg)
    if cfg.fibre.present:
        ideal = g2_dispersed(analytic_grid(cfg), cfg.source, cfg.fibre, cfg.analyzer)
    else:
        ideal = g2_pre_fibre(pre_fibre_grid(cfg, cfg.jitter), cfg.source, cfg.analyzer)
    measured = jittered(ideal, cfg.jitter)
    record.update(
        polarizers="none" if cfg.analyzer.polarizer_angles is None
        else "{:.6g},{:.6g}".format(*(math.degrees(a) for a in cfg.analyzer.polarizer_angles)),
        tau_c_s=cfg.analyzer.compensation_delay_tau_c,
        fwhm_s=fwhm(measured),
        integrated_rate=integrated_rate(ideal),
        central_window_s=cfg.visibility_window,
        central_window_rate=window_integral(measured, central_window(cfg.visibility_window)),
    )
    if cfg.fibre.present:
        record["fwhm_ideal_s"] = fwhm(ideal)
    if _emit(cfg, "curves"):
        write_curve_csv(cfg.out_dir / "g2.csv", measured)
    if _emit(cfg, "hist"):
        write_histogram(cfg.out_dir / "hist_expected.txt",
                        bin_histogram(measured, cfg.mca, expected_total(cfg)))
    return record


RUNNERS: Dict[str, Callable[[ScenarioConfig], Dict[str, object]]] = {
    "fig2a": run_fig2,
    "fig2b": run_fig2,
    "fig3_sim": run_fig3_sim,
    "compensation_sweep": run_compensation_sweep,
    "jitter_sweep": run_jitter_sweep,
    "dispersion_estimate": run_dispersion_estimate,
    "custom": run_custom,
}


def run_scenario(cfg: ScenarioConfig) -> Dict[str, object]:
    """Run ``cfg.name``, write emitted files, return the summary record."""
    if cfg.emit:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    record = RUNNERS[cfg.name](cfg)
    if "summary" in cfg.emit:
        write_summary(Path(cfg.out_dir) / "summary.txt", record)
    return record
