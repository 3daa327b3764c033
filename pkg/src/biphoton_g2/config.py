"""Scenario configuration.

A configuration file is flat ``block.key = value`` lines; ``#`` starts a
comment. Numbers may carry units (``fibre.k2 = 3.2e-28 s^2/cm``). Every key
has a default, so an empty file gives the reference parameter set::

    scenario.name = fig2b
    source.L = 0.05 cm
    source.D = 1.5 ps/cm
    fibre.k2 = 3.2e-28 s^2/cm
    fibre.z = 250 m
    jitter.fwhm = 750 ps

Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

from .detection import DEFAULT_CHANNEL_WIDTH, JitterModel, McaConfig
from .errors import ConfigurationError
from .montecarlo import EventSimConfig, TacModel
from .physics import (
    DEFAULT_GRID_POINTS,
    DEFAULT_SPAN_TAU_F,
    FAR_FIELD_THRESHOLD,
    AnalyzerConfig,
    DispersiveFibre,
    SpdcSource,
)
from .units import parse_quantity

SCENARIOS = (
    "fig2a",
    "fig2b",
    "fig3_sim",
    "compensation_sweep",
    "jitter_sweep",
    "dispersion_estimate",
    "custom",
)
EMIT_KINDS = ("curves", "hist", "summary")

# key -> (kind, default); kind "int", "str", "angle|none" are handled locally
SCHEMA: Dict[str, Tuple[str, str]] = {
    "scenario.name": ("str", "custom"),
    "source.L": ("length", "0.05 cm"),
    "source.D": ("inverse_velocity", "1.5 ps/cm"),
    "source.omega0": ("angular_frequency|none", "none"),
    "fibre.k1": ("inverse_velocity", "0 s/m"),
    "fibre.k2": ("gvd", "3.2e-28 s^2/cm"),
    "fibre.z": ("length", "250 m"),
    "analyzer.alpha1": ("angle|none", "none"),
    "analyzer.alpha2": ("angle|none", "none"),
    "analyzer.tau_c": ("time", "0 s"),
    "jitter.fwhm": ("time", "750 ps"),
    "mca.channel_width": ("time", "2.5 ps"),
    "mca.channel_count": ("int", "2401"),
    "mca.origin": ("time|none", "none"),
    "events.pair_count": ("int|none", "1000000"),
    "events.pair_rate": ("rate|none", "none"),
    "events.duration": ("time|none", "none"),
    "events.accidental_rate_density": ("rate_density", "0 1/s^2"),
    "events.seed": ("int", "20060101"),
    "tac.applied_delay": ("time", "0 s"),
    "tac.range_min": ("time|none", "none"),
    "tac.range_max": ("time|none", "none"),
    "grid.points": ("int", str(DEFAULT_GRID_POINTS)),
    "grid.span": ("dimensionless", str(DEFAULT_SPAN_TAU_F)),
    "grid.rate_span": ("dimensionless", "500"),
    "far_field.threshold": ("dimensionless", str(FAR_FIELD_THRESHOLD)),
    "visibility.window": ("time", "2.5 ps"),
    "sweep.points": ("int", "11"),
    "sweep.jitter_max": ("time", "1.5 ns"),
    "estimate.k2_low": ("gvd", "1e-30 s^2/cm"),
    "estimate.k2_high": ("gvd", "1e-24 s^2/cm"),
    "estimate.log_tol": ("dimensionless", "1e-4"),
    "output.dir": ("str", "out"),
    "output.emit": ("str", "curves,hist,summary"),
    "run.workers": ("int", "1"),
}

SCENARIO_DEFAULTS: Dict[str, Dict[str, str]] = {
    "fig2a": {"jitter.fwhm": "0 s"},
    "fig2b": {},
    "fig3_sim": {},
    "compensation_sweep": {"jitter.fwhm": "0 s"},
    "jitter_sweep": {"sweep.points": "16"},
    "dispersion_estimate": {},
    "custom": {},
}


def parse_config_text(text: str) -> Dict[str, str]:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'block.key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _convert(key: str, text: str):
    kind = SCHEMA[key][0]
    optional = kind.endswith("|none")
    kind = kind.removesuffix("|none")
    if optional and text.strip().lower() == "none":
        return None
    if kind == "str":
        return text.strip()
    if kind == "int":
        try:
            value = float(text)
        except ValueError:
            raise ConfigurationError(f"{key}: expected an integer, got {text!r}") from None
        if value != int(value):
            raise ConfigurationError(f"{key}: expected an integer, got {text!r}")
        return int(value)
    value = parse_quantity(text, kind)
    if not math.isfinite(value):
        raise ConfigurationError(f"{key}: value must be finite")
    return value


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    source: SpdcSource
    fibre: DispersiveFibre
    analyzer: AnalyzerConfig
    jitter: JitterModel
    mca: McaConfig
    events: EventSimConfig
    tac: TacModel
    grid_points: int
    grid_span: float
    rate_span: float
    far_field_threshold: float
    visibility_window: float
    sweep_points: int
    sweep_jitter_max: float
    k2_bracket: Tuple[float, float]
    log_tol: float
    out_dir: Path
    emit: frozenset
    workers: int = 1

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, events=replace(self.events, rng_seed=seed))


def build_config(raw: Mapping[str, str], scenario: Optional[str] = None,
                 out_dir: Optional[str] = None, seed: Optional[int] = None,
                 emit: Optional[str] = None) -> ScenarioConfig:
    """Merge defaults, scenario defaults, file values and CLI overrides."""
    for key in raw:
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown key {key!r}")
    name = scenario or raw.get("scenario.name", SCHEMA["scenario.name"][1])
    if name not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")

    merged = {key: default for key, (_, default) in SCHEMA.items()}
    merged.update(SCENARIO_DEFAULTS[name])
    merged.update(raw)
    v = {key: _convert(key, text) for key, text in merged.items()}
    if out_dir is not None:
        v["output.dir"] = out_dir
    if seed is not None:
        v["events.seed"] = int(seed)
    if emit is not None:
        v["output.emit"] = emit

    source = SpdcSource(v["source.L"], v["source.D"], v["source.omega0"])
    fibre = DispersiveFibre(v["fibre.k1"], v["fibre.k2"], v["fibre.z"])

    a1, a2 = v["analyzer.alpha1"], v["analyzer.alpha2"]
    if (a1 is None) != (a2 is None):
        raise ConfigurationError("analyzer.alpha1 and analyzer.alpha2 must both be set or both be none")
    analyzer = AnalyzerConfig(None if a1 is None else (a1, a2), v["analyzer.tau_c"])

    jitter = JitterModel(v["jitter.fwhm"])
    width, count = v["mca.channel_width"], v["mca.channel_count"]
    mca = (McaConfig.centered(width, count) if v["mca.origin"] is None
           else McaConfig(width, count, v["mca.origin"]))

    pair_count = v["events.pair_count"]
    if v["events.pair_rate"] is not None:
        pair_count = None
    events = EventSimConfig(
        pair_count=pair_count,
        pair_rate=v["events.pair_rate"],
        duration=v["events.duration"],
        accidental_rate_density=v["events.accidental_rate_density"],
        rng_seed=v["events.seed"],
        jitter=jitter,
    )
    lo = -math.inf if v["tac.range_min"] is None else v["tac.range_min"]
    hi = math.inf if v["tac.range_max"] is None else v["tac.range_max"]
    tac = TacModel(v["tac.applied_delay"], (lo, hi))

    emit_set = frozenset(s.strip() for s in v["output.emit"].split(",") if s.strip())
    bad = emit_set - set(EMIT_KINDS)
    if bad:
        raise ConfigurationError(f"unknown emit kinds: {', '.join(sorted(bad))}")

    positive = {
        "grid.span": v["grid.span"],
        "grid.rate_span": v["grid.rate_span"],
        "visibility.window": v["visibility.window"],
        "estimate.log_tol": v["estimate.log_tol"],
        "estimate.k2_low": v["estimate.k2_low"],
    }
    for key, value in positive.items():
        if not value > 0:
            raise ConfigurationError(f"{key} must be > 0")
    if v["grid.points"] < 3 or v["sweep.points"] < 2 or v["run.workers"] < 1:
        raise ConfigurationError("grid.points >= 3, sweep.points >= 2 and run.workers >= 1 required")
    if not v["estimate.k2_high"] > v["estimate.k2_low"]:
        raise ConfigurationError("estimate.k2_high must exceed estimate.k2_low")

    return ScenarioConfig(
        name=name,
        source=source,
        fibre=fibre,
        analyzer=analyzer,
        jitter=jitter,
        mca=mca,
        events=events,
        tac=tac,
        grid_points=v["grid.points"],
        grid_span=v["grid.span"],
        rate_span=v["grid.rate_span"],
        far_field_threshold=v["far_field.threshold"],
        visibility_window=v["visibility.window"],
        sweep_points=v["sweep.points"],
        sweep_jitter_max=v["sweep.jitter_max"],
        k2_bracket=(v["estimate.k2_low"], v["estimate.k2_high"]),
        log_tol=v["estimate.log_tol"],
        out_dir=Path(v["output.dir"]),
        emit=emit_set,
        workers=v["run.workers"],
    )


def load_config(path: Optional[str] = None, **overrides) -> ScenarioConfig:
    raw: Dict[str, str] = {}
    if path is not None:
        raw = parse_config_text(Path(path).read_text())
    return build_config(raw, **overrides)


def reference_config(scenario: str = "custom", **overrides) -> ScenarioConfig:
    """Reference parameter set with the named scenario's defaults."""
    return build_config({}, scenario=scenario, **overrides)
