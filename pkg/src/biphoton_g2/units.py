"""Unit-suffixed number parsing.

Everything inside the package is SI (seconds, meters, radians). Input
strings may use any unit pint understands, e.g. ``"1.5 ps/cm"``,
``"3.2e-28 s^2/cm"`` or ``"45 deg"``; they are converted once, here.
"""

from __future__ import annotations

from functools import lru_cache

import pint

from .errors import ConfigurationError

# target SI unit per physical kind
_KINDS = {
    "time": "s",
    "length": "m",
    "inverse_velocity": "s/m",
    "gvd": "s^2/m",
    "angle": "rad",
    "angular_frequency": "rad/s",
    "rate": "1/s",
    "rate_density": "1/s^2",
    "dimensionless": "",
}


@lru_cache(maxsize=1)
def _registry() -> pint.UnitRegistry:
    return pint.UnitRegistry()


def parse_quantity(text: str | float | int, kind: str) -> float:
    """Convert ``text`` to an SI float of the given ``kind``.

    Bare numbers are taken to be SI already.
    """
    if kind not in _KINDS:
        raise KeyError(f"unknown quantity kind {kind!r}")
    if isinstance(text, (int, float)):
        return float(text)
    ureg = _registry()
    try:
        q = ureg.Quantity(text.strip())
    except Exception as exc:  # pint raises a zoo of exception types
        raise ConfigurationError(f"cannot parse quantity {text!r}: {exc}") from exc
    if isinstance(q, (int, float)):
        return float(q)
    if q.dimensionless and kind != "dimensionless" and str(q.units) in ("dimensionless", ""):
        return float(q.magnitude)
    try:
        return float(q.to(_KINDS[kind]).magnitude)
    except pint.DimensionalityError as exc:
        raise ConfigurationError(
            f"{text!r} has units {q.units}, expected {kind} ({_KINDS[kind] or '1'})"
        ) from exc
