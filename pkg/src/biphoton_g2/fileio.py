"""Text file formats for curves, histograms and run summaries.

Histogram::

    # channel_width_s=2.5e-12 origin_s=-3.0025e-09 count=2401 underflow=0 overflow=0
    0,-3.0025e-09,0
    1,-3.0e-09,3
    ...

The ``underflow``/``overflow`` header fields are optional on read.
Curves are CSV with header ``theta_s,value`` (or ``theta_s,g2_plus,g2_minus``).
Summaries are ``key = value`` lines. Floats are written with ``repr`` so a
rerun with the same inputs reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, Mapping, Sequence

import numpy as np

from .detection import CoincidenceHistogram, McaConfig
from .errors import ConfigurationError
from .physics import CorrelationCurve, TimeGrid


def format_value(x) -> str:
    """Text form used in every output file: repr floats, lowercase booleans."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_curve_csv(path: Path, curve: CorrelationCurve) -> None:
    write_columns_csv(path, {"theta_s": curve.theta, "value": curve.values})


def write_paired_csv(path: Path, plus: CorrelationCurve, minus: CorrelationCurve) -> None:
    if plus.grid != minus.grid:
        raise ConfigurationError("paired curves must share a grid")
    write_columns_csv(path, {"theta_s": plus.theta, "g2_plus": plus.values, "g2_minus": minus.values})


def write_columns_csv(path: Path, columns: Mapping[str, Sequence]) -> None:
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*data):
            writer.writerow([format_value(x) for x in row])


def read_curve_csv(path: Path) -> Dict[str, np.ndarray]:
    """Columns of a curve CSV keyed by header name."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}


def curve_from_columns(theta: np.ndarray, values: np.ndarray, note: str = "read from file") -> CorrelationCurve:
    steps = np.diff(theta)
    step = float(np.mean(steps))
    if not np.allclose(steps, step, rtol=1e-6, atol=0):
        raise ConfigurationError("curve file is not on a uniform grid")
    return CorrelationCurve(TimeGrid(float(theta[0]), step, theta.size), values, note)


def write_histogram(path: Path, hist: CoincidenceHistogram) -> None:
    cfg = hist.config
    lines = [
        f"# channel_width_s={format_value(float(cfg.channel_width))} origin_s={format_value(float(cfg.origin))} "
        f"count={cfg.channel_count} underflow={format_value(hist.underflow)} overflow={format_value(hist.overflow)}"
    ]
    edges = cfg.edges
    for i, c in enumerate(hist.counts):
        lines.append(f"{i},{format_value(float(edges[i]))},{format_value(c)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_histogram(path: Path) -> CoincidenceHistogram:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ConfigurationError(f"{path}: missing histogram header line")
    fields = {}
    for token in text[0][1:].split():
        if "=" not in token:
            raise ConfigurationError(f"{path}: malformed header token {token!r}")
        k, v = token.split("=", 1)
        fields[k] = v
    try:
        width = float(fields["channel_width_s"])
        origin = float(fields["origin_s"])
        count = int(fields["count"])
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"{path}: bad histogram header: {exc}") from exc
    counts = np.zeros(count)
    seen = 0
    for line in text[1:]:
        if not line.strip():
            continue
        idx, _, value = line.split(",")
        counts[int(idx)] = float(value)
        seen += 1
    if seen != count:
        raise ConfigurationError(f"{path}: header says {count} channels, found {seen}")
    if np.all(counts == np.round(counts)):
        counts = counts.astype(np.int64)
    under = float(fields.get("underflow", 0))
    over = float(fields.get("overflow", 0))
    if under.is_integer() and over.is_integer():
        under, over = int(under), int(over)
    return CoincidenceHistogram(McaConfig(width, count, origin), counts, under, over)


def write_summary(path: Path, record: Mapping[str, object]) -> None:
    Path(path).write_text("".join(f"{k} = {format_value(v)}\n" for k, v in record.items()))


def read_summary(path: Path) -> Dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
