"""CSV ingestion and writing for traces, power sweeps and field sweeps.

Trace files are UTF-8 CSV with a header row and '.' decimal points.
Accepted column sets (order free, extra columns rejected as ambiguity only
when they clash):

* ``freq_hz, re, im`` - complex transmission as real/imaginary parts,
* ``freq_hz, mag_db, phase_rad`` - magnitude in dB (20 log10) and phase,

each optionally extended by ``power_dbm``, which promotes the file to a
power sweep (rows grouped by power). Field sweeps use
``field_t, fr_hz, sigma_hz``.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import FieldSweepPoint, FrequencyTrace, PowerSweep
from .errors import DataError, SchemaError

__all__ = [
    "parse_trace_csv",
    "write_trace_csv",
    "parse_field_csv",
    "write_field_csv",
]

_CARTESIAN = ("re", "im")
_POLAR = ("mag_db", "phase_rad")


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    header = [h.strip().lower() for h in header]
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, rows


def _column(header: list[str], rows: list[list[str]], name: str, path) -> np.ndarray:
    idx = header.index(name)
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(
                f"{path}: row {i + 2} has {len(row)} fields, header has {len(header)}"
            )
        try:
            out[i] = float(row[idx])
        except ValueError:
            raise DataError(
                f"{path}: row {i + 2}, column {name!r}: cannot parse {row[idx]!r} as a number"
            ) from None
    return out


def parse_trace_csv(path: str | Path) -> FrequencyTrace | PowerSweep:
    """Read a trace file; a ``power_dbm`` column promotes it to a PowerSweep."""
    header, rows = _read_rows(path)
    if "freq_hz" not in header:
        raise SchemaError(f"{path}: missing required column 'freq_hz' (found {header})")
    has_cartesian = all(c in header for c in _CARTESIAN)
    has_polar = all(c in header for c in _POLAR)
    if has_cartesian and has_polar:
        raise SchemaError(
            f"{path}: ambiguous value columns; provide either {_CARTESIAN} or {_POLAR}, not both"
        )
    if not has_cartesian and not has_polar:
        missing = _CARTESIAN if any(c in header for c in _CARTESIAN) else _POLAR
        present = [c for c in (*_CARTESIAN, *_POLAR) if c in header]
        raise SchemaError(
            f"{path}: incomplete value columns {present}; need all of {list(missing)} "
            f"(or the other form)"
        )

    freq = _column(header, rows, "freq_hz", path)
    if has_cartesian:
        values = _column(header, rows, "re", path) + 1j * _column(header, rows, "im", path)
    else:
        mag = 10.0 ** (_column(header, rows, "mag_db", path) / 20.0)
        phase = _column(header, rows, "phase_rad", path)
        values = mag * np.exp(1j * phase)

    if "power_dbm" not in header:
        _check_monotone(freq, np.arange(len(rows)), path)
        return FrequencyTrace(frequencies=freq, values=values, drive_power=None)

    power = _column(header, rows, "power_dbm", path)
    traces = []
    for p in sorted(set(power.tolist())):
        sel = np.flatnonzero(power == p)
        _check_monotone(freq[sel], sel, path)
        traces.append(
            FrequencyTrace(frequencies=freq[sel], values=values[sel], drive_power=float(p))
        )
    if len(traces) == 1:
        return traces[0]
    try:
        return PowerSweep(traces=tuple(traces))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _check_monotone(freq: np.ndarray, row_indices: np.ndarray, path) -> None:
    bad = np.flatnonzero(np.diff(freq) <= 0.0)
    if bad.size:
        row = int(row_indices[bad[0] + 1]) + 2  # +2: header line and 1-based lines
        raise DataError(f"{path}: row {row}: frequency not strictly increasing")
    if np.any(freq <= 0.0) or not np.all(np.isfinite(freq)):
        row = int(row_indices[int(np.argmax(~((freq > 0) & np.isfinite(freq))))]) + 2
        raise DataError(f"{path}: row {row}: frequency must be positive and finite")


def write_trace_csv(
    path: str | Path,
    data: FrequencyTrace | PowerSweep,
    form: str = "re_im",
) -> None:
    """Write a trace or sweep; ``form`` is ``re_im`` or ``mag_phase``."""
    if form not in ("re_im", "mag_phase"):
        raise ValueError(f"form must be 're_im' or 'mag_phase', got {form!r}")
    traces = data.traces if isinstance(data, PowerSweep) else (data,)
    include_power = isinstance(data, PowerSweep) or traces[0].drive_power is not None
    value_cols = ["re", "im"] if form == "re_im" else ["mag_db", "phase_rad"]
    header = ["freq_hz", *value_cols] + (["power_dbm"] if include_power else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for trace in traces:
            for f, v in zip(trace.frequencies, trace.values):
                if form == "re_im":
                    cells = [repr(float(f)), repr(float(v.real)), repr(float(v.imag))]
                else:
                    cells = [
                        repr(float(f)),
                        repr(20.0 * math.log10(abs(v))),
                        repr(float(np.angle(v))),
                    ]
                if include_power:
                    cells.append(repr(float(trace.drive_power)))
                writer.writerow(cells)


def parse_field_csv(path: str | Path) -> list[FieldSweepPoint]:
    """Read a field sweep file with columns ``field_t, fr_hz, sigma_hz``."""
    header, rows = _read_rows(path)
    missing = [c for c in ("field_t", "fr_hz", "sigma_hz") if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing required columns {missing} (found {header})")
    field = _column(header, rows, "field_t", path)
    fr = _column(header, rows, "fr_hz", path)
    sigma = _column(header, rows, "sigma_hz", path)
    points = []
    for i, (b, f, s) in enumerate(zip(field, fr, sigma)):
        try:
            points.append(FieldSweepPoint(field=float(b), resonance=float(f), sigma=float(s)))
        except ValueError as exc:
            raise DataError(f"{path}: row {i + 2}: {exc}") from None
    return points


def write_field_csv(path: str | Path, points: Sequence[FieldSweepPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["field_t", "fr_hz", "sigma_hz"])
        for p in points:
            writer.writerow([repr(p.field), repr(p.resonance), repr(p.sigma)])
