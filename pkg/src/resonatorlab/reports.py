"""Structured run reports: one self-describing JSON document per CLI run.

Reports are deterministic (sorted keys, shortest-roundtrip float repr, no
timestamp unless explicitly requested) and validate against
:data:`REPORT_SCHEMA`. Non-finite numbers are serialized as ``null``.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

import numpy as np
from jsonschema import validate as _js_validate

from . import __version__
from .errors import (
    ConvergenceError,
    DataError,
    DomainError,
    ResonatorLabError,
)

__all__ = [
    "SCHEMA_VERSION",
    "REPORT_SCHEMA",
    "ERROR_SCHEMA",
    "make_report",
    "error_report",
    "exit_code_for",
    "dump_report",
    "validate_report",
]

SCHEMA_VERSION = "1.0.0"

_AXIS_SCHEMA = {
    "type": "object",
    "required": ["label", "values"],
    "additionalProperties": False,
    "properties": {
        "label": {"type": "string"},
        "values": {"type": "array", "items": {"type": ["number", "null"]}},
    },
}

REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "resonatorlab run report",
    "type": "object",
    "required": ["schema_version", "tool", "subcommand", "inputs", "results", "plot_data"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "version": {"type": "string"},
            },
        },
        "subcommand": {"type": "string"},
        "generated_at": {"type": "string"},
        "inputs": {"type": "object"},
        "results": {"type": "object"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "plot_data": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["x", "series"],
                "additionalProperties": False,
                "properties": {
                    "x": _AXIS_SCHEMA,
                    "series": {"type": "array", "items": _AXIS_SCHEMA},
                },
            },
        },
    },
}

ERROR_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "resonatorlab error report",
    "type": "object",
    "required": ["schema_version", "tool", "error"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": REPORT_SCHEMA["properties"]["tool"],
        "subcommand": {"type": "string"},
        "error": {
            "type": "object",
            "required": ["type", "message", "exit_code"],
            "additionalProperties": False,
            "properties": {
                "type": {"type": "string"},
                "message": {"type": "string"},
                "exit_code": {"type": "integer"},
            },
        },
    },
}

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CONVERGENCE = 3
EXIT_DOMAIN = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the CLI exit-code contract."""
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, (DataError, ValueError, OSError, ResonatorLabError)):
        return EXIT_DATA
    return EXIT_DATA


def jsonify(value: Any) -> Any:
    """Recursively convert to JSON-safe plain types; non-finite floats -> null."""
    if isinstance(value, Mapping):
        return {str(k): jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonify(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if np.isfinite(f) else None
    if value is None or isinstance(value, str):
        return value
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


def make_report(
    subcommand: str,
    inputs: Mapping[str, Any],
    results: Mapping[str, Any],
    plot_data: Mapping[str, Any] | None = None,
    warnings: list[str] | None = None,
    timestamp: str | None = None,
) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "resonatorlab", "version": __version__},
        "subcommand": subcommand,
        "inputs": jsonify(inputs),
        "results": jsonify(results),
        "plot_data": jsonify(plot_data or {}),
    }
    if warnings:
        doc["warnings"] = [str(w) for w in warnings]
    if timestamp is not None:
        doc["generated_at"] = timestamp
    validate_report(doc)
    return doc


def error_report(exc: BaseException, subcommand: str | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "resonatorlab", "version": __version__},
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": exit_code_for(exc),
        },
    }
    if subcommand:
        doc["subcommand"] = subcommand
    _js_validate(doc, ERROR_SCHEMA)
    return doc


def validate_report(doc: Mapping[str, Any]) -> None:
    _js_validate(doc, REPORT_SCHEMA)


def series(label: str, values) -> dict:
    """One labelled value array for a plot-data group."""
    return {"label": label, "values": jsonify(list(values))}


def plot_group(x_label: str, x_values, *series_items: dict) -> dict:
    return {"x": series(x_label, x_values), "series": list(series_items)}


def dump_report(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
