"""JSON documents for certification runs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict

import jsonschema

from . import __version__
from .certify import BoundReport
from .moments import to_uvw

_NUM = {"type": ["number", "null"]}

SCHEMA = {
    "type": "object",
    "required": ["functional", "params", "hbar", "verdict", "bound", "sheet", "minimizer", "sheets", "oracle", "config", "tolerances", "version"],
    "properties": {
        "functional": {"type": "string"},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "hbar": {"type": "number"},
        "verdict": {"enum": ["BOUNDED", "UNBOUNDED", "INFIMUM_NOT_ATTAINED", "INCONCLUSIVE"]},
        "bound": _NUM,
        "sheet": {"type": ["integer", "null"]},
        "minimizer": {
            "type": ["object", "null"],
            "required": ["x", "y", "w", "u", "v", "b", "gamma", "r", "theta", "chi"],
            "properties": {k: _NUM for k in ("x", "y", "w", "u", "v", "b", "gamma", "r", "theta", "chi", "fixed_point_error")},
        },
        "sheets": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["sheet", "dimension", "points", "samples", "minimum"],
                "properties": {
                    "sheet": {"type": "integer"},
                    "dimension": {"enum": ["EMPTY", "DIM0", "DIM1", "DIM2"]},
                    "points": {"type": "integer"},
                    "samples": {"type": "integer"},
                    "minimum": _NUM,
                    "constant_on_set": {"type": ["boolean", "null"]},
                    "discarded": {"type": "integer"},
                    "notes": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "witness": {
            "type": ["object", "null"],
            "properties": {
                "ray": {"type": "string"},
                "converging": {"type": "boolean"},
                "limit_estimate": _NUM,
                "points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}},
            },
        },
        "sheet_minima_monotone": {"type": ["boolean", "null"]},
        "oracle": {"type": "object"},
        "expected": {"type": ["object", "null"]},
        "config": {"type": "object"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "notes": {"type": "array", "items": {"type": "string"}},
        "version": {"type": "string"},
    },
}

TOLERANCES = {
    "residual": 1e-10,
    "rank": 1e-8,
    "definiteness": 1e-10,
    "fixed_point": 1e-8,
    "constant_on_set": 1e-8,
    "probe_margin": 1e-9,
}


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def report_document(report: BoundReport, functional: str, params: dict, hbar: float, config, expected: dict | None = None) -> dict:
    minimizer = None
    if report.minimizer is not None:
        m = report.minimizer
        p = to_uvw(m)
        s, cs = report.squeeze, report.complex_squeeze
        minimizer = {
            "x": _num(m.x), "y": _num(m.y), "w": _num(m.w), "u": _num(p.u), "v": _num(p.v),
            "b": _num(s.b) if s else None, "gamma": _num(s.gamma) if s else None,
            "r": _num(cs.r) if cs else None, "theta": _num(cs.theta) if cs else None, "chi": _num(cs.chi) if cs else None,
            "fixed_point_error": _num(report.fixed_point_error),
        }
    witness = None
    if report.witness is not None:
        wt = report.witness
        witness = {
            "ray": wt.ray,
            "converging": wt.converging,
            "limit_estimate": _num(wt.limit_estimate),
            "points": [[float(p.x), float(p.y), float(p.w), float(v)] for p, v in zip(wt.points, wt.values)],
        }
    sheets = [
        {
            "sheet": s.sheet, "dimension": s.dimension.value, "points": s.n_points, "samples": s.n_samples,
            "minimum": _num(s.minimum), "constant_on_set": s.constant_on_set, "discarded": s.discarded, "notes": list(s.notes),
        }
        for s in report.sheets
    ]
    doc = {
        "functional": functional,
        "params": {k: float(v) for k, v in params.items() if k != "hbar"},
        "hbar": float(hbar),
        "verdict": report.verdict.value,
        "bound": _num(report.bound),
        "sheet": report.sheet,
        "minimizer": minimizer,
        "sheets": sheets,
        "witness": witness,
        "sheet_minima_monotone": report.sheet_minima_monotone,
        "oracle": report.oracle,
        "expected": expected,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(config).items()},
        "tolerances": dict(TOLERANCES),
        "notes": list(report.notes),
        "version": __version__,
    }
    jsonschema.validate(doc, SCHEMA)
    return doc


def dumps(doc: dict) -> str:
    # json writes floats with repr, the shortest string that reads back exactly
    return json.dumps(doc, indent=2, allow_nan=False)
