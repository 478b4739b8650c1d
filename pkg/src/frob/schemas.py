"""JSON schemas for run configs and reports."""
from __future__ import annotations

SCHEMA_VERSION = 1

_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "string"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "frob run config",
    "type": "object",
    "required": ["schema_version"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "example": {"type": "string"},
        "spec": {
            "type": "object",
            "required": ["s", "L"],
            "additionalProperties": False,
            "properties": {
                "s": {"type": "integer"},
                "L": {"type": "integer"},
                "m0": {"type": "integer"},
                "poles": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "point": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "raw": {"type": "array", "items": _complex},
                "t": {"type": "array", "items": _complex},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "points": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
        },
        "out": {"type": "string"},
        "format": {"enum": ["json", "table"]},
    },
    "not": {"required": ["example", "spec"]},
}

_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}


def _nested(depth: int) -> dict:
    s = _pair
    for _ in range(depth):
        s = {"type": "array", "items": s}
    return s


VERDICT_SCHEMA = {
    "type": "object",
    "required": ["name", "max_residual", "tolerance", "passed", "skipped"],
    "properties": {
        "name": {"type": "string"},
        "max_residual": {"type": "number"},
        "tolerance": {"type": "number"},
        "passed": {"type": "boolean"},
        "skipped": {"type": ["string", "null"]},
        "seed": {},
    },
}

POINT_SCHEMA = {
    "type": "object",
    "required": ["seed", "t", "raw", "verdicts", "passed"],
    "properties": {
        "seed": {"type": ["array", "null"], "items": {"type": "integer"}},
        "t": _nested(1),
        "raw": _nested(1),
        "chart": {
            "type": "object",
            "required": ["names", "values"],
            "properties": {"names": {"type": "array", "items": {"type": "string"}},
                           "values": _nested(1)},
        },
        "eta": _nested(2),
        "eta_block": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "euler": {
            "type": "object",
            "required": ["weights", "shifts", "d"],
            "properties": {"weights": {"type": "array", "items": {"type": "string"}},
                           "shifts": {"type": "array", "items": {"type": "string"}},
                           "d": {"type": "string"}},
        },
        "unit": {
            "type": "object",
            "required": ["components", "flat"],
            "properties": {"components": _nested(1), "flat": {"type": "boolean"}},
        },
        "c": _nested(3),
        "verdicts": {"type": "array", "items": VERDICT_SCHEMA},
        "passed": {"type": "boolean"},
        "timing": {"type": "object"},
    },
}

_admissibility = {
    "type": "object",
    "required": ["status", "N", "n", "reasons", "warnings"],
    "properties": {
        "status": {"enum": ["admissible-flat-unit", "admissible-nonflat-unit", "inadmissible"]},
        "N": {"type": "integer"},
        "n": {"type": "integer"},
        "reasons": {"type": "array", "items": {"type": "string"}},
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}

_spec = {
    "type": "object",
    "required": ["s", "L", "m0", "poles"],
    "properties": {"s": {"type": "integer"}, "L": {"type": "integer"},
                   "m0": {"type": "integer"}, "poles": {"type": "array", "items": {"type": "integer"}}},
}

_common = {
    "schema_version": {"const": SCHEMA_VERSION},
    "command": {"enum": ["validate", "report", "sweep", "examples"]},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "frob report",
    "type": "object",
    "required": ["schema_version", "command"],
    "properties": _common,
    "allOf": [
        {
            "if": {"properties": {"command": {"const": "validate"}}},
            "then": {"required": ["spec", "admissibility"],
                     "properties": {"spec": _spec, "admissibility": _admissibility}},
        },
        {
            "if": {"properties": {"command": {"const": "examples"}}},
            "then": {"required": ["examples"],
                     "properties": {"examples": {"type": "array", "items": {
                         "type": "object",
                         "required": ["name", "title", "spec", "N", "F", "euler"]}}}},
        },
        {
            "if": {"properties": {"command": {"enum": ["report", "sweep"]}}},
            "then": {
                "required": ["target", "spec", "admissibility", "seed", "tolerances",
                             "points", "rejections", "verdicts", "passed", "timing"],
                "properties": {
                    "target": {"type": "string"},
                    "spec": _spec,
                    "admissibility": _admissibility,
                    "seed": {"type": "integer"},
                    "tolerances": {"type": "object",
                                   "additionalProperties": {"type": "number"}},
                    "points": {"type": "array", "items": POINT_SCHEMA},
                    "rejections": {"type": "array", "items": {
                        "type": "object", "required": ["seed", "reason"]}},
                    "verdicts": {"type": "array", "items": VERDICT_SCHEMA},
                    "passed": {"type": "boolean"},
                    "timing": {"type": ["object", "null"]},
                },
            },
        },
    ],
}
