"""Circuit JSON files: schema validation, loading and deterministic writing."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .core import CircuitSpec, EnsembleSpec, NoiseParams


class ConfigError(ValueError):
    """Malformed circuit or experiment configuration."""


_GATE = {
    "type": "object",
    "required": ["kind", "targets"],
    "properties": {
        "kind": {"type": "string"},
        "targets": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "matrix": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
    },
}

CIRCUIT_SCHEMA = {
    "type": "object",
    "required": ["n", "gates", "twirl_sites", "measured_wires"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "gates": {"type": "array", "items": _GATE},
        "twirl_sites": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "wire", "position"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "wire": {"type": "integer", "minimum": 0},
                    "position": {"type": "integer", "minimum": 0},
                },
            },
        },
        "measured_wires": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "pre_measure_rotations": {"type": "array", "items": _GATE},
        "kind": {"enum": ["fig1a", "fig1b"]},
        "noise": {
            "type": "object",
            "properties": {k: {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5} for k in ("e1", "e2", "e3")},
            "additionalProperties": False,
        },
        "seed": {"type": ["integer", "null"]},
    },
}


def parse_circuit(data) -> tuple[CircuitSpec, NoiseParams, EnsembleSpec | None]:
    """Validate a decoded circuit document; ``kind`` is optional for plain circuits."""
    try:
        jsonschema.validate(data, CIRCUIT_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    try:
        if "kind" in data:
            e = EnsembleSpec.from_dict(data)
            return e.circuit, e.noise, e
        noise = data.get("noise") or {}
        c = CircuitSpec.from_dict(data)
        return c, NoiseParams(**noise), None
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid circuit: {exc}") from None


def load_circuit(path) -> tuple[CircuitSpec, NoiseParams, EnsembleSpec | None]:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_circuit(data)


def dumps(obj) -> str:
    """Stable JSON text: sorted keys, fixed indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
