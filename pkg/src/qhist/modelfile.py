"""JSON model files and report serialization.

Numbers in a model file are either exact literals (strings in the amplitude
grammar, e.g. ``"1/(2*sqrt2)"``) or floats (a JSON number, or ``[re, im]``).
One file must use one kind throughout.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Union

import jsonschema

from .core import (
    DEFAULT_EPSILON,
    BranchVectorModel,
    DecoherenceFunctional,
    OperatorModel,
    Step,
    build_from_amplitudes,
    build_from_matrix,
    build_from_operators,
)
from .errors import AmplitudeParseError, SchemaError
from .models import HopperSpec, SlitSpec, make_hopper, make_slits
from .numerics import ExactScalar, parse_amplitude, render

SCHEMA_VERSION = 1
FIXTURES = ("three_slit", "hopper_t3", "appendix_b")

_number = {
    "oneOf": [
        {"type": "string"},
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _number}}
_labels = {"type": "array", "items": {"type": "string", "minLength": 1}, "minItems": 1}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "type": {"enum": ["amplitudes", "matrix", "hopper", "slits", "operator"]},
        "name": {"type": "string"},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
    },
    "allOf": [
        {
            "if": {"properties": {"type": {"const": "amplitudes"}}},
            "then": {
                "required": ["labels", "amplitudes", "final_classes"],
                "properties": {
                    "labels": _labels,
                    "amplitudes": {"type": "array", "items": _number, "minItems": 1},
                    "final_classes": {"type": "array", "items": {"type": "integer"}},
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "matrix"}}},
            "then": {"required": ["entries"], "properties": {"entries": _matrix, "labels": _labels}},
        },
        {
            "if": {"properties": {"type": {"const": "hopper"}}},
            "then": {
                "required": ["num_sites", "num_steps"],
                "properties": {
                    "num_sites": {"type": "integer", "minimum": 1},
                    "num_steps": {"type": "integer", "minimum": 1},
                    "initial_site": {"type": "integer", "minimum": 0},
                    "unitary": _matrix,
                },
            },
        },
        {
            "if": {"properties": {"type": {"const": "slits"}}},
            "then": {
                "required": ["amplitudes"],
                "properties": {"amplitudes": {"type": "array", "items": _number, "minItems": 2}, "labels": _labels},
            },
        },
        {
            "if": {"properties": {"type": {"const": "operator"}}},
            "then": {
                "required": ["dimension", "rho", "steps"],
                "properties": {
                    "dimension": {"type": "integer", "minimum": 1},
                    "rho": _matrix,
                    "steps": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["unitary", "projectors"],
                            "properties": {
                                "unitary": _matrix,
                                "projectors": {"type": "array", "minItems": 1, "items": _matrix},
                            },
                        },
                    },
                },
            },
        },
    ],
}


class _Decoder:
    def __init__(self, exact: bool) -> None:
        self.exact = exact

    def number(self, x):
        if isinstance(x, str):
            if not self.exact:
                raise SchemaError("model mixes exact literals and floats")
            try:
                return parse_amplitude(x)
            except AmplitudeParseError as exc:
                raise SchemaError(f"bad amplitude literal: {exc}") from exc
        if self.exact:
            raise SchemaError("model mixes exact literals and floats")
        if isinstance(x, list):
            return complex(float(x[0]), float(x[1]))
        return complex(float(x))

    def matrix(self, m):
        return [[self.number(v) for v in row] for row in m]


def _is_exact_doc(doc: dict) -> bool:
    strings = numbers = False

    def walk(x):
        nonlocal strings, numbers
        if isinstance(x, str):
            strings = True
        elif isinstance(x, bool):
            pass
        elif isinstance(x, (int, float)):
            numbers = True
        elif isinstance(x, list):
            for v in x:
                walk(v)
        elif isinstance(x, dict):
            for k in ("unitary", "projectors"):
                if k in x:
                    walk(x[k])

    for k in ("amplitudes", "entries", "unitary", "rho", "steps"):
        if k in doc:
            walk(doc[k])
    if strings and numbers:
        raise SchemaError("model mixes exact literals and floats; use one kind throughout")
    return not numbers


def functional_from_document(doc: Any, *, allow_invalid: bool = False) -> DecoherenceFunctional:
    if not isinstance(doc, dict) or not doc:
        raise SchemaError("model file must be a non-empty JSON object")
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"schema error at {where}: {exc.message}") from None
    dec = _Decoder(_is_exact_doc(doc))
    eps = float(doc.get("epsilon", DEFAULT_EPSILON))
    kind = doc["type"]
    if kind == "matrix":
        return build_from_matrix(dec.matrix(doc["entries"]), doc.get("labels"), epsilon=eps, allow_invalid=allow_invalid)
    if kind == "amplitudes":
        model = BranchVectorModel(
            tuple(doc["labels"]), tuple(dec.number(a) for a in doc["amplitudes"]), tuple(doc["final_classes"])
        )
    elif kind == "slits":
        labels = tuple(doc["labels"]) if "labels" in doc else None
        model = make_slits(SlitSpec(tuple(dec.number(a) for a in doc["amplitudes"]), labels))
    elif kind == "hopper":
        kwargs = dict(num_sites=doc["num_sites"], num_steps=doc["num_steps"], initial_site=doc.get("initial_site", 0))
        if "unitary" in doc:
            kwargs["unitary"] = tuple(tuple(r) for r in dec.matrix(doc["unitary"]))
        model = make_hopper(HopperSpec(**kwargs))
    else:
        steps = tuple(
            Step(dec.matrix(s["unitary"]), tuple(dec.matrix(p) for p in s["projectors"])) for s in doc["steps"]
        )
        op = OperatorModel(doc["dimension"], dec.matrix(doc["rho"]), steps, eps)
        return build_from_operators(op, epsilon=eps, allow_invalid=allow_invalid)
    return build_from_amplitudes(model, epsilon=eps, allow_invalid=allow_invalid)


def fixture_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in FIXTURES:
        raise FileNotFoundError(f"no shipped fixture named {name!r}")
    return Path(str(resources.files("qhist") / "fixtures" / f"{stem}.json"))


def resolve(source: Union[str, Path]) -> Path:
    """A filesystem path, or the bare name of a shipped fixture."""
    p = Path(source)
    if p.exists():
        return p
    try:
        return fixture_path(str(source))
    except FileNotFoundError:
        raise FileNotFoundError(f"model file {str(source)!r} not found") from None


def load_document(source: Union[str, Path]) -> dict:
    path = resolve(source)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None


def load_functional(source: Union[str, Path], *, allow_invalid: bool = False) -> DecoherenceFunctional:
    return functional_from_document(load_document(source), allow_invalid=allow_invalid)


def encode_scalar(x):
    if isinstance(x, ExactScalar):
        return render(x)
    z = complex(x)
    return [z.real, z.imag]


def functional_to_document(d: DecoherenceFunctional, name: str | None = None) -> dict:
    doc: dict = {"schema_version": SCHEMA_VERSION, "type": "matrix"}
    if name:
        doc["name"] = name
    if not d.is_exact:
        doc["epsilon"] = d.epsilon
    doc["labels"] = list(d.labels)
    doc["entries"] = [[encode_scalar(v) for v in row] for row in d.entries]
    return doc


def dumps(doc: Any) -> str:
    """Deterministic JSON: insertion-ordered keys, fixed indentation, trailing newline."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
