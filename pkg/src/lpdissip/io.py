"""JSON encoding of operator specs, grid functions and reports.

Complex arrays are written as nested lists whose leaves are ``[re, im]``
pairs (row-major).  A bare number is accepted wherever a complex scalar is
expected.  Documents are validated with JSON Schema; validation errors carry
the JSON pointer of the offending element.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

import jsonschema
import numpy as np

from .model import DataError, DissipError, GridFunction, OPERATOR_KINDS, OperatorSpec


class SpecParseError(DissipError, ValueError):
    """Malformed spec document; ``pointer`` locates the problem."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_CPLX = {"anyOf": [{"type": "number"}, {"type": "array"}]}
_REAL = {"anyOf": [{"type": "number"}, {"type": "array"}]}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string"},
        "description": {"type": "string"},
        "kind": {"enum": list(OPERATOR_KINDS)},
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "coefficient_class": {"enum": ["constant", "smooth-sampled"]},
        "A": _CPLX, "b": _CPLX, "c": _CPLX, "a": _CPLX,
        "div_b": _CPLX, "div_c": _CPLX,
        "Ah": _CPLX, "Bh": _CPLX, "Ch": _CPLX, "D": _CPLX, "dBh": _CPLX, "dCh": _CPLX,
        "nu": _REAL,
        "grid": {
            "type": "object",
            "required": ["origin", "spacing", "shape"],
            "properties": {
                "origin": {"type": "array", "items": {"type": "number"}},
                "spacing": {"type": "number", "exclusiveMinimum": 0},
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 3}},
            },
        },
        "extra": {"type": "object"},
        "expect": {"type": "object"},
    },
}

_COMPLEX_FIELDS = ("A", "b", "c", "a", "div_b", "div_c", "Ah", "Bh", "Ch", "D", "dBh", "dCh")


def encode_complex(x) -> Any:
    x = np.asarray(x)
    if x.ndim == 0:
        z = complex(x)
        return [z.real, z.imag]
    return np.stack([x.real, x.imag], axis=-1).astype(float).tolist() if np.iscomplexobj(x) \
        else np.stack([x, np.zeros_like(x)], axis=-1).astype(float).tolist()


def decode_complex(obj, pointer: str = "") -> np.ndarray:
    """Inverse of :func:`encode_complex`; a bare number is a real scalar."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return np.asarray(complex(obj))
    try:
        arr = np.asarray(obj, dtype=float)
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"ragged or non-numeric array ({exc})", pointer) from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise SpecParseError("complex arrays need [re, im] pairs at the innermost level", pointer)
    if not np.all(np.isfinite(arr)):
        raise SpecParseError("non-finite entry", pointer)
    return arr[..., 0] + 1j * arr[..., 1]


def _validate(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise SpecParseError(err.message, pointer)


def spec_from_dict(doc: dict) -> OperatorSpec:
    if not isinstance(doc, dict):
        raise SpecParseError("spec document must be a JSON object")
    _validate(doc)
    kw: dict = {}
    for key in ("id", "kind", "n", "m", "coefficient_class", "grid", "extra"):
        if key in doc:
            kw[key] = doc[key]
    for key in _COMPLEX_FIELDS:
        if key in doc:
            kw[key] = decode_complex(doc[key], f"/{key}")
    if "nu" in doc:
        nu = np.asarray(doc["nu"], float)
        kw["nu"] = float(nu) if nu.ndim == 0 else nu
    if "expect" in doc:
        kw.setdefault("extra", {})
        kw["extra"] = dict(kw["extra"], expect=doc["expect"])
    try:
        return OperatorSpec(**kw)
    except DataError as exc:
        raise SpecParseError(str(exc), "/") from None


def spec_to_dict(spec: OperatorSpec) -> dict:
    out: dict = {"id": spec.id, "kind": spec.kind, "n": spec.n, "m": spec.m,
                 "coefficient_class": spec.coefficient_class}
    for key in _COMPLEX_FIELDS:
        v = getattr(spec, key)
        if v is None:
            continue
        out[key] = encode_complex(v)
    if spec.nu is not None:
        out["nu"] = np.asarray(spec.nu, float).tolist()
    if spec.grid is not None:
        out["grid"] = spec.grid
    if spec.extra:
        extra = dict(spec.extra)
        expect = extra.pop("expect", None)
        if extra:
            out["extra"] = extra
        if expect is not None:
            out["expect"] = expect
    return out


def load_json(path: Union[str, Path]) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc.strerror}") from None


def load_spec(path: Union[str, Path]) -> OperatorSpec:
    return spec_from_dict(load_json(path))


def dump_json(obj: Any) -> str:
    """Deterministic JSON (sorted keys, fixed float repr)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)


def to_jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, GridFunction):
        return x.to_dict()
    if hasattr(x, "to_dict"):
        return to_jsonable(x.to_dict())
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return encode_complex(x)
        return x.tolist()
    if isinstance(x, (np.floating, float)):
        f = float(x)
        if f != f:
            return "nan"
        if f in (float("inf"), float("-inf")):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "value") and hasattr(x, "name"):
        return x.value
    return x
