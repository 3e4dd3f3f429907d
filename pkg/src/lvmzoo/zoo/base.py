"""Declarative model specs with canonical JSON round-tripping.

Every spec is a frozen dataclass whose fields carry a ``kind`` in their
metadata. The kind drives decoding from JSON (with field-path error
messages) and coercion when a spec is built directly from Python lists.

Fingerprint
-----------
``fingerprint()`` serializes ``to_dict()`` with sorted keys, no whitespace
and shortest round-trip float repr, then takes a 64-bit BLAKE2b digest,
rendered as 16 lowercase hex characters.
"""
import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import SpecError

MODELS = {}


def register(cls):
    MODELS[cls.model] = cls
    return cls


def _field(kind, default=dataclasses.MISSING, **extra):
    meta = {"kind": kind, **extra}
    if default is dataclasses.MISSING:
        return dataclasses.field(metadata=meta)
    return dataclasses.field(default=default, metadata=meta)


def matrix(default=dataclasses.MISSING):
    return _field("matrix", default)


def vector(default=dataclasses.MISSING):
    return _field("vector", default)


def scalar(default=dataclasses.MISSING):
    return _field("scalar", default)


def integer(default=dataclasses.MISSING):
    return _field("int", default)


def integers(default=dataclasses.MISSING):
    return _field("ints", default)


def text(default=dataclasses.MISSING):
    return _field("str", default)


def flag(default=False):
    return _field("bool", default)


def matrices(default=dataclasses.MISSING):
    return _field("matrices", default)


def noise_list(default=dataclasses.MISSING):
    """Per-view noise: each entry a scalar (isotropic) or a square matrix."""
    return _field("noise", default)


def nested(cls, default=dataclasses.MISSING):
    return _field("nested", default, cls=cls)


def nested_list(cls, default=dataclasses.MISSING):
    return _field("nested_list", default, cls=cls)


def _frozen(a):
    a.setflags(write=False)
    return a


def _to_array(value, ndim, path):
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SpecError(path, "expected numbers") from None
    if a.ndim != ndim:
        shape = {1: "a vector", 2: "a matrix (list of rows)"}[ndim]
        raise SpecError(path, f"expected {shape}, got {a.ndim}-d data")
    if not np.all(np.isfinite(a)):
        raise SpecError(path, "entries must be finite")
    return _frozen(a)


def _coerce(value, f, path):
    kind = f.metadata.get("kind")
    if value is None:
        if f.default is None:
            return None
        raise SpecError(path, "is required")
    if kind == "matrix":
        return _to_array(value, 2, path)
    if kind == "vector":
        return _to_array(np.atleast_1d(value) if np.isscalar(value) else value, 1, path)
    if kind == "scalar":
        if isinstance(value, (bool, str)) or np.ndim(value) != 0:
            raise SpecError(path, "expected a number")
        value = float(value)
        if not np.isfinite(value):
            raise SpecError(path, "must be finite")
        return value
    if kind == "int":
        if isinstance(value, bool) or int(value) != value:
            raise SpecError(path, "expected an integer")
        return int(value)
    if kind == "ints":
        if np.ndim(value) != 1 or any(isinstance(v, bool) or int(v) != v for v in value):
            raise SpecError(path, "expected a list of integers")
        return tuple(int(v) for v in value)
    if kind == "str":
        if not isinstance(value, str):
            raise SpecError(path, "expected a string")
        return value
    if kind == "bool":
        if not isinstance(value, (bool, np.bool_)):
            raise SpecError(path, "expected true or false")
        return bool(value)
    if kind == "matrices":
        if not isinstance(value, (list, tuple)):
            raise SpecError(path, "expected a list of matrices")
        return tuple(_to_array(v, 2, f"{path}[{i}]") for i, v in enumerate(value))
    if kind == "noise":
        if not isinstance(value, (list, tuple)):
            raise SpecError(path, "expected a list of per-view noise entries")
        out = []
        for i, v in enumerate(value):
            if np.ndim(v) == 0:
                out.append(_coerce(v, _SCALAR, f"{path}[{i}]"))
            else:
                out.append(_to_array(v, 2, f"{path}[{i}]"))
        return tuple(out)
    if kind == "nested":
        cls = f.metadata["cls"]
        return value if isinstance(value, cls) else cls.from_dict(value, path)
    if kind == "nested_list":
        cls = f.metadata["cls"]
        if not isinstance(value, (list, tuple)):
            raise SpecError(path, "expected a list")
        return tuple(
            v if isinstance(v, cls) else cls.from_dict(v, f"{path}[{i}]")
            for i, v in enumerate(value)
        )
    return value


_SCALAR = dataclasses.field(metadata={"kind": "scalar"})


def _encode(value):
    if isinstance(value, Serializable):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


class Serializable:
    """Mixin for frozen dataclasses with ``kind``-annotated fields."""

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if "kind" in f.metadata:
                value = _coerce(getattr(self, f.name), f, f.name)
                object.__setattr__(self, f.name, value)
        self.validate()

    def validate(self):
        """Check cross-field invariants; raise :class:`SpecError` naming the field."""

    def to_dict(self):
        out = {}
        model = getattr(type(self), "model", None)
        if model is not None:
            out["model"] = model
        for f in dataclasses.fields(self):
            if "kind" in f.metadata:
                out[f.name] = _encode(getattr(self, f.name))
        return out

    @classmethod
    def from_dict(cls, data, path="spec"):
        if not isinstance(data, dict):
            raise SpecError(path, "expected a JSON object")
        names = {f.name for f in dataclasses.fields(cls) if "kind" in f.metadata}
        unknown = set(data) - names - {"model"}
        if unknown:
            raise SpecError(f"{path}.{sorted(unknown)[0]}", "unknown field")
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in names:
                continue
            sub = f"{path}.{f.name}"
            if f.name not in data:
                if f.default is dataclasses.MISSING:
                    raise SpecError(sub, "is required")
                continue
            kwargs[f.name] = _coerce(data[f.name], f, sub)
        try:
            return cls(**kwargs)
        except SpecError as exc:
            raise SpecError(f"{path}.{exc.field}", str(exc).split(": ", 1)[1]) from None

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self):
        return hashlib.blake2b(self.canonical_json().encode(), digest_size=8).hexdigest()

    def __eq__(self, other):
        return type(self) is type(other) and self.canonical_json() == other.canonical_json()

    def __hash__(self):
        return hash(self.canonical_json())


class ModelSpec(Serializable):
    """Base class for registered models; subclasses set ``model``."""

    model = None


def spec_from_dict(data, path="spec"):
    if not isinstance(data, dict):
        raise SpecError(path, "expected a JSON object")
    tag = data.get("model")
    if tag is None:
        raise SpecError(f"{path}.model", "is required")
    if tag not in MODELS:
        raise SpecError(f"{path}.model", f"unknown model {tag!r}; known: {', '.join(sorted(MODELS))}")
    return MODELS[tag].from_dict(data, path)


def load_spec(path):
    """Read a spec from a JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError("spec", f"invalid JSON ({exc})") from None
    return spec_from_dict(data)


def dump_spec(spec, path=None):
    text = json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
