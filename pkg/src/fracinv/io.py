"""System files, report serialization and atomic output."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from .field import PolyField2D
from .poly import BivariatePoly
from .scalar import QuadNum, parse_scalar

__all__ = [
    "SYSTEM_SCHEMA",
    "SystemSpec",
    "SystemFileError",
    "load_system",
    "parse_system",
    "corpus_names",
    "atomic_write",
    "write_json",
    "write_csv",
    "config_hash",
    "dump_system",
]

_SCALAR = {
    "oneOf": [
        {"type": "string", "pattern": r"^\s*[+-]?\d+(/\d+)?\s*$"},
        {"type": "integer"},
        {
            "type": "object",
            "properties": {
                "rat": {"type": ["string", "integer"]},
                "irr": {"type": ["string", "integer"]},
                "d": {"type": "integer", "minimum": 2},
            },
            "required": ["irr", "d"],
            "additionalProperties": False,
        },
    ]
}

_COEFFS = {
    "type": "object",
    "propertyNames": {"pattern": r"^\d+,\d+$"},
    "additionalProperties": _SCALAR,
}

SYSTEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "degree": {"type": "integer", "minimum": 1},
        "a": _COEFFS,
        "b": _COEFFS,
        "alpha": _SCALAR,
        "x0": {"type": "array", "items": _SCALAR, "minItems": 2, "maxItems": 2},
        "reference_curves": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"label": {"type": "string"}, "g": _COEFFS},
                "required": ["label", "g"],
            },
        },
    },
    "required": ["degree", "a", "b"],
    "additionalProperties": False,
}


class SystemFileError(ValueError):
    """Malformed system file; ``pointer`` is the JSON pointer of the offending node."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


@dataclass
class SystemSpec:
    field: PolyField2D
    name: str = ""
    description: str = ""
    alpha: Fraction | None = None
    x0: tuple | None = None
    reference_curves: list = field(default_factory=list)

    @property
    def matrix(self):
        """Linear part as a 2x2 list when the field is linear and homogeneous."""
        F = self.field
        if F.P.degree > 1 or F.Q.degree > 1 or F.has_constant_terms():
            return None
        return [[F.P.coeff(1, 0), F.P.coeff(0, 1)], [F.Q.coeff(1, 0), F.Q.coeff(0, 1)]]


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path) if path else "/"


def _coeffs(raw: dict, where: str) -> dict:
    out = {}
    for key, v in raw.items():
        i, j = (int(s) for s in key.split(","))
        try:
            out[(i, j)] = parse_scalar(v)
        except (ValueError, ZeroDivisionError) as err:
            raise SystemFileError(str(err), f"{where}/{key}") from None
    return out


def parse_system(data: dict) -> SystemSpec:
    """Validate and convert a decoded system document."""
    validator = jsonschema.Draft202012Validator(SYSTEM_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SystemFileError(e.message, _pointer(e.absolute_path))
    a = _coeffs(data["a"], "/a")
    b = _coeffs(data["b"], "/b")
    n = data["degree"]
    for where, cs in (("/a", a), ("/b", b)):
        for (i, j) in cs:
            if i + j > n:
                raise SystemFileError(f"monomial x^{i} y^{j} exceeds degree {n}", f"{where}/{i},{j}")
    try:
        fld = PolyField2D(n, a, b)
    except ValueError as err:
        raise SystemFileError(str(err), "/") from None
    alpha = parse_scalar(data["alpha"]) if "alpha" in data else None
    x0 = tuple(parse_scalar(v) for v in data["x0"]) if "x0" in data else None
    refs = [(r["label"], BivariatePoly(_coeffs(r["g"], f"/reference_curves/{k}/g")))
            for k, r in enumerate(data.get("reference_curves", []))]
    return SystemSpec(fld, data.get("name", ""), data.get("description", ""), alpha, x0, refs)


_CORPUS_ALIASES = {"4.4*": "4.4star"}


def corpus_names() -> list[str]:
    names = []
    for p in resources.files("fracinv.corpus").iterdir():
        if p.name.endswith(".json"):
            stem = p.name[:-5]
            names.append("4.4*" if stem == "4.4star" else stem)
    return sorted(names)


def load_system(source) -> SystemSpec:
    """Load a system from a JSON path, a built-in corpus name, or a dict."""
    if isinstance(source, dict):
        return parse_system(source)
    text = None
    p = Path(str(source))
    if p.suffix == ".json" and p.exists():
        text = p.read_text()
    else:
        stem = _CORPUS_ALIASES.get(str(source), str(source))
        res = resources.files("fracinv.corpus") / f"{stem}.json"
        if res.is_file():
            text = res.read_text()
    if text is None:
        raise FileNotFoundError(f"no system file or corpus entry named {source!r}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SystemFileError(f"invalid JSON: {err.msg} (line {err.lineno})") from None
    return parse_system(data)


def _scalar_out(v):
    if isinstance(v, QuadNum):
        return {"rat": str(v.a), "irr": str(v.b), "d": v.d}
    return str(Fraction(v))


def dump_system(spec: SystemSpec) -> dict:
    """Inverse of :func:`parse_system` (exact coefficients as strings)."""
    F = spec.field
    out = {"name": spec.name, "description": spec.description, "degree": F.degree,
           "a": {f"{i},{j}": _scalar_out(c) for (i, j), c in sorted(F.P.terms.items())},
           "b": {f"{i},{j}": _scalar_out(c) for (i, j), c in sorted(F.Q.terms.items())}}
    if spec.alpha is not None:
        out["alpha"] = _scalar_out(spec.alpha)
    if spec.x0 is not None:
        out["x0"] = [_scalar_out(v) for v in spec.x0]
    if spec.reference_curves:
        out["reference_curves"] = [
            {"label": lab, "g": {f"{i},{j}": _scalar_out(c) for (i, j), c in sorted(g.terms.items())}}
            for lab, g in spec.reference_curves]
    return out


# ---------------------------------------------------------------------------
# output


def atomic_write(path, data: str | bytes) -> Path:
    """Write through a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def write_csv(path, header, rows) -> Path:
    """CSV with floats at 17 significant digits (round-trip exact)."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
    return atomic_write(path, buf.getvalue())


def config_hash(config: dict) -> str:
    """Stable SHA-256 of a run configuration."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()
