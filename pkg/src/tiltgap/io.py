"""Instance/dataset file parsing and the deterministic report writer.

Instance files are JSON objects::

    {
      "alphabet": ["z1", "z2"],
      "reference": [0.5, 0.5],
      "data": [0.5, 0.5],          # optional data-generating measure
      "models": ["theta0"],
      "loss": [[0, 1]],            # "inf" marks an infinite loss
      "prior": [1, 1]              # optional prior over models
    }

Dataset files are ``{"entries": ["z1", "z1", "z2"]}`` (or a bare list of
labels).  Reports are JSON with every float written to 17 significant
digits; infinities and NaN are written as the strings ``"inf"``,
``"-inf"``, ``"nan"``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .empirical import Dataset
from .errors import InputError, TiltgapError
from .loss import LossModel
from .measure import Alphabet, DiscreteMeasure


class InstanceError(InputError):
    """Malformed input file; the message names the file and the field."""


@dataclass(frozen=True)
class Instance:
    path: str
    digest: str
    lm: LossModel
    reference: DiscreteMeasure
    data: DiscreteMeasure | None
    prior: DiscreteMeasure | None

    @property
    def alphabet(self) -> Alphabet:
        return self.lm.alphabet


def _read_json(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InstanceError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise InstanceError(f"{path}: file is not UTF-8 text") from None
    except json.JSONDecodeError as exc:
        raise InstanceError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return doc, hashlib.sha256(raw).hexdigest()


def _number(path, field, v, allow_inf=False):
    if isinstance(v, bool):
        raise InstanceError(f"{path}: field {field}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        s = v.strip().lower()
        if allow_inf and s in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            x = float(s)
        except ValueError:
            pass
        else:
            if math.isfinite(x) or allow_inf:
                return x
    raise InstanceError(f"{path}: field {field}: expected a decimal number, got {v!r}")


def _vector(path, field, v, size, allow_inf=False):
    if not isinstance(v, list):
        raise InstanceError(f"{path}: field {field}: expected a list of numbers")
    if len(v) != size:
        raise InstanceError(f"{path}: field {field}: expected {size} entries, got {len(v)}")
    return [_number(path, f"{field}[{i}]", x, allow_inf) for i, x in enumerate(v)]


def _labels(path, field, v):
    if not isinstance(v, list) or not v:
        raise InstanceError(f"{path}: field {field}: expected a nonempty list of labels")
    for i, x in enumerate(v):
        if not isinstance(x, str):
            raise InstanceError(f"{path}: field {field}[{i}]: labels must be strings")
    try:
        return Alphabet(v)
    except TiltgapError as exc:
        raise InstanceError(f"{path}: field {field}: {exc}") from None


def _measure(path, field, alphabet, v):
    w = _vector(path, field, v, alphabet.size)
    try:
        return DiscreteMeasure(alphabet, w)
    except TiltgapError as exc:
        raise InstanceError(f"{path}: field {field}: {exc}") from None


def load_instance(path) -> Instance:
    doc, digest = _read_json(path)
    if not isinstance(doc, dict):
        raise InstanceError(f"{path}: top level must be a JSON object")
    for key in ("alphabet", "reference", "models", "loss"):
        if key not in doc:
            raise InstanceError(f"{path}: missing required field {key!r}")
    alphabet = _labels(path, "'alphabet'", doc["alphabet"])
    models = _labels(path, "'models'", doc["models"])
    rows = doc["loss"]
    if not isinstance(rows, list) or len(rows) != models.size:
        raise InstanceError(
            f"{path}: field 'loss': expected {models.size} rows (one per model)"
        )
    table = [
        _vector(path, f"'loss'[{j}]", row, alphabet.size, allow_inf=True)
        for j, row in enumerate(rows)
    ]
    try:
        lm = LossModel(alphabet, models, table)
    except TiltgapError as exc:
        raise InstanceError(f"{path}: field 'loss': {exc}") from None
    reference = _measure(path, "'reference'", alphabet, doc["reference"])
    data = _measure(path, "'data'", alphabet, doc["data"]) if "data" in doc else None
    prior = _measure(path, "'prior'", models, doc["prior"]) if "prior" in doc else None
    return Instance(str(path), digest, lm, reference, data, prior)


def load_dataset(path, alphabet: Alphabet) -> tuple[Dataset, str]:
    doc, digest = _read_json(path)
    entries = doc.get("entries") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise InstanceError(f"{path}: field 'entries': expected a nonempty list of labels")
    idx = []
    for i, label in enumerate(entries):
        if not isinstance(label, str):
            raise InstanceError(f"{path}: field 'entries'[{i}]: labels must be strings")
        try:
            idx.append(alphabet.index(label))
        except TiltgapError:
            raise InstanceError(
                f"{path}: field 'entries'[{i}]: label {label!r} is not in the instance alphabet"
            ) from None
    return Dataset(alphabet, idx), digest


# -- report writer -----------------------------------------------------------


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if s == "-0":
        s = "0"
    return s


def _encode(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(k), ensure_ascii=False) + ": ")
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            out.append("[")
            for i, v in enumerate(items):
                _encode(v, indent, level + 1, out)
                if i < len(items) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(items):
            out.append(pad)
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    out: list[str] = []
    _encode(obj, indent, 0, out)
    out.append("\n")
    return "".join(out)


def parse_report_float(v) -> float:
    """Inverse of :func:`format_float` after ``json.loads``."""
    return float(v)
