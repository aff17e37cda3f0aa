"""Model, weight and solution files (JSON) and CSV tables.

Floats are written with 17 significant digits so a write/read cycle
reproduces every double exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import ModelFileError
from .regularize import BandWeight, ConstantWeight, SampledWeight
from .solver import LremModel, Solution

MODEL_SCHEMA = "lrem-model/1"
WEIGHT_SCHEMA = "lrem-weight/1"
SOLUTION_SCHEMA = "lrem-solution/1"

_MODEL_FIELDS = {"schema", "n", "l", "k", "Gamma0", "Gamma1", "Psi", "Pi", "Sigma_zz", "var_labels", "shock_labels", "description"}


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "inf" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats; numeric rows stay on one line."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    return json.dumps(obj)


def _load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: top level must be an object")
    return doc


def _array(doc: dict, key: str, shape: tuple[int, int], where: str) -> np.ndarray:
    if key not in doc:
        raise ModelFileError(f"{where}: missing field '{key}'")
    try:
        a = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{where}: field '{key}' is not a numeric array") from exc
    if a.size == 0:
        a = a.reshape(shape)
    if a.ndim == 1 and shape[1] == 1 and a.size == shape[0]:
        a = a.reshape(shape)
    if a.ndim == 1 and a.size == shape[0] * shape[1]:
        a = a.reshape(shape)
    if a.shape != shape:
        raise ModelFileError(f"{where}: field '{key}' has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ModelFileError(f"{where}: field '{key}' has non-finite entries")
    return a


def _check_schema(doc: dict, expected: str, where: str) -> None:
    got = doc.get("schema")
    if got != expected:
        raise ModelFileError(f"{where}: field 'schema' is {got!r}, expected {expected!r}")


def model_to_dict(model: LremModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "n": model.n,
        "l": model.l,
        "k": model.k,
        "Gamma0": model.Gamma0,
        "Gamma1": model.Gamma1,
        "Psi": model.Psi,
        "Pi": model.Pi,
        "Sigma_zz": model.Sigma_zz,
        "var_labels": list(model.var_labels),
        "shock_labels": list(model.shock_labels),
        "description": model.description,
    }


def write_model(model: LremModel, path) -> None:
    Path(path).write_text(dumps(model_to_dict(model)) + "\n")


def model_from_dict(doc: dict, where: str = "model") -> LremModel:
    unknown = sorted(set(doc) - _MODEL_FIELDS)
    if unknown:
        raise ModelFileError(f"{where}: unknown fields {unknown}")
    _check_schema(doc, MODEL_SCHEMA, where)
    dims = {}
    for key in ("n", "l", "k"):
        v = doc.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ModelFileError(f"{where}: field '{key}' must be a nonnegative integer")
        dims[key] = v
    n, l, k = dims["n"], dims["l"], dims["k"]
    G0 = _array(doc, "Gamma0", (n, n), where)
    G1 = _array(doc, "Gamma1", (n, n), where)
    Psi = _array(doc, "Psi", (n, l), where)
    Pi = _array(doc, "Pi", (n, k), where)
    S = _array(doc, "Sigma_zz", (l, l), where) if doc.get("Sigma_zz") is not None else None
    try:
        return LremModel(
            Gamma0=G0,
            Gamma1=G1,
            Psi=Psi,
            Pi=Pi,
            Sigma_zz=S,
            var_labels=doc.get("var_labels"),
            shock_labels=doc.get("shock_labels"),
            description=str(doc.get("description", "")),
        )
    except ValueError as exc:
        raise ModelFileError(f"{where}: {exc}") from exc


def read_model(path) -> LremModel:
    return model_from_dict(_load_json(path), where=str(path))


def model_fingerprint(model: LremModel) -> str:
    """SHA-256 over the model's coefficient bytes."""
    h = hashlib.sha256()
    for a in (model.Gamma0, model.Gamma1, model.Psi, model.Pi, model.Sigma_zz):
        h.update(str(a.shape).encode())
        h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return h.hexdigest()


# -- weights ---------------------------------------------------------------

def weight_to_dict(spec) -> dict:
    if isinstance(spec, ConstantWeight):
        return {"schema": WEIGHT_SCHEMA, "variant": "constant", "W": spec.W}
    if isinstance(spec, BandWeight):
        return {
            "schema": WEIGHT_SCHEMA,
            "variant": "bands",
            "default": spec.default,
            "bands": [{"lo": b.lo, "hi": b.hi, "W": b.W} for b in spec.bands],
        }
    if isinstance(spec, SampledWeight):
        return {"schema": WEIGHT_SCHEMA, "variant": "sampled", "omega": spec.omega, "W": spec.W}
    raise TypeError(f"unsupported weight type {type(spec).__name__}")


def write_weight(spec, path) -> None:
    Path(path).write_text(dumps(weight_to_dict(spec)) + "\n")


def _square(doc: dict, key: str, where: str) -> np.ndarray:
    a = np.array(doc.get(key), dtype=float) if key in doc else None
    if a is None:
        raise ModelFileError(f"{where}: missing field '{key}'")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ModelFileError(f"{where}: field '{key}' must be a square matrix, got shape {a.shape}")
    return a


def weight_from_dict(doc: dict, where: str = "weight"):
    _check_schema(doc, WEIGHT_SCHEMA, where)
    variant = doc.get("variant")
    allowed = {
        "constant": {"schema", "variant", "W"},
        "bands": {"schema", "variant", "default", "bands"},
        "sampled": {"schema", "variant", "omega", "W"},
    }
    if variant not in allowed:
        raise ModelFileError(f"{where}: field 'variant' must be one of {sorted(allowed)}, got {variant!r}")
    unknown = sorted(set(doc) - allowed[variant])
    if unknown:
        raise ModelFileError(f"{where}: unknown fields {unknown}")
    try:
        if variant == "constant":
            return ConstantWeight(_square(doc, "W", where))
        if variant == "bands":
            default = _square(doc, "default", where)
            bands = []
            for i, b in enumerate(doc.get("bands", [])):
                tag = f"{where}: bands[{i}]"
                extra = sorted(set(b) - {"lo", "hi", "W", "period_quarters"})
                if extra:
                    raise ModelFileError(f"{tag}: unknown fields {extra}")
                if "period_quarters" in b:
                    p = b["period_quarters"]
                    if "lo" in b or "hi" in b:
                        raise ModelFileError(f"{tag}: give either lo/hi or period_quarters, not both")
                    if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, (int, float)) and x > 0 for x in p)):
                        raise ModelFileError(f"{tag}: period_quarters must be two positive periods")
                    short, long_ = sorted(float(x) for x in p)
                    lo, hi = 2.0 * math.pi / long_, 2.0 * math.pi / short
                else:
                    if "lo" not in b or "hi" not in b:
                        raise ModelFileError(f"{tag}: missing 'lo'/'hi'")
                    lo, hi = float(b["lo"]), float(b["hi"])
                bands.append((lo, hi, _square(b, "W", tag)))
            return BandWeight(bands=tuple(bands), default=default)
        return SampledWeight(omega=np.array(doc.get("omega"), dtype=float), W=np.array(doc.get("W"), dtype=float))
    except ModelFileError:
        raise
    except (ValueError, TypeError) as exc:
        raise ModelFileError(f"{where}: {exc}") from exc


def read_weight(path):
    return weight_from_dict(_load_json(path), where=str(path))


# -- solutions -------------------------------------------------------------

def solution_to_dict(model: LremModel, sol: Solution, diagnostics: dict, extras: dict | None = None) -> dict:
    doc = {
        "schema": SOLUTION_SCHEMA,
        "model_fingerprint": model_fingerprint(model),
        "provenance": sol.provenance,
        "var_labels": list(model.var_labels),
        "shock_labels": list(model.shock_labels),
        "Theta1": sol.Theta1,
        "impact": sol.impact,
        "eta_load": sol.eta_load,
    }
    if extras:
        doc.update(extras)
    doc["diagnostics"] = diagnostics
    return doc


def solution_from_dict(doc: dict, where: str = "solution") -> tuple[Solution, str]:
    """Rebuild a sunspot-free :class:`Solution`; returns it with the model fingerprint."""
    _check_schema(doc, SOLUTION_SCHEMA, where)
    try:
        T1 = np.array(doc["Theta1"], dtype=float)
        impact = np.array(doc["impact"], dtype=float)
        eta = np.array(doc["eta_load"], dtype=float)
    except KeyError as exc:
        raise ModelFileError(f"{where}: missing field {exc}") from exc
    n = T1.shape[0]
    if impact.ndim == 1:
        impact = impact.reshape(n, -1)
    l = impact.shape[1]
    eta = eta.reshape(-1, l) if eta.size else np.zeros((0, l))
    sol = Solution(
        Theta1=T1,
        impact=impact,
        eta_load=eta,
        sunspot_load=np.zeros((n, 0)),
        C=np.zeros((0, 0)),
        sunspot_eta_load=np.zeros((eta.shape[0], 0)),
        provenance=str(doc.get("provenance", "")),
        B=None,
    )
    return sol, str(doc.get("model_fingerprint", ""))


def read_solution(path):
    return solution_from_dict(_load_json(path), where=str(path))


# -- CSV -------------------------------------------------------------------

def csv_text(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def matrices_csv(named: dict[str, np.ndarray]) -> str:
    """Long-format table ``(matrix, i, j, value)``."""
    rows = []
    for name, M in named.items():
        M = np.atleast_2d(np.asarray(M, dtype=float))
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                rows.append((name, i + 1, j + 1, float(M[i, j])))
    return csv_text(("matrix", "i", "j", "value"), rows)
