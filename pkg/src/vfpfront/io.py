"""Structured-text persistence: JSON documents with 17-significant-digit floats,
CSV diagnostics, front files and kinetic checkpoints."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .front import FrontProfile, FrontReport, profile_from_density
from .model import ModelParams
from .thermo import Coexistence

FRONT_FORMAT = "vfpfront-front"
CHECKPOINT_FORMAT = "vfpfront-checkpoint"
FORMAT_VERSION = 1


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            # numeric arrays stay on one line
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]" if items else "[]"
    if isinstance(obj, dict):
        items = [pad + json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}" if items else "{}"
    if dataclasses.is_dataclass(obj):
        return _encode(dataclasses.asdict(obj), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a valid document ({exc})") from exc


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            if dataclasses.is_dataclass(row):
                row = [getattr(row, c) for c in columns]
            wr.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- params -----------------------------------------------------------------


def params_to_dict(params: ModelParams) -> dict:
    d = dataclasses.asdict(params)
    d["kernel_kind"] = params.kernel_kind.value
    return d


def params_from_dict(d: dict) -> ModelParams:
    names = {f.name for f in dataclasses.fields(ModelParams)}
    unknown = set(d) - names
    if unknown:
        raise ValidationError(f"unknown parameter keys: {sorted(unknown)}")
    d = dict(d)
    for key in ("beta", "n", "kernel_radius", "half_width", "dt"):
        if key in d:
            d[key] = float(d[key])
    return ModelParams(**d)


# -- fronts -----------------------------------------------------------------


def front_to_dict(front: FrontProfile) -> dict:
    doc = {
        "format": FRONT_FORMAT,
        "version": FORMAT_VERSION,
        "params": params_to_dict(front.params),
        "rho_plus": front.rho_plus,
        "rho_minus": front.rho_minus,
        "el_constant": front.el_constant,
        "z": front.z,
        "w1": front.w1,
    }
    if front.report is not None:
        rep = dataclasses.asdict(front.report)
        rep["energy_history"] = [list(p) for p in front.report.energy_history]
        doc["report"] = rep
    return doc


def front_from_dict(doc: dict) -> FrontProfile:
    if doc.get("format") != FRONT_FORMAT:
        raise ValidationError(f"not a front document (format = {doc.get('format')!r})")
    params = params_from_dict(doc["params"])
    grid = params.grid()
    w1 = np.array(doc["w1"], dtype=float)
    if w1.shape != grid.z.shape:
        raise ValidationError(f"front has {w1.size} nodes but params give nz = {grid.nz}")
    rp, rm = float(doc["rho_plus"]), float(doc["rho_minus"])
    coex = Coexistence(rp, rm, (rp - rm) / (rp + rm))
    front = profile_from_density(w1, params, grid, coex=coex)
    if front.el_constant != float(doc["el_constant"]):
        front = dataclasses.replace(front, el_constant=float(doc["el_constant"]))
    if "report" in doc:
        rep = dict(doc["report"])
        rep["energy_history"] = tuple(tuple(p) for p in rep.get("energy_history", ()))
        front = dataclasses.replace(front, report=FrontReport(**rep))
    return front


def save_front(front: FrontProfile, path) -> Path:
    return write_json(path, front_to_dict(front))


def load_front(path) -> FrontProfile:
    return front_from_dict(read_json(path))


# -- kinetic checkpoints ----------------------------------------------------


def save_checkpoint(state, path) -> Path:
    """Full coefficient array, time and the front it lives on."""
    c = state.coeffs
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": FORMAT_VERSION,
        "time": state.time,
        "order": state.model.order,
        "shape": list(c.shape),
        "front": front_to_dict(state.front),
        "coeffs": [[row for row in species] for species in c.tolist()],
    }
    return write_json(path, doc)


def load_checkpoint(path):
    from .kinetic import KineticModel, KineticState

    doc = read_json(path)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValidationError(f"not a checkpoint (format = {doc.get('format')!r})")
    front = front_from_dict(doc["front"])
    model = KineticModel(front, int(doc["order"]))
    coeffs = np.array(doc["coeffs"], dtype=float)
    if list(coeffs.shape) != list(doc["shape"]) or coeffs.shape != model.shape:
        raise ValidationError(f"checkpoint coefficients have shape {coeffs.shape}, expected {model.shape}")
    return KineticState(coeffs=coeffs, time=float(doc["time"]), model=model)
