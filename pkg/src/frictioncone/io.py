"""Estimate documents, CSV tables and atomic file writes.

Floats are written with ``repr`` so a document read back is bit-identical,
and every writer emits fields in a fixed order so reruns diff cleanly.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .estimator import labelled_cone
from .geometry import Plane
from .wrench import Mode, PolyhedralCone

ESTIMATE_FORMAT = "friction-cone-estimate/1"


class SchemaError(ValueError):
    pass


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(x):
    if dataclasses.is_dataclass(x):
        return {f.name: _plain(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Mode):
        return x.value
    return x


def config_hash(cfg) -> str:
    blob = json.dumps(_plain(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def estimate_document(cone: PolyhedralCone, seed: int, config, plane: Plane | None = None,
                      samples=None, extra: dict | None = None) -> dict:
    doc = {
        "format": ESTIMATE_FORMAT,
        "seed": int(seed),
        "config_hash": config_hash(config),
        "edges": _plain(cone.edges),
        "face_labels": [m.value for m in cone.face_labels],
        "plane": None if plane is None else {"normal": _plain(plane.normal),
                                             "point": _plain(plane.point)},
    }
    if samples is not None:
        doc["samples"] = _plain(np.asarray(samples))
    if extra:
        doc["info"] = _plain(extra)
    return doc


def dumps_estimate(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def write_estimate(path, doc: dict):
    atomic_write(path, dumps_estimate(doc))


def read_estimate(path) -> tuple[PolyhedralCone, dict]:
    """Labelled cone and the raw document; raises FileNotFoundError / SchemaError."""
    path = Path(path)
    with path.open() as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not JSON ({exc})") from exc
    if doc.get("format") != ESTIMATE_FORMAT:
        raise SchemaError(f"{path}: unknown format {doc.get('format')!r}")
    try:
        edges = np.array(doc["edges"], dtype=float)
        labels = [Mode(v) for v in doc["face_labels"]]
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if edges.ndim != 2 or edges.shape[1] != 3:
        raise SchemaError(f"{path}: edges must be an n x 3 list")
    cone = labelled_cone(edges, labels) if labels else PolyhedralCone(edges)
    return cone, doc


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, Mode):
        return v.value
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        if len(r) != len(columns):
            raise SchemaError(f"row has {len(r)} cells, header has {len(columns)}")
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, columns, rows):
    atomic_write(path, csv_text(columns, rows))


def read_csv(path) -> tuple[list, list]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return header, rows
