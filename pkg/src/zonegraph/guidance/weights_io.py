"""Versioned binary weight files with a JSON twin."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ShapeMismatch
from .network import ScorerModel, expected_shapes

MAGIC = b"ZGSCORE\x00"
VERSION = 1


def _manifest(model: ScorerModel) -> dict:
    names = list(expected_shapes(model.rounds))
    return {
        "version": VERSION,
        "rounds": model.rounds,
        "edge_weighting": model.edge_weighting,
        "hyper": model.hyper,
        "layers": [[k, list(model.arrays[k].shape)] for k in names],
    }


def save_weights(model: ScorerModel, path, json_twin: bool = True) -> None:
    path = Path(path)
    man = _manifest(model)
    head = json.dumps(man, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(head)))
        fh.write(head)
        for k, _ in man["layers"]:
            fh.write(np.ascontiguousarray(model.arrays[k], dtype="<f8").tobytes())
    if json_twin:
        twin = dict(man, arrays={k: model.arrays[k].tolist() for k, _ in man["layers"]})
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(twin, sort_keys=True))


def load_weights(path) -> ScorerModel:
    """Read a binary weight file, or its JSON twin if the name ends in .json."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        arrays = {k: np.array(doc["arrays"][k], dtype=np.float64).reshape(shape) for k, shape in doc["layers"]}
        return ScorerModel(arrays, doc["rounds"], doc["edge_weighting"], doc.get("hyper"))
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise ShapeMismatch("not a scorer weight file")
    version, n = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise ShapeMismatch(f"unsupported weight file version {version}")
    man = json.loads(raw[16:16 + n])
    pos = 16 + n
    arrays = {}
    for k, shape in man["layers"]:
        count = int(np.prod(shape))
        if pos + 8 * count > len(raw):
            raise ShapeMismatch(f"weight file truncated in {k}")
        arrays[k] = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * count
    if pos != len(raw):
        raise ShapeMismatch("trailing bytes in weight file")
    return ScorerModel(arrays, man["rounds"], man["edge_weighting"], man.get("hyper"))
