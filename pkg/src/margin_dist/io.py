"""Reading datasets and models from disk, and writing output files atomically."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from .core import (Dataset, KernelModel, KernelSpec, LinearModel, Model,
                   ScalingParams)

FORMATS = ("csv", "sparse")
_FORMAT_ALIASES = {"csv": "csv", "dense_csv": "csv", "sparse": "sparse",
                   "sparse_index_value": "sparse", "libsvm": "sparse"}


class DataFormatError(ValueError):
    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.line = line


def normalize_format(fmt: str) -> str:
    try:
        return _FORMAT_ALIASES[fmt]
    except KeyError:
        raise ValueError(f"unknown data format {fmt!r}; expected one of {FORMATS}") from None


def coerce_labels(raw: np.ndarray) -> np.ndarray:
    """Map raw labels to -1/+1.

    Labels already in {-1, +1} are kept. Two other distinct values map
    larger -> +1. A single other value maps by its sign (positive -> +1).
    """
    raw = np.asarray(raw, dtype=float)
    values = np.unique(raw)
    if len(values) > 2:
        raise DataFormatError(f"expected at most two distinct labels, found {len(values)}: "
                              f"{values[:5].tolist()}")
    if set(values.tolist()) <= {-1.0, 1.0}:
        return raw.astype(int)
    if len(values) == 2:
        return np.where(raw == values[1], 1, -1)
    return np.where(raw > 0, 1, -1)


def _parse_float(token: str, path, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"cannot parse {token!r} as a number", path, lineno) from None
    if not np.isfinite(value):
        raise DataFormatError(f"non-finite value {token!r}", path, lineno)
    return value


def _read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows, labels = [], []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise DataFormatError("need at least one feature and a label", path, lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(f"expected {width} columns, got {len(row)}", path, lineno)
            values = [_parse_float(cell.strip(), path, lineno) for cell in row]
            rows.append(values[:-1])
            labels.append(values[-1])
    d = 0 if width is None else width - 1
    return np.array(rows, dtype=float).reshape(len(rows), d), np.array(labels, dtype=float)


def _read_sparse(path, n_features: Optional[int]) -> tuple[np.ndarray, np.ndarray]:
    entries, labels = [], []
    max_index = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_parse_float(tokens[0], path, lineno))
            row = {}
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise DataFormatError(f"expected index:value, got {tok!r}", path, lineno)
                try:
                    i = int(idx)
                except ValueError:
                    raise DataFormatError(f"bad feature index {idx!r}", path, lineno) from None
                if i < 1:
                    raise DataFormatError(f"feature indices are 1-based, got {i}", path, lineno)
                row[i - 1] = _parse_float(val, path, lineno)
                max_index = max(max_index, i)
            entries.append(row)
    d = max_index if n_features is None else n_features
    if max_index > d:
        raise DataFormatError(f"feature index {max_index} exceeds expected dimension {d}", path)
    X = np.zeros((len(entries), d))
    for r, row in enumerate(entries):
        for i, v in row.items():
            X[r, i] = v
    return X, np.array(labels, dtype=float)


def read_arrays(path, fmt: str = "csv", n_features: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Features and -1/+1 labels; empty files give zero-row arrays."""
    fmt = normalize_format(fmt)
    if fmt == "csv":
        X, raw = _read_csv(path)
    else:
        X, raw = _read_sparse(path, n_features)
    if raw.size == 0:
        return X, raw.astype(int)
    try:
        return X, coerce_labels(raw)
    except DataFormatError as exc:
        raise DataFormatError(str(exc), path) from None


def load_dataset(path, fmt: str = "csv", n_features: Optional[int] = None) -> Dataset:
    X, y = read_arrays(path, fmt, n_features)
    if X.shape[0] == 0:
        raise DataFormatError("no instances", path)
    return Dataset(X, y)


def model_to_dict(model: Model) -> dict:
    scaling = model.scaling.to_dict() if model.scaling is not None else None
    if isinstance(model, LinearModel):
        return {"type": "linear", "algorithm": model.algorithm, "w": model.w.tolist(),
                "bias_augmented": model.bias_augmented, "scaling": scaling}
    return {"type": "kernel", "algorithm": model.algorithm, "a": model.a.tolist(),
            "bias": model.bias, "kernel": model.kernel.to_dict(),
            "support": {"X": model.support.X.tolist(), "y": model.support.y.tolist()},
            "bias_augmented": model.bias_augmented, "scaling": scaling}


def model_from_dict(d: dict) -> Model:
    scaling = ScalingParams.from_dict(d["scaling"]) if d.get("scaling") else None
    common = dict(bias_augmented=bool(d.get("bias_augmented", False)), scaling=scaling,
                  algorithm=d.get("algorithm", "msvmav"))
    if d["type"] == "linear":
        return LinearModel(w=np.asarray(d["w"], dtype=float), **common)
    if d["type"] == "kernel":
        support = Dataset(np.asarray(d["support"]["X"], dtype=float),
                          np.asarray(d["support"]["y"], dtype=int))
        return KernelModel(a=np.asarray(d["a"], dtype=float), support=support,
                           kernel=KernelSpec.from_dict(d["kernel"]),
                           bias=float(d.get("bias", 0.0)), **common)
    raise ValueError(f"unknown model type {d['type']!r}")


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def save_model(model: Model, path) -> None:
    write_text_atomic(path, dump_json(model_to_dict(model)))


def load_model(path) -> Model:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
