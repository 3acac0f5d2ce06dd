"""Plain-text matrix files: a ``rows cols`` header line, then one row per line."""
from __future__ import annotations

from typing import TextIO

import numpy as np

from .errors import ShapeError


def dumps(a: np.ndarray) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in a]
    return "\n".join(lines) + "\n"


def loads(text: str) -> np.ndarray:
    tokens = text.split()
    if len(tokens) < 2:
        raise ShapeError("matrix file is missing its 'rows cols' header")
    rows, cols = int(tokens[0]), int(tokens[1])
    values = tokens[2:]
    if len(values) != rows * cols:
        raise ShapeError(f"header says {rows}x{cols} but file holds {len(values)} values")
    return np.array([float(v) for v in values], dtype=np.float64).reshape(rows, cols)


def write(a: np.ndarray, out: TextIO) -> None:
    out.write(dumps(a))


def read(path: str) -> np.ndarray:
    with open(path) as f:
        return loads(f.read())
