"""Numeric CSV input/output.

One shared format repo-wide: comma-separated numeric rows, no header,
floats written with 17 significant digits so write -> read -> write is
lossless for doubles.
"""

from __future__ import annotations

import os

import numpy as np

from .exceptions import ParseError

FLOAT_FMT = "%.17g"


def fmt_float(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_matrix(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    np.savetxt(path, a, delimiter=",", fmt=FLOAT_FMT)


def read_matrix(path) -> np.ndarray:
    """Read a numeric CSV as a 2-D array.

    Raises
    ------
    ParseError
        If the file is missing, empty, ragged, or non-numeric.
    """
    if not os.path.exists(path):
        raise ParseError(f"{path}: no such file")
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if a.size == 0:
        raise ParseError(f"{path}: empty file")
    return a


def read_square_matrix(path) -> np.ndarray:
    a = read_matrix(path)
    if a.shape[0] != a.shape[1]:
        raise ParseError(f"{path}: expected a square matrix, got {a.shape}")
    return a
