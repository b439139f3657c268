"""CSV helpers shared by the command-line tools."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """Bad user input: unreadable file, malformed CSV, inconsistent dimensions."""


def read_samples(path, header: bool = False) -> np.ndarray:
    """Comma-separated floats, one sample per row; ``header`` skips the first line."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{p}: no such file")
    rows: list[list[float]] = []
    width = None
    with p.open(newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                vals = [float(f) for f in rec]
            except ValueError:
                raise InputError(f"{p}:{lineno}: non-numeric field in {rec!r}") from None
            if not all(np.isfinite(vals)):
                raise InputError(f"{p}:{lineno}: non-finite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputError(f"{p}:{lineno}: row has {len(vals)} columns, expected {width}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{p}: no samples")
    return np.array(rows, dtype=np.float64)


def format_row(values) -> str:
    # repr keeps full precision
    return ",".join(repr(float(v)) for v in values)


def write_samples(path, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(x):
            fh.write(format_row(row) + "\n")
