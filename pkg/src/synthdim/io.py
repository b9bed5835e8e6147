"""CSV and manifest writers.

Floats are written with 17 significant digits so that a value read back
is bit-identical to the one written.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Dict, Iterable, List, Sequence

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return "" if value is None else str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write rows atomically (temp file then rename); returns ``path``."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    os.replace(tmp, path)
    return path


def read_csv(path) -> Dict[str, np.ndarray]:
    """Columns of a CSV written by :func:`write_csv`; numeric where possible."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols: Dict[str, np.ndarray] = {}
    for k, name in enumerate(header):
        raw = [r[k] for r in rows]
        try:
            cols[name] = np.array([float(v) if v != "" else np.nan for v in raw])
        except ValueError:
            cols[name] = np.array(raw, dtype=object)
    return cols


def pair_columns(n_modes: int) -> List[str]:
    """``P_n_m`` for ``n <= m`` in row-major upper-triangle order."""
    return [f"P_{n}_{m}" for n in range(1, n_modes + 1) for m in range(n, n_modes + 1)]


def write_json(path, payload) -> str:
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    os.replace(tmp, path)
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
