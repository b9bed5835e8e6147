"""Input checks shared by the estimator wrappers and the CLI."""

from __future__ import annotations

from typing import List

import numpy as np
from sklearn.utils import check_array

from .exceptions import DomainError, TooFewLevelsError


def check_spectrum(eigs, min_levels: int = 1) -> np.ndarray:
    """Sorted, finite, 1-D float copy of ``eigs``."""
    e = check_array(np.asarray(eigs, dtype=float).ravel(), ensure_2d=False, dtype=float)
    if e.size < min_levels:
        raise TooFewLevelsError(f"need at least {min_levels} levels, got {e.size}")
    return np.sort(e)


def check_spectra(X, min_levels: int = 1) -> List[np.ndarray]:
    """Accept one spectrum (1-D), a 2-D stack, or a list of spectra of any length."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check_spectrum(row, min_levels) for row in X]
    if isinstance(X, np.ndarray) or (len(X) and np.isscalar(X[0])):
        return [check_spectrum(X, min_levels)]
    if not len(X):
        raise DomainError("no spectra given")
    return [check_spectrum(e, min_levels) for e in X]


def check_fraction(value: float, name: str, closed_low: bool = False) -> float:
    value = float(value)
    ok = (0 <= value <= 1) if closed_low else (0 < value <= 1)
    if not ok:
        raise DomainError(f"{name} must lie in {'[0' if closed_low else '(0'}, 1], got {value}")
    return value


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
