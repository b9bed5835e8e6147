"""scikit-learn style wrappers over the spectral and protocol functions.

The estimators take spectra (or lists of :class:`ModelParams`) as ``X`` so
they compose with :class:`sklearn.pipeline.Pipeline`::

    pipe = Pipeline([("eig", EnsembleSpectra(ensemble=ens)), ("r", LevelStatistics())])
    pipe.fit([params]).predict([params])
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, check_spectra
from .spectral import (
    CLEAN,
    DisorderEnsemble,
    classify_r,
    ensemble_spectra,
    heisenberg_time,
    r_statistic,
    sff_from_spectra,
    sff_theory,
)


class EnsembleSpectra(BaseEstimator, TransformerMixin):
    """Map model parameters to eigenvalue spectra, one row per realization.

    ``transform`` takes a list of :class:`ModelParams` and returns a list
    with one ``(realizations, D)`` array per entry.
    """

    def __init__(self, ensemble: DisorderEnsemble = CLEAN, n_jobs: Optional[int] = None):
        self.ensemble = ensemble
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [np.vstack(ensemble_spectra(p, self.ensemble, n_jobs=self.n_jobs)) for p in X]


def _flatten(X):
    # a list of stacks from EnsembleSpectra, or plain spectra
    if isinstance(X, list) and X and isinstance(X[0], np.ndarray) and X[0].ndim == 2:
        return X
    return [np.atleast_2d(e) for e in check_spectra(X)]


class LevelStatistics(BaseEstimator, TransformerMixin):
    """Mean consecutive-gap ratio and its random-matrix classification.

    Parameters
    ----------
    window : float
        Central fraction of each spectrum kept before computing gaps.
    degeneracy_tol : float, optional
        Gaps below this are dropped; defaults to ``1e-10`` times the
        spectral width.

    Attributes
    ----------
    mean_r_ : float
        Mean ratio over every spectrum passed to ``fit``.
    stderr_ : float
        Standard error across spectra (0 for a single spectrum).
    classification_ : str
    """

    def __init__(self, window: float = 0.8, degeneracy_tol: Optional[float] = None):
        self.window = window
        self.degeneracy_tol = degeneracy_tol

    def _per_spectrum(self, X):
        check_fraction(self.window, "window")
        return np.array(
            [
                r_statistic(e, self.degeneracy_tol, self.window).mean_r
                for stack in _flatten(X)
                for e in stack
            ]
        )

    def fit(self, X, y=None):
        r = self._per_spectrum(X)
        self.mean_r_ = float(r.mean())
        self.stderr_ = float(r.std(ddof=1) / np.sqrt(r.size)) if r.size > 1 else 0.0
        self.classification_ = classify_r(self.mean_r_)
        return self

    def transform(self, X):
        """Mean ratio of each spectrum, shape ``(n_spectra, 1)``."""
        return self._per_spectrum(X)[:, None]

    def predict(self, X):
        """Classification label per input; stacks are averaged first."""
        labels = []
        for stack in _flatten(X):
            r = np.mean([r_statistic(e, self.degeneracy_tol, self.window).mean_r for e in stack])
            labels.append(classify_r(r))
        return np.array(labels)


class SpectralFormFactor(BaseEstimator):
    """Ensemble-averaged form factor sampled on ``times``.

    ``fit`` stores the curve; ``predict`` evaluates the fitted spectra at
    new times; ``theory`` gives the random-matrix curve of the same
    dimension and Heisenberg time. The Heisenberg time is taken from the
    first spectrum passed to ``fit``.
    """

    def __init__(self, times=None):
        self.times = times

    def fit(self, X, y=None):
        spectra = [e for stack in _flatten(X) for e in stack]
        self.spectra_ = spectra
        self.dim_ = spectra[0].size
        self.heisenberg_time_ = heisenberg_time(spectra[0])
        t = np.geomspace(1e-2, 1e2, 200) * self.heisenberg_time_ if self.times is None else self.times
        self.times_ = np.asarray(t, dtype=float)
        self.values_ = sff_from_spectra(spectra, self.times_)
        return self

    def predict(self, times):
        check_is_fitted(self, "spectra_")
        return sff_from_spectra(self.spectra_, times)

    def theory(self, kind: str = "GOE"):
        check_is_fitted(self, "spectra_")
        return sff_theory(kind, self.dim_, self.heisenberg_time_, self.times_[self.times_ > 0]).values
