"""Eigendecomposition, level-spacing ratios and spectral form factors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.special import j1

from .basis import FockBasis, enumerate_basis
from .exceptions import (
    ConvergenceError,
    DegenerateSpectrumError,
    DomainError,
    TooFewLevelsError,
)
from .hamiltonian import ModelParams, build_hamiltonian, onsite_field_diagonal

R_POISSON = 0.386
R_GOE = 0.531
R_GUE = 0.600
REFERENCE_R = {"integrable": R_POISSON, "GOE": R_GOE, "GUE": R_GUE}
# mean_r farther than this from every reference constant is "intermediate"
CLASSIFICATION_TOL = 0.04
MAX_DROPPED_FRACTION = 0.2
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def diagonalize(hamiltonian: np.ndarray) -> Spectrum:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises :class:`ConvergenceError` if LAPACK fails or the reconstruction
    residual ``max|H V - V diag(E)|`` exceeds ``1e-9 * max|H|``.
    """
    h = np.asarray(hamiltonian)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {h.shape}")
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    scale = np.max(np.abs(h)) if h.size else 0.0
    residual = np.max(np.abs(h @ evecs - evecs * evals)) if h.size else 0.0
    if residual > RESIDUAL_TOL * max(scale, np.finfo(float).tiny):
        raise ConvergenceError(
            f"eigendecomposition residual {residual:.3e} above tolerance", residual=residual
        )
    return Spectrum(evals, evecs)


def classify_r(mean_r: float, tol: float = CLASSIFICATION_TOL) -> str:
    """Label a mean ratio by the nearest reference constant, or ``intermediate``."""
    label = min(REFERENCE_R, key=lambda k: abs(mean_r - REFERENCE_R[k]))
    return label if abs(mean_r - REFERENCE_R[label]) <= tol else "intermediate"


@dataclass(frozen=True)
class RStatResult:
    mean_r: float
    n_spacings_used: int
    n_degenerate_dropped: int
    classification: str
    stderr: float = float("nan")
    n_realizations: int = 1


def _window(eigs: np.ndarray, window: float) -> np.ndarray:
    if not 0.0 < window <= 1.0:
        raise DomainError(f"window must lie in (0, 1], got {window}")
    cut = int(np.floor(eigs.size * (1.0 - window) / 2.0 + 1e-9))
    return eigs[cut : eigs.size - cut]


def _ratios(eigs, degeneracy_tol: Optional[float], window: float):
    e = np.sort(np.asarray(eigs, dtype=float).ravel())
    if e.size < 4:
        raise TooFewLevelsError(f"need at least 4 eigenvalues, got {e.size}")
    if degeneracy_tol is None:
        degeneracy_tol = 1e-10 * (e[-1] - e[0])
    e = _window(e, window)
    spacings = np.diff(e)
    keep = spacings >= degeneracy_tol if degeneracy_tol > 0 else spacings > 0
    dropped = int(spacings.size - keep.sum())
    if spacings.size == 0 or dropped > MAX_DROPPED_FRACTION * spacings.size:
        raise DegenerateSpectrumError(
            f"{dropped} of {spacings.size} spacings are degenerate; refusing to classify"
        )
    s = spacings[keep]
    if s.size < 3:
        raise TooFewLevelsError(f"only {s.size} non-degenerate spacings remain")
    r = np.minimum(s[1:], s[:-1]) / np.maximum(s[1:], s[:-1])
    return r, dropped


def r_statistic(
    eigs: Sequence[float],
    degeneracy_tol: Optional[float] = None,
    window: float = 0.8,
) -> RStatResult:
    """Mean ratio of consecutive level spacings.

    Parameters
    ----------
    eigs : array_like
        Eigenvalues in any order.
    degeneracy_tol : float, optional
        Spacings below this are dropped and counted. Defaults to
        ``1e-10`` times the spectral width.
    window : float
        Fraction of the sorted spectrum kept, centred (edges excluded).

    Returns
    -------
    RStatResult
    """
    r, dropped = _ratios(eigs, degeneracy_tol, window)
    mean_r = float(r.mean())
    return RStatResult(
        mean_r=mean_r,
        n_spacings_used=int(r.size + 1),
        n_degenerate_dropped=dropped,
        classification=classify_r(mean_r),
        stderr=float(r.std(ddof=1) / np.sqrt(r.size)) if r.size > 1 else float("nan"),
    )


@dataclass(frozen=True)
class DisorderEnsemble:
    """On-site disorder ``delta_n ~ U[-W/2, W/2]`` entering as ``-sum delta_n n_n``.

    Realization ``r`` draws from a stream seeded by ``(seed, r)``, so the
    fields do not depend on evaluation order.
    """

    amplitude: float = 0.3
    realizations: int = 50
    seed: int = 0
    kind: str = "onsite_uniform"

    def __post_init__(self):
        if self.kind != "onsite_uniform":
            raise DomainError(f"unsupported disorder kind {self.kind!r}")
        if not self.amplitude >= 0:
            raise DomainError(f"disorder amplitude must be >= 0, got {self.amplitude}")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise DomainError(f"realizations must be a positive integer, got {self.realizations}")

    def fields(self, realization: int, n_modes: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([int(self.seed), int(realization)]))
        half = 0.5 * self.amplitude
        return rng.uniform(-half, half, size=n_modes)


CLEAN = DisorderEnsemble(amplitude=0.0, realizations=1)


def _realization_eigs(h0, basis, ensemble, r, vectors):
    h = h0.copy()
    if ensemble.amplitude > 0:
        h[np.diag_indices_from(h)] += onsite_field_diagonal(
            basis, ensemble.fields(r, basis.n_modes)
        )
    if vectors:
        return diagonalize(h)
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc


def ensemble_spectra(
    params: ModelParams,
    ensemble: DisorderEnsemble,
    basis: Optional[FockBasis] = None,
    n_jobs: Optional[int] = None,
    eigenvectors: bool = False,
) -> List:
    """Eigenvalues (or :class:`Spectrum` objects) for every disorder realization."""
    if basis is None:
        basis = enumerate_basis(params.n_modes, params.n_photons)
    h0 = build_hamiltonian(params, basis)
    tasks = (
        delayed(_realization_eigs)(h0, basis, ensemble, r, eigenvectors)
        for r in range(ensemble.realizations)
    )
    return Parallel(n_jobs=n_jobs, prefer="threads")(tasks)


def _warn_if_real(params: ModelParams, basis: Optional[FockBasis] = None) -> None:
    h = build_hamiltonian(params, basis)
    if np.max(np.abs(h.imag), initial=0.0) < 1e-12:
        warnings.warn(
            "GUE classification reported for a real Hamiltonian, which cannot be GUE",
            RuntimeWarning,
            stacklevel=3,
        )


def r_statistic_ensemble(
    params: ModelParams,
    ensemble: DisorderEnsemble,
    window: float = 0.8,
    degeneracy_tol: Optional[float] = None,
    n_jobs: Optional[int] = None,
) -> RStatResult:
    """Disorder-averaged mean spacing ratio; ``stderr`` is over realizations."""
    basis = enumerate_basis(params.n_modes, params.n_photons)
    spectra = ensemble_spectra(params, ensemble, basis, n_jobs=n_jobs)
    per = [r_statistic(e, degeneracy_tol, window) for e in spectra]
    means = np.array([p.mean_r for p in per])
    mean_r = float(means.mean())
    result = RStatResult(
        mean_r=mean_r,
        n_spacings_used=int(sum(p.n_spacings_used for p in per)),
        n_degenerate_dropped=int(sum(p.n_degenerate_dropped for p in per)),
        classification=classify_r(mean_r),
        stderr=float(means.std(ddof=1) / np.sqrt(means.size)) if means.size > 1 else per[0].stderr,
        n_realizations=len(per),
    )
    if result.classification == "GUE":
        _warn_if_real(params, basis)
    return result


@dataclass(frozen=True)
class SffCurve:
    times: np.ndarray
    values: np.ndarray
    dim: int
    heisenberg_time: float
    stderr: Optional[np.ndarray] = None


def heisenberg_time(eigs: Sequence[float]) -> float:
    """``2 pi`` over the mean level spacing of a spectrum."""
    e = np.sort(np.asarray(eigs, dtype=float))
    if e.size < 2 or e[-1] == e[0]:
        raise DomainError("Heisenberg time needs at least two distinct levels")
    return float(2.0 * np.pi * (e.size - 1) / (e[-1] - e[0]))


def _check_times(times, strict=False) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0 or not np.all(np.isfinite(t)):
        raise DomainError("times must be a non-empty finite vector")
    if np.any(t < 0) or (strict and np.any(t <= 0)):
        raise DomainError("times must be positive")
    if np.any(np.diff(t) < 0):
        raise DomainError("times must be sorted ascending")
    return t


def spectral_trace(eigs: Sequence[float], times) -> np.ndarray:
    """``Tr exp(-i H t) = sum_k exp(-i E_k t)`` for each time."""
    e = np.asarray(eigs, dtype=float)
    t = np.asarray(times, dtype=float)
    return np.exp(-1j * np.outer(t, e)).sum(axis=1)


def sff_from_spectra(spectra: Sequence[Sequence[float]], times) -> np.ndarray:
    """Average of ``|Tr exp(-i H t)|^2 / D^2`` over a list of spectra."""
    t = _check_times(times)
    acc = np.zeros(t.size)
    for e in spectra:
        e = np.asarray(e, dtype=float)
        acc += np.abs(spectral_trace(e, t)) ** 2 / e.size**2
    return acc / len(spectra)


def sff_exact(
    params: ModelParams,
    ensemble: DisorderEnsemble,
    times,
    n_jobs: Optional[int] = None,
) -> SffCurve:
    """Disorder-averaged spectral form factor by exact diagonalization.

    The Heisenberg time is taken from the clean (disorder-free) spectrum.
    """
    t = _check_times(times)
    basis = enumerate_basis(params.n_modes, params.n_photons)
    spectra = ensemble_spectra(params, ensemble, basis, n_jobs=n_jobs)
    clean = np.linalg.eigvalsh(build_hamiltonian(params, basis))
    return SffCurve(t, sff_from_spectra(spectra, t), basis.dim, heisenberg_time(clean))


def _ramp(kind: str, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    early = x <= 1.0
    if kind == "GOE":
        xe, xl = x[early], x[~early]
        out[early] = 2.0 * xe - xe * np.log1p(2.0 * xe)
        out[~early] = 2.0 - xl * np.log((2.0 * xl + 1.0) / (2.0 * xl - 1.0))
    elif kind == "GUE":
        out[early] = x[early]
        out[~early] = 1.0
    else:
        raise DomainError(f"kind must be 'GOE' or 'GUE', got {kind!r}")
    return out


def sff_theory(kind: str, dim: int, t_h: float, times) -> SffCurve:
    """Random-matrix form factor ``r(t)^2 + b(t / t_H) / D``.

    ``r(t) = t_H J_1(4 D t / t_H) / (2 D t)`` is the disconnected part and
    ``b`` the GOE or GUE ramp-plateau function.
    """
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    if not t_h > 0:
        raise DomainError(f"t_H must be positive, got {t_h}")
    t = _check_times(times, strict=True)
    x = t / t_h
    arg = 4.0 * dim * x
    r = j1(arg) * 2.0 / arg
    return SffCurve(t, r**2 + _ramp(kind, x) / dim, dim, float(t_h))
