"""Frequency-entanglement diagnostics for few-photon states.

Entropies use the natural logarithm throughout.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .exceptions import DomainError, SectorError


def _entropy(weights: np.ndarray) -> float:
    w = np.asarray(weights, dtype=float)
    w = w[w > 1e-300]
    return float(-(w * np.log(w)).sum())


def _normalised_pair_matrix(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DomainError(f"P must be a square matrix, got shape {P.shape}")
    total = np.trace(P) + np.triu(P, 1).sum()
    if not total > 0:
        raise DomainError("two-photon probabilities sum to zero")
    return P / total


def marginals(P: np.ndarray) -> np.ndarray:
    """Single-photon marginals ``P_n = P_nn + sum_{m != n} P_nm / 2``."""
    P = np.asarray(P, dtype=float)
    return np.diag(P) + 0.5 * (P.sum(axis=1) - np.diag(P))


def degree_of_independence(P: np.ndarray, P_marginal: np.ndarray = None) -> float:
    """Ratio ``sum_n P_nn / sum_n P_n^2``.

    Equals 1 for two independent, identically distributed photons and
    exceeds 1 when the photons bunch on the diagonal. Probabilities are
    renormalised first, so global loss does not change the value.
    """
    P = _normalised_pair_matrix(P)
    Pm = marginals(P) if P_marginal is None else np.asarray(P_marginal, float)
    if P_marginal is not None:
        Pm = Pm / Pm.sum()
    denom = float(np.sum(Pm**2))
    if denom == 0.0:
        raise DomainError("marginal probabilities vanish")
    return float(np.trace(P) / denom)


def weighted_di(P: np.ndarray, params=None) -> float:
    """Diagonal-weighted mean distance from the lattice centre, in FSR units.

    ``sum_n P_nn |n - (N+1)/2| / sum_n P_nn``. The maximally separated
    state ``(|1,1> + |N,N>)/sqrt 2`` gives ``(N-1)/2``. ``params`` (a
    ``ModelParams`` or a mode count) is optional and only checked against
    the size of ``P``.
    """
    diag = np.diag(np.asarray(P, dtype=float))
    n = diag.size
    if params is not None:
        expected = getattr(params, "n_modes", params)
        if int(expected) != n:
            raise DomainError(f"P is {n}x{n} but the model has {expected} modes")
    weight = diag.sum()
    if not weight > 0:
        raise DomainError("weighted DI is undefined without diagonal weight")
    dist = np.abs(np.arange(1, n + 1) - (n + 1) / 2.0)
    return float(diag @ dist / weight)


def stable_value(series, window: float = 0.25) -> Tuple[float, float]:
    """Mean and standard deviation over the trailing ``window`` fraction."""
    x = np.asarray(series, dtype=float).ravel()
    if not 0 < window <= 1:
        raise DomainError(f"window must lie in (0, 1], got {window}")
    k = int(round(window * x.size))
    if k == 0:
        raise DomainError("stable-value window is empty")
    tail = x[-k:]
    return float(tail.mean()), float(tail.std())


def two_photon_amplitude(state) -> np.ndarray:
    """Symmetric first-quantised amplitude ``psi`` with unit Frobenius norm.

    A basis amplitude ``c`` on ``|1_n 1_m>`` is split as
    ``psi_nm = psi_mn = c / sqrt 2``; ``c`` on ``|2_n>`` gives ``psi_nn = c``.
    """
    basis = state.basis
    if basis.n_photons != 2:
        raise SectorError(f"two-photon amplitude needs p = 2, got p = {basis.n_photons}")
    psi = np.zeros((basis.n_modes, basis.n_modes), dtype=complex)
    modes = [np.flatnonzero(row) for row in basis.states]
    for c, occupied in zip(state.amplitudes, modes):
        if occupied.size == 1:
            psi[occupied[0], occupied[0]] = c
        else:
            i, j = occupied
            psi[i, j] = psi[j, i] = c / np.sqrt(2.0)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise DomainError("zero state has no amplitude")
    return psi / norm


def photon_entanglement_entropy(amp) -> float:
    """Von Neumann entropy of the one-photon reduced state.

    ``amp`` is a symmetric ``psi`` matrix or a two-photon ``StateVector``.
    Note that symmetrised product states such as ``a_1^dag a_2^dag |0>``
    carry entropy ``ln 2`` under this convention.
    """
    psi = two_photon_amplitude(amp) if hasattr(amp, "basis") else np.asarray(amp, dtype=complex)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise DomainError("amplitude must be a square matrix")
    if np.max(np.abs(psi - psi.T), initial=0.0) > 1e-10:
        raise DomainError("two-photon amplitude must be symmetric")
    psi = psi / np.linalg.norm(psi)
    lam = np.linalg.svd(psi, compute_uv=False) ** 2
    return _entropy(lam)


def half_chain_entropy(state, cut: int = None) -> float:
    """Entanglement entropy between modes ``1..cut`` and ``cut+1..N``.

    ``cut`` defaults to ``N // 2``.
    """
    basis = state.basis
    n = basis.n_modes
    cut = n // 2 if cut is None else int(cut)
    if not 1 <= cut < n:
        raise DomainError(f"cut must lie in 1..{n - 1}, got {cut}")
    _, left = np.unique(basis.states[:, :cut], axis=0, return_inverse=True)
    _, right = np.unique(basis.states[:, cut:], axis=0, return_inverse=True)
    left, right = left.ravel(), right.ravel()
    m = np.zeros((left.max() + 1, right.max() + 1), dtype=complex)
    m[left, right] = state.amplitudes
    s = np.linalg.svd(m, compute_uv=False) ** 2
    total = s.sum()
    if total == 0:
        raise DomainError("zero state has no entropy")
    return _entropy(s / total)


def three_photon_correlation(state) -> np.ndarray:
    """Fully symmetric tensor ``P[n, m, k]`` of three-photon detection probabilities.

    ``P_nmk = |<0| a_n a_m a_k |psi>|^2 / prod(occupation!)``, which is the
    squared basis amplitude, copied to every index permutation. Summed over
    ``n <= m <= k`` it gives the squared norm.
    """
    basis = state.basis
    if basis.n_photons != 3:
        raise SectorError(f"three-photon correlation needs p = 3, got p = {basis.n_photons}")
    n = basis.n_modes
    P = np.zeros((n, n, n))
    probs = np.abs(state.amplitudes) ** 2
    for occ, prob in zip(basis.states, probs):
        idx = np.repeat(np.arange(n), occ)
        a, b, c = idx
        for perm in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
            P[perm] = prob
    return P

