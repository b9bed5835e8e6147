"""Interferometric readout of the spectral form factor.

Two photons at frequencies ``alpha`` and ``beta`` enter the two ports of a
balanced beam splitter. The reflected arm passes through the ring, the
transmitted arm through a delay line that adds a phase ``delta`` per photon,
and a second beam splitter recombines them. Coincidence probabilities at the
output depend on the diagonal evolution amplitudes ``z_ab = <ab|U(t)|ab>``,
``z_a = <a|U(t)|a>`` and ``z_b``, so measuring them at two delay settings
and solving for ``z_ab`` gives ``Tr U(t)`` one pair at a time.

Probabilities here come from the exact beam-splitter algebra, with
``a_in^dag -> (a_r^dag + a_t^dag)/sqrt 2`` and
``a_u^dag -> (a_r^dag - a_t^dag)/sqrt 2`` at both splitters. Photons that the
ring scatters to other frequencies end up in a lumped ``other`` outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .basis import FockBasis, enumerate_basis
from .exceptions import CalibrationError, DomainError, InversionError, SectorError
from .hamiltonian import ModelParams, build_hamiltonian, onsite_field_diagonal
from .spectral import SffCurve, Spectrum, _check_times, diagonalize, heisenberg_time

DELAYS = (0.0, 0.5 * np.pi)
PAIR_OUTCOMES = ("both_r", "both_t", "alpha_r_beta_t", "beta_r_alpha_t", "other")
SINGLE_OUTCOMES = ("r", "t", "other")
EXACT_TOL = 1e-8
N_BOOTSTRAP = 50


@dataclass(frozen=True)
class ProtocolAmplitudes:
    """Diagonal evolution amplitudes at one time.

    ``pair[a, b] = pair[b, a] = <ab|U(t)|ab>`` over the normalised two-photon
    Fock states; ``single[a] = <a|U(t)|a>`` when a one-photon spectrum was
    supplied.
    """

    pair: np.ndarray
    single: Optional[np.ndarray] = None

    def trace(self) -> complex:
        return complex(np.triu(self.pair).sum())


def _diagonal_amplitudes(spectrum: Spectrum, times: np.ndarray) -> np.ndarray:
    weights = np.abs(spectrum.eigenvectors) ** 2
    return np.exp(-1j * np.outer(times, spectrum.eigenvalues)) @ weights.T


def pair_mode_indices(basis: FockBasis) -> Tuple[np.ndarray, np.ndarray]:
    """0-based ``(alpha, beta)`` with ``alpha <= beta`` for each two-photon state."""
    if basis.n_photons != 2:
        raise SectorError(f"pair indices need p = 2, got p = {basis.n_photons}")
    first = np.argmax(basis.states > 0, axis=1)
    last = basis.n_modes - 1 - np.argmax(basis.states[:, ::-1] > 0, axis=1)
    return first, last


def unitary_diagonal_elements(
    spectrum: Spectrum,
    basis: FockBasis,
    t: float,
    single_spectrum: Optional[Spectrum] = None,
) -> ProtocolAmplitudes:
    """``<s|exp(-iHt)|s>`` for every Fock state ``s`` via the eigenbasis.

    >>> from synthdim.hamiltonian import ModelParams, build_hamiltonian
    >>> b = enumerate_basis(3, 2)
    >>> spec = diagonalize(build_hamiltonian(ModelParams(3, 2, interaction=1.0), b))
    >>> amps = unitary_diagonal_elements(spec, b, 0.0)
    >>> round(amps.trace().real, 12)
    6.0
    """
    if spectrum.dim != basis.dim:
        raise SectorError("spectrum and basis dimensions differ")
    a, b = pair_mode_indices(basis)
    z = _diagonal_amplitudes(spectrum, np.array([float(t)]))[0]
    pair = np.zeros((basis.n_modes, basis.n_modes), dtype=complex)
    pair[a, b] = z
    pair[b, a] = z
    single = None
    if single_spectrum is not None:
        if single_spectrum.dim != basis.n_modes:
            raise SectorError("single-photon spectrum must have dimension N")
        single = _diagonal_amplitudes(single_spectrum, np.array([float(t)]))[0]
    return ProtocolAmplitudes(pair, single)


def single_photon_probabilities(z, delay: float = 0.0) -> np.ndarray:
    """``(P_r, P_t, P_other)`` for one photon through the interferometer."""
    z = np.asarray(z, dtype=complex)
    ref = np.exp(1j * delay)
    p_r = np.abs(z + ref) ** 2 / 4.0
    p_t = np.abs(z - ref) ** 2 / 4.0
    return np.stack([p_r, p_t, 1.0 - p_r - p_t], axis=-1)


def _pair_channels(z_a, z_b, delay, same_mode):
    """Scale ``c`` and offset ``w`` with ``P = c |z_ab - w|^2`` per coincidence outcome."""
    z_a, z_b = np.asarray(z_a, complex), np.asarray(z_b, complex)
    same = np.broadcast_to(np.asarray(same_mode, bool), np.broadcast(z_a, z_b).shape)
    e1, e2 = np.exp(1j * np.asarray(delay)), np.exp(2j * np.asarray(delay))
    diff, tot = e1 * (z_a - z_b), e1 * (z_a + z_b)
    w = np.stack([diff + e2, -diff + e2, -tot - e2, tot - e2], axis=-1)
    c = np.broadcast_to(np.full(4, 1.0 / 16.0), w.shape).copy()
    if np.any(same):
        # Hong-Ou-Mandel input: |z_ab -+ e^{2i delta}|^2 only, split outcome in slot 2
        w_same = np.stack([e2, e2, -e2, np.zeros_like(e2)], axis=-1)
        w[same] = np.broadcast_to(w_same, w.shape)[same]
        c[same] = np.array([1 / 8, 1 / 8, 1 / 4, 0.0])
    return c, w


def bs_outcome_probabilities(z_pair, z_a, z_b, delay: float = 0.0, same_mode: bool = False) -> np.ndarray:
    """Outcome probabilities ordered as :data:`PAIR_OUTCOMES`.

    For ``same_mode`` (``alpha = beta``) the two split outcomes coincide;
    their joint probability sits in the ``alpha_r_beta_t`` slot and
    ``beta_r_alpha_t`` is zero.

    >>> bs_outcome_probabilities(1, 1, 1).round(12)
    array([0., 0., 1., 0., 0.])
    """
    c, w = _pair_channels(z_a, z_b, delay, same_mode)
    z = np.asarray(z_pair, complex)[..., None]
    p = c * np.abs(z - w) ** 2
    return np.concatenate([p, 1.0 - p.sum(axis=-1, keepdims=True)], axis=-1)


def _calibrate(p_r0, p_t0, p_r90, p_t90):
    return (np.asarray(p_r0) - p_t0) + 1j * (np.asarray(p_r90) - p_t90)


def calibrate_single_photon(
    P_r_0: float, P_0_t: float, P_r_pi2: float, P_0_t_pi2: float, tol: float = 1e-9
) -> complex:
    """Recover ``z_a`` from reflected/transmitted probabilities at delays 0 and pi/2.

    ``P_r - P_t`` equals ``Re z`` at zero delay and ``Im z`` at a quarter-wave
    delay.

    Raises
    ------
    CalibrationError
        If the reconstruction has ``|z| > 1 + tol``.
    """
    z = complex(_calibrate(P_r_0, P_0_t, P_r_pi2, P_0_t_pi2))
    if abs(z) > 1.0 + tol:
        raise CalibrationError(f"calibrated |z| = {abs(z):.6g} exceeds 1")
    return z


def _inversion_system(probs, z_a, z_b, delays, same_mode):
    rows, rhs = [], []
    for k, delay in enumerate(delays):
        c, w = _pair_channels(z_a, z_b, delay, same_mode)
        rows.append(np.stack([-2 * c * w.real, -2 * c * w.imag, c], axis=-1))
        rhs.append(probs[..., k, :4] - c * np.abs(w) ** 2)
    A = np.concatenate(rows, axis=-2)
    b = np.concatenate(rhs, axis=-1)
    return A, b


def _invert_batch(probs, z_a, z_b, delays, same_mode):
    A, b = _inversion_system(probs, z_a, z_b, delays, same_mode)
    sol = np.einsum("...ij,...j->...i", np.linalg.pinv(A), b)
    resid = np.sqrt(np.mean((np.einsum("...ij,...j->...i", A, sol) - b) ** 2, axis=-1))
    return sol[..., 0] + 1j * sol[..., 1], resid


def invert_two_photon(
    probs,
    z_a: complex,
    z_b: complex,
    delays: Sequence[float] = DELAYS,
    same_mode: bool = False,
    tol: float = EXACT_TOL,
) -> Tuple[complex, float]:
    """Solve for ``z_ab`` from coincidence probabilities.

    ``probs`` has one row per delay setting and at least the four
    coincidence outcomes as columns. Each outcome gives
    ``c |z - w|^2 = P``, linear in ``(Re z, Im z, |z|^2)``; the stacked
    system is solved by least squares. Returns ``(z_ab, rms_residual)``.

    Raises
    ------
    InversionError
        If the system is rank deficient or the residual exceeds ``tol``.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    if probs.shape != (len(delays), probs.shape[1]) or probs.shape[1] < 4:
        raise DomainError(f"probs must have shape ({len(delays)}, >=4), got {probs.shape}")
    A, b = _inversion_system(probs, z_a, z_b, delays, same_mode)
    if np.linalg.matrix_rank(A, tol=1e-10) < 3:
        raise InversionError("delay settings do not determine z (rank-deficient system)")
    z, resid = _invert_batch(probs, z_a, z_b, delays, same_mode)
    if not resid <= tol:
        raise InversionError(f"inversion residual {resid:.3g} exceeds {tol:.3g}")
    return complex(z), float(resid)


@dataclass(frozen=True)
class ProtocolSffCurve(SffCurve):
    exact: Optional[np.ndarray] = None
    n_invalid_pairs: Optional[np.ndarray] = None
    shots: Optional[int] = None


def _sample(rng, shots, probs):
    p = np.clip(probs, 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    return rng.multinomial(shots, p) / shots


def _reconstruct(single_p, pair_p, a, b, pair_delays, same, cal_tol, inv_tol):
    # single_p: (N, 2, 3) over delay (0, pi/2); pair_p: (D, 2, 5)
    z1 = _calibrate(single_p[:, 0, 0], single_p[:, 0, 1], single_p[:, 1, 0], single_p[:, 1, 1])
    bad_mode = np.abs(z1) > 1.0 + cal_tol
    z_ab = np.empty(a.size, dtype=complex)
    resid = np.empty(a.size)
    for flag in (True, False):
        mask = same == flag
        if np.any(mask):
            z_ab[mask], resid[mask] = _invert_batch(
                pair_p[mask], z1[a[mask]], z1[b[mask]], pair_delays[flag], flag
            )
    invalid = bad_mode[a] | bad_mode[b] | ~(resid <= inv_tol)
    return z_ab.sum(), int(invalid.sum())


def sample_and_reconstruct_sff(
    params: ModelParams,
    times,
    shots: Optional[int] = None,
    seed: int = 0,
    field: Optional[np.ndarray] = None,
    n_bootstrap: int = N_BOOTSTRAP,
) -> ProtocolSffCurve:
    """Run the interferometric protocol for every pair and rebuild ``K(t)``.

    Parameters
    ----------
    params : ModelParams
        Two-photon model; the one-photon calibration uses the same couplings.
    times : array_like
        Non-negative sample times.
    shots : int, optional
        Detection events per delay setting for each calibration and each
        pair. ``None`` uses the exact probabilities.
    seed : int
        Master seed; time ``k`` draws from the substream ``(seed, k)``.
    field : ndarray, optional
        One disorder realization, entering as ``-sum field_n n_n``.
    n_bootstrap : int
        Parametric bootstrap resamples for the standard error.

    Pairs ``alpha != beta`` use delays ``(0, pi/2)``. Doubly occupied inputs
    depend on the delay only through ``exp(2i delta)``, so they use
    ``(0, pi/4)``. A pair whose calibration gives ``|z| > 1 + tol`` or whose
    inversion residual exceeds ``tol`` is counted in ``n_invalid_pairs``; its
    least-squares estimate still enters the trace. In sampling mode both
    tolerances grow as ``shots^-1/2``.
    """
    if params.n_photons != 2:
        raise SectorError(f"the protocol needs p = 2, got p = {params.n_photons}")
    if shots is not None and (int(shots) != shots or shots < 1):
        raise DomainError(f"shots must be a positive integer, got {shots}")
    t = _check_times(times)
    basis2 = enumerate_basis(params.n_modes, 2)
    basis1 = enumerate_basis(params.n_modes, 1)
    h2 = build_hamiltonian(params, basis2)
    h1 = build_hamiltonian(params.replace(n_photons=1), basis1)
    if field is not None:
        field = np.asarray(field, dtype=float)
        h2[np.diag_indices_from(h2)] += onsite_field_diagonal(basis2, field)
        h1[np.diag_indices_from(h1)] += onsite_field_diagonal(basis1, field)
    spec2, spec1 = diagonalize(h2), diagonalize(h1)
    z2 = _diagonal_amplitudes(spec2, t)
    z1 = _diagonal_amplitudes(spec1, t)
    a, b = pair_mode_indices(basis2)
    same = a == b
    pair_delays = {False: DELAYS, True: (0.0, 0.25 * np.pi)}
    dim = basis2.dim

    exact_trace = z2.sum(axis=1)
    if shots is None:
        cal_tol, inv_tol = 1e-9, EXACT_TOL
    else:
        cal_tol, inv_tol = 1e-9 + 4.0 / np.sqrt(shots), EXACT_TOL + 3.0 / np.sqrt(shots)

    values = np.empty(t.size)
    stderr = np.zeros(t.size)
    n_invalid = np.zeros(t.size, dtype=int)
    for k in range(t.size):
        single_p = np.stack([single_photon_probabilities(z1[k], d) for d in DELAYS], axis=1)
        pair_p = np.empty((dim, 2, 5))
        for flag in (False, True):
            m = same == flag
            for j, d in enumerate(pair_delays[flag]):
                pair_p[m, j] = bs_outcome_probabilities(z2[k, m], z1[k, a[m]], z1[k, b[m]], d, flag)
        if shots is None:
            tr, n_invalid[k] = _reconstruct(single_p, pair_p, a, b, pair_delays, same, cal_tol, inv_tol)
            values[k] = abs(tr) ** 2 / dim**2
            continue
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        single_hat, pair_hat = _sample(rng, shots, single_p), _sample(rng, shots, pair_p)
        tr, n_invalid[k] = _reconstruct(single_hat, pair_hat, a, b, pair_delays, same, cal_tol, inv_tol)
        values[k] = abs(tr) ** 2 / dim**2
        boot = np.empty(n_bootstrap)
        for r in range(n_bootstrap):
            tr_b, _ = _reconstruct(
                _sample(rng, shots, single_hat), _sample(rng, shots, pair_hat),
                a, b, pair_delays, same, cal_tol, inv_tol,
            )
            boot[r] = abs(tr_b) ** 2 / dim**2
        stderr[k] = boot.std(ddof=1) if n_bootstrap > 1 else 0.0

    return ProtocolSffCurve(
        times=t,
        values=values,
        dim=dim,
        heisenberg_time=heisenberg_time(spec2.eigenvalues),
        stderr=stderr,
        exact=np.abs(exact_trace) ** 2 / dim**2,
        n_invalid_pairs=n_invalid,
        shots=shots,
    )
