"""Effective Hamiltonian of interacting photons on a synthetic frequency lattice.

All energies are in units of the reference coupling scale Omega. The
operator is

    H = - sum_mu sum_n K_mu w(n, mu) (e^{i phi_mu} a_n^dag a_{n+mu} + h.c.)
        - sum_n n Delta a_n^dag a_n
        + H_int

where ``H_int`` is selected by ``interaction_mode``:

``full_fwm``
    ``-(g/2) sum_{n+m=p+q} e^{i theta} sinc(theta) a_n^dag a_m^dag a_p a_q``
    over all ordered quadruples, with
    ``theta = chi (n~^2 + m~^2 - p~^2 - q~^2)`` and ``n~`` the offset of mode
    ``n`` from the lattice centre.
``local_limit``
    the large-dispersion limit, keeping only phase-matched terms:
    ``-(g/2) sum_m n_m (n_m - 1) - g sum_{m != n} n_m n_n``.
``local_gauge``
    on-site repulsion only, ``+(g/2) sum_m n_m (n_m - 1)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from .basis import FockBasis, LadderMonomial, apply_monomial, enumerate_basis
from .exceptions import DomainError, HermiticityError, SectorError

INTERACTION_MODES = ("full_fwm", "local_limit", "local_gauge")
WEIGHT_MODES = ("unit", "frequency_weighted")
HERMITICITY_TOL = 1e-12


def _as_float_tuple(values) -> Tuple[float, ...]:
    if np.isscalar(values):
        values = (values,)
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless knobs of the lattice Hamiltonian.

    ``hop_strengths[mu-1]`` and ``hop_phases[mu-1]`` hold ``K_mu`` and
    ``phi_mu``. Both are padded with zeros up to ``max_hop_range``; entries
    beyond the range must be zero. ``max_hop_range`` defaults to
    ``min(3, N - 1)``.
    """

    n_modes: int
    n_photons: int
    hop_strengths: Tuple[float, ...] = (1.0, 0.0, 0.0)
    hop_phases: Tuple[float, ...] = (0.0, 0.0, 0.0)
    tilt: float = 0.0
    interaction: float = 0.0
    gvd_phase_scale: float = 50.0
    interaction_mode: str = "full_fwm"
    weight_mode: str = "unit"
    center_frequency_ratio: float = 1.0e3
    max_hop_range: Optional[int] = None

    def __post_init__(self):
        n, p = self.n_modes, self.n_photons
        if int(n) != n or n < 1:
            raise DomainError(f"n_modes must be a positive integer, got {n}")
        if int(p) != p or p < 0:
            raise DomainError(f"n_photons must be a non-negative integer, got {p}")
        object.__setattr__(self, "n_modes", int(n))
        object.__setattr__(self, "n_photons", int(p))

        m = self.max_hop_range
        if m is None:
            m = max(1, min(3, int(n) - 1))
        if int(m) != m or m < 1 or (n > 1 and m > n - 1):
            raise DomainError(f"max_hop_range must lie in 1..N-1, got {m} for N={n}")
        object.__setattr__(self, "max_hop_range", int(m))

        strengths = list(_as_float_tuple(self.hop_strengths))
        phases = list(_as_float_tuple(self.hop_phases))
        if any(k != 0.0 for k in strengths[m:]):
            raise DomainError(f"nonzero hopping beyond max_hop_range={m}: {strengths}")
        strengths = (strengths + [0.0] * m)[:m]
        phases = (phases + [0.0] * m)[:m]
        if any(k < 0 or not np.isfinite(k) for k in strengths):
            raise DomainError(f"hop strengths must be finite and >= 0, got {strengths}")
        if not all(np.isfinite(phases)):
            raise DomainError("hop phases must be finite")
        object.__setattr__(self, "hop_strengths", tuple(strengths))
        object.__setattr__(self, "hop_phases", tuple(phases))

        for name in ("tilt", "interaction", "gvd_phase_scale", "center_frequency_ratio"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.gvd_phase_scale < 0:
            raise DomainError(f"gvd_phase_scale must be >= 0, got {self.gvd_phase_scale}")
        if self.interaction_mode not in INTERACTION_MODES:
            raise DomainError(f"interaction_mode must be one of {INTERACTION_MODES}")
        if self.weight_mode not in WEIGHT_MODES:
            raise DomainError(f"weight_mode must be one of {WEIGHT_MODES}")

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def mode_offsets(self) -> np.ndarray:
        """``n - (N+1)/2`` for modes 1..N (half-integers when N is even)."""
        return np.arange(1, self.n_modes + 1) - (self.n_modes + 1) / 2.0

    def mode_frequencies(self) -> np.ndarray:
        """Mode frequencies in units of the free spectral range."""
        return self.center_frequency_ratio + self.mode_offsets()


def hopping_weight(n: int, mu: int, params: ModelParams) -> float:
    """Frequency prefactor ``2 sqrt(w_n w_{n+mu}) / (w_n + w_{n+mu})`` of a hop.

    Returns 1 for ``weight_mode="unit"``.
    """
    if not (1 <= n and n + mu <= params.n_modes and mu >= 1):
        raise DomainError(f"hop ({n}, {n}+{mu}) outside 1..{params.n_modes}")
    if params.weight_mode == "unit":
        return 1.0
    omega = params.mode_frequencies()
    if np.any(omega <= 0):
        raise DomainError("frequency_weighted hopping needs all mode frequencies > 0")
    a, b = omega[n - 1], omega[n + mu - 1]
    return float(2.0 * np.sqrt(a * b) / (a + b))


def _phase_mismatch(n, m, p, q, params: ModelParams):
    off = params.mode_offsets()
    return params.gvd_phase_scale * (
        off[n - 1] ** 2 + off[m - 1] ** 2 - off[p - 1] ** 2 - off[q - 1] ** 2
    )


def interaction_amplitude(n: int, m: int, p: int, q: int, params: ModelParams) -> complex:
    """Coefficient of ``a_n^dag a_m^dag a_p a_q`` in the four-wave-mixing sum.

    Zero unless ``n + m == p + q``; otherwise
    ``-(g/2) e^{i theta} sinc(theta)`` with ``sinc(0) = 1``.
    """
    if n + m != p + q:
        return 0.0j
    theta = _phase_mismatch(n, m, p, q, params)
    return complex(-0.5 * params.interaction * np.exp(1j * theta) * np.sinc(theta / np.pi))


def diagonal_interaction_check(params: ModelParams) -> float:
    """Constant ``-g p^2`` quoted for the gauge rewrite of the local interaction.

    See :func:`local_gauge_shift` for the shift that actually relates the
    ``local_limit`` and ``local_gauge`` operators.
    """
    return -params.interaction * params.n_photons**2


def local_gauge_shift(params: ModelParams) -> float:
    """Exact constant ``H_local_limit - H_local_gauge = -g p (p - 1)``.

    Follows from ``sum_{m != n} n_m n_n = p^2 - sum_m n_m^2`` in a sector of
    fixed photon number ``p``.
    """
    p = params.n_photons
    return -params.interaction * p * (p - 1)


def _check_basis(params: ModelParams, basis: FockBasis) -> None:
    if basis.n_modes != params.n_modes or basis.n_photons != params.n_photons:
        raise SectorError(
            f"basis (N={basis.n_modes}, p={basis.n_photons}) does not match "
            f"params (N={params.n_modes}, p={params.n_photons})"
        )


def hopping_matrix(params: ModelParams, basis: FockBasis) -> np.ndarray:
    dim = basis.dim
    h = np.zeros((dim, dim), dtype=complex)
    for mu in range(1, params.max_hop_range + 1):
        k = params.hop_strengths[mu - 1]
        if k == 0.0:
            continue
        phase = np.exp(1j * params.hop_phases[mu - 1])
        for n in range(1, params.n_modes - mu + 1):
            coef = -k * hopping_weight(n, mu, params) * phase
            rows, cols, amps = apply_monomial(basis, LadderMonomial((n,), (n + mu,)))
            h[rows, cols] += coef * amps
            h[cols, rows] += np.conj(coef) * amps
    return h


def tilt_diagonal(params: ModelParams, basis: FockBasis) -> np.ndarray:
    labels = np.arange(1, params.n_modes + 1)
    return -params.tilt * (basis.states @ labels).astype(float)


def _pair_annihilation(basis: FockBasis) -> Tuple[sparse.csr_matrix, int]:
    """Stack of ``a_p a_q`` over all ordered pairs, rows ``(pair, j')``."""
    n = basis.n_modes
    lower = enumerate_basis(n, basis.n_photons - 2, max_dim=max(basis.dim, 1))
    rows, cols, vals = [], [], []
    for p in range(1, n + 1):
        for q in range(1, n + 1):
            r, c, a = apply_monomial(basis, LadderMonomial((), (p, q)), target=lower)
            pair = (p - 1) * n + (q - 1)
            rows.append(pair * lower.dim + r)
            cols.append(c)
            vals.append(a)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * n * lower.dim, basis.dim),
    ), lower.dim


def fwm_coefficients(params: ModelParams) -> sparse.csr_matrix:
    """Ordered-pair coefficient matrix ``C[(n,m), (p,q)]`` of the FWM sum."""
    n = params.n_modes
    idx = np.arange(1, n + 1)
    nn, mm, pp, qq = np.meshgrid(idx, idx, idx, idx, indexing="ij")
    keep = nn + mm == pp + qq
    nn, mm, pp, qq = nn[keep], mm[keep], pp[keep], qq[keep]
    off = params.mode_offsets()
    theta = params.gvd_phase_scale * (
        off[nn - 1] ** 2 + off[mm - 1] ** 2 - off[pp - 1] ** 2 - off[qq - 1] ** 2
    )
    coef = -0.5 * params.interaction * np.exp(1j * theta) * np.sinc(theta / np.pi)
    return sparse.csr_matrix(
        (coef, ((nn - 1) * n + (mm - 1), (pp - 1) * n + (qq - 1))), shape=(n * n, n * n)
    )


def interaction_matrix(params: ModelParams, basis: FockBasis) -> np.ndarray:
    dim = basis.dim
    g = params.interaction
    if g == 0.0 or basis.n_photons < 2:
        return np.zeros((dim, dim), dtype=complex)
    occ = basis.states.astype(float)
    onsite = (occ * (occ - 1)).sum(axis=1)
    if params.interaction_mode == "local_gauge":
        return np.diag(0.5 * g * onsite).astype(complex)
    if params.interaction_mode == "local_limit":
        cross = basis.n_photons**2 - (occ**2).sum(axis=1)
        return np.diag(-0.5 * g * onsite - g * cross).astype(complex)
    pairs, lower_dim = _pair_annihilation(basis)
    coef = sparse.kron(fwm_coefficients(params), sparse.identity(lower_dim), format="csr")
    return np.asarray((pairs.conj().T @ coef @ pairs).todense(), dtype=complex)


def build_hamiltonian(params: ModelParams, basis: Optional[FockBasis] = None) -> np.ndarray:
    """Dense Hermitian matrix of the lattice Hamiltonian over ``basis``.

    Parameters
    ----------
    params : ModelParams
    basis : FockBasis, optional
        Must match ``params.n_modes`` and ``params.n_photons``; enumerated
        on demand when omitted.

    Returns
    -------
    ndarray of complex, shape (D, D)

    Examples
    --------
    >>> p = ModelParams(2, 1, hop_strengths=(1.0,), tilt=0.5)
    >>> build_hamiltonian(p).real
    array([[-0.5, -1. ],
           [-1. , -1. ]])
    """
    if basis is None:
        basis = enumerate_basis(params.n_modes, params.n_photons)
    _check_basis(params, basis)
    h = hopping_matrix(params, basis)
    h[np.diag_indices_from(h)] += tilt_diagonal(params, basis)
    h += interaction_matrix(params, basis)
    if not np.all(np.isfinite(h)):
        raise HermiticityError("Hamiltonian has non-finite entries")
    err = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if err > HERMITICITY_TOL:
        raise HermiticityError(f"assembled Hamiltonian is not Hermitian (max |H - H^dag| = {err:.3e})")
    return 0.5 * (h + h.conj().T)


def onsite_field_diagonal(basis: FockBasis, field_values: np.ndarray) -> np.ndarray:
    """Diagonal of ``-sum_n delta_n n_n`` for per-mode energies ``field_values``."""
    return -(basis.states @ np.asarray(field_values, dtype=float))


def number_operator(basis: FockBasis, mode: int) -> np.ndarray:
    """Diagonal of ``n_mode`` (mode label 1..N)."""
    if not 1 <= mode <= basis.n_modes:
        raise DomainError(f"mode {mode} outside 1..{basis.n_modes}")
    return basis.states[:, mode - 1].astype(float)
