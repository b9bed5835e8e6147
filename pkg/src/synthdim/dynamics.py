"""Closed and dissipative evolution of few-photon states.

Production runs use the no-jump reduction of the master equation: with a
uniform loss rate ``Gamma`` on every mode, the p-photon block of the density
matrix evolves as ``exp(-Gamma p t) U rho U^dag``, so amplitudes simply pick
up ``exp(-Gamma p t / 2)``. :func:`lindblad_reference` integrates the full
master equation over all photon sectors for validation on small lattices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .basis import FockBasis, LadderMonomial, enumerate_basis, monomial_matrix
from .entanglement import (
    degree_of_independence,
    half_chain_entropy,
    photon_entanglement_entropy,
    weighted_di,
)
from .exceptions import ConvergenceError, DomainError, SectorError
from .hamiltonian import ModelParams, build_hamiltonian
from .spectral import Spectrum, diagonalize


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != self.basis.dim:
            raise SectorError(f"{amps.size} amplitudes for a basis of dimension {self.basis.dim}")
        if not np.all(np.isfinite(amps)):
            raise DomainError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm
        if norm == 0:
            raise DomainError("cannot normalise the zero vector")
        return StateVector(self.basis, self.amplitudes / norm)

    def occupations(self) -> np.ndarray:
        """Per-mode photon number expectation of the normalised state."""
        prob = np.abs(self.amplitudes) ** 2
        return prob @ self.basis.states / prob.sum()


def fock_state(basis: FockBasis, occupation: Sequence[int]) -> StateVector:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index(occupation)] = 1.0
    return StateVector(basis, amps)


def initial_gaussian_pair(
    params: ModelParams,
    sigma: float,
    center_mode: int,
    norm: float = 1.0,
) -> StateVector:
    """Two identical photons with Gaussian spectral amplitudes.

    Each photon has amplitude ``f_n ~ exp(-(n - c)^2 / (4 sigma^2))`` on mode
    ``n`` (``sigma`` in units of the mode spacing, so ``|f|^2`` has standard
    deviation ``sigma``). The state ``(sum_n f_n a_n^dag)^2 |0>`` is scaled to
    norm ``norm``; ``norm < 1`` models photons lost during injection.
    ``sigma = inf`` gives a uniform amplitude.
    """
    if params.n_photons != 2:
        raise SectorError(f"a photon pair needs n_photons = 2, got {params.n_photons}")
    n = params.n_modes
    if not 1 <= center_mode <= n:
        raise DomainError(f"center_mode must lie in 1..{n}, got {center_mode}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not 0 < norm <= 1:
        raise DomainError(f"norm must lie in (0, 1], got {norm}")
    labels = np.arange(1, n + 1)
    if np.isinf(sigma):
        f = np.ones(n)
    else:
        f = np.exp(-((labels - center_mode) ** 2) / (4.0 * sigma**2))
    basis = enumerate_basis(n, 2)
    amps = np.empty(basis.dim, dtype=complex)
    for k, occ in enumerate(basis.states):
        occupied = np.flatnonzero(occ)
        if occupied.size == 1:
            amps[k] = np.sqrt(2.0) * f[occupied[0]] ** 2
        else:
            amps[k] = 2.0 * f[occupied[0]] * f[occupied[1]]
    amps *= norm / np.linalg.norm(amps)
    return StateVector(basis, amps)


@dataclass(frozen=True)
class QuenchSchedule:
    """Piecewise-constant tilt: segment ``k`` uses ``tilt`` from ``t_start`` on."""

    segments: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(t), float(d)) for t, d in self.segments)
        if not segs or segs[0][0] != 0.0:
            raise DomainError("schedule must start at t = 0")
        starts = [t for t, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise DomainError("segment start times must be strictly increasing")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, tilt: float) -> "QuenchSchedule":
        return cls(((0.0, tilt),))

    @classmethod
    def quench(cls, tilt_before: float, t_quench: float, tilt_after: float) -> "QuenchSchedule":
        if t_quench <= 0:
            return cls.constant(tilt_after)
        return cls(((0.0, tilt_before), (t_quench, tilt_after)))


@dataclass(frozen=True)
class DbarPeakTrigger:
    """Quench to ``tilt`` at the first running maximum of the weighted DI.

    A grid time ``t*`` qualifies when the weighted DI there is at least as
    large as at every earlier grid time and strictly larger than at every
    grid time in ``(t*, t* + lookback]``.
    """

    tilt: float = 10.0
    lookback: float = 1.0


@dataclass
class ObservableTrajectory:
    times: np.ndarray
    norm: np.ndarray
    imbalance: np.ndarray
    imbalance_normalized: np.ndarray
    states: np.ndarray = field(repr=False)
    basis: FockBasis = field(repr=False)
    P: Optional[np.ndarray] = field(default=None, repr=False)
    marginals: Optional[np.ndarray] = field(default=None, repr=False)
    di: Optional[np.ndarray] = None
    dbar: Optional[np.ndarray] = None
    s_ph: Optional[np.ndarray] = None
    s_sp: Optional[np.ndarray] = None
    quench_time: Optional[float] = None

    def state(self, k: int) -> StateVector:
        return StateVector(self.basis, self.states[k])


def two_photon_probabilities(state: StateVector) -> Tuple[np.ndarray, np.ndarray]:
    """Pair detection matrix ``P_nm = |<0|a_n a_m|psi>|^2 / (1 + delta_nm)``.

    For a two-photon Fock amplitude ``c`` this is simply ``|c|^2`` on the
    pair of modes the state occupies. Returns ``(P, P_marginal)`` where
    ``P_n = P_nn + sum_{m != n} P_nm / 2``; ``sum_{n<=m} P_nm`` is the squared
    norm.
    """
    basis = state.basis
    if basis.n_photons != 2:
        raise SectorError(f"pair probabilities need p = 2, got p = {basis.n_photons}")
    P = _pair_matrix_batch(basis, state.amplitudes[None, :])[0]
    return P, np.diag(P) + 0.5 * (P.sum(axis=1) - np.diag(P))


def _pair_indices(basis: FockBasis):
    rows = np.empty(basis.dim, dtype=int)
    cols = np.empty(basis.dim, dtype=int)
    for k, occ in enumerate(basis.states):
        occupied = np.repeat(np.arange(basis.n_modes), occ)
        rows[k], cols[k] = occupied
    return rows, cols


def _pair_matrix_batch(basis: FockBasis, amps: np.ndarray) -> np.ndarray:
    rows, cols = _pair_indices(basis)
    prob = np.abs(amps) ** 2
    P = np.zeros((amps.shape[0], basis.n_modes, basis.n_modes))
    P[:, rows, cols] = prob
    P[:, cols, rows] = prob
    return P


def imbalance(state0: StateVector, statet: StateVector) -> float:
    """``sum_i <n_i>_0 <n_i>_t`` with both states normalised."""
    if state0.basis != statet.basis:
        raise SectorError("imbalance needs both states in the same basis")
    return float(state0.occupations() @ statet.occupations())


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0 or t[0] < 0 or np.any(np.diff(t) < 0) or not np.all(np.isfinite(t)):
        raise DomainError("t_grid must be a non-empty ascending grid starting at t >= 0")
    return t


def _propagate_segments(amps0, params, basis, segments, t, cache):
    """Unitary amplitudes at each time in ``t`` (rows) under a tilt schedule."""
    out = np.empty((t.size, basis.dim), dtype=complex)
    starts = [s for s, _ in segments] + [np.inf]
    psi, t_prev = amps0.copy(), 0.0
    for k, (t0, tilt) in enumerate(segments):
        spec = cache.get(tilt)
        if spec is None:
            spec = cache[tilt] = diagonalize(build_hamiltonian(params.replace(tilt=tilt), basis))
        coeffs = spec.eigenvectors.conj().T @ psi
        in_seg = (t >= t0) & (t < starts[k + 1])
        if k == 0:
            in_seg |= t < t0
        if np.any(in_seg):
            phases = np.exp(-1j * np.outer(t[in_seg] - t_prev, spec.eigenvalues))
            out[in_seg] = (phases * coeffs) @ spec.eigenvectors.T
        t_next = starts[k + 1]
        if np.isfinite(t_next):
            psi = spec.eigenvectors @ (np.exp(-1j * spec.eigenvalues * (t_next - t_prev)) * coeffs)
            t_prev = t_next
    return out


def _trigger_time(amps0, params, basis, trigger: DbarPeakTrigger, t, cache) -> Optional[float]:
    amps = _propagate_segments(amps0, params, basis, ((0.0, params.tilt),), t, cache)
    P = _pair_matrix_batch(basis, amps)
    dbar = np.array([weighted_di(p) for p in P])
    running = -np.inf
    for i, value in enumerate(dbar):
        if value >= running:
            running = value
            ahead = (t > t[i]) & (t <= t[i] + trigger.lookback)
            if t[i] + trigger.lookback <= t[-1] and np.any(ahead) and np.all(dbar[ahead] < value):
                return float(t[i])
    return None


def evolve(
    state: StateVector,
    params: ModelParams,
    schedule: Union[QuenchSchedule, DbarPeakTrigger, None] = None,
    gamma: float = 0.0,
    t_grid=None,
    half_chain: bool = False,
    cache: Optional[Dict[float, Spectrum]] = None,
) -> ObservableTrajectory:
    """Evolve ``state`` and record observables on ``t_grid``.

    Parameters
    ----------
    state : StateVector
        Initial state in the ``(N, p)`` sector of ``params``.
    params : ModelParams
        Fixed couplings. The tilt comes from ``schedule`` when one is given.
    schedule : QuenchSchedule or DbarPeakTrigger, optional
        Piecewise-constant tilt, or a trigger rule that places a single
        quench at the first weighted-DI peak (p = 2 only).
    gamma : float
        Uniform loss rate per mode.
    t_grid : array_like
        Ascending sample times; defaults to 400 points on ``[0, 40]``.
    half_chain : bool
        Also record the half-chain entanglement entropy.
    """
    basis = state.basis
    if basis.n_modes != params.n_modes or basis.n_photons != params.n_photons:
        raise SectorError("state basis does not match params (N, p)")
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    t = _check_grid(np.linspace(0.0, 40.0, 400) if t_grid is None else t_grid)
    cache = {} if cache is None else cache

    quench_time = None
    if schedule is None:
        segments = ((0.0, params.tilt),)
    elif isinstance(schedule, DbarPeakTrigger):
        if basis.n_photons != 2:
            raise DomainError("the weighted-DI trigger needs a two-photon state")
        quench_time = _trigger_time(state.amplitudes, params, basis, schedule, t, cache)
        segments = (
            ((0.0, params.tilt),)
            if quench_time is None
            else QuenchSchedule.quench(params.tilt, quench_time, schedule.tilt).segments
        )
    else:
        segments = schedule.segments
        if len(segments) > 1:
            quench_time = segments[1][0]

    amps = _propagate_segments(state.amplitudes, params, basis, segments, t, cache)
    amps *= np.exp(-0.5 * gamma * basis.n_photons * t)[:, None]
    norm = np.linalg.norm(amps, axis=1)

    states_t = [StateVector(basis, a) for a in amps]
    imb = np.array([imbalance(state, s) if n > 0 else np.nan for s, n in zip(states_t, norm)])
    traj = ObservableTrajectory(
        times=t,
        norm=norm,
        imbalance=imb,
        imbalance_normalized=imb / imb[0] if imb[0] else np.full_like(imb, np.nan),
        states=amps,
        basis=basis,
        quench_time=quench_time,
    )
    if basis.n_photons == 2:
        P = _pair_matrix_batch(basis, amps)
        traj.P = P
        traj.marginals = np.diagonal(P, axis1=1, axis2=2) + 0.5 * (
            P.sum(axis=2) - np.diagonal(P, axis1=1, axis2=2)
        )
        traj.di = np.array([degree_of_independence(p) for p in P])
        traj.dbar = np.array([weighted_di(p) if np.trace(p) > 0 else np.nan for p in P])
        traj.s_ph = np.array([photon_entanglement_entropy(s) for s in states_t])
    if half_chain and basis.n_modes > 1:
        traj.s_sp = np.array([half_chain_entropy(s) for s in states_t])
    return traj


# -- full master equation ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SectorSpace:
    """Direct sum of the 0..p photon sectors of ``n_modes`` modes."""

    n_modes: int
    max_photons: int
    bases: Tuple[FockBasis, ...]
    offsets: Tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    def block(self, p: int) -> slice:
        return slice(self.offsets[p], self.offsets[p + 1])


def sector_space(n_modes: int, max_photons: int) -> SectorSpace:
    bases = tuple(enumerate_basis(n_modes, k) for k in range(max_photons + 1))
    offsets = tuple(np.concatenate([[0], np.cumsum([b.dim for b in bases])]).tolist())
    return SectorSpace(n_modes, max_photons, bases, offsets)


def embed_density(space: SectorSpace, state: StateVector) -> np.ndarray:
    """Pure-state density operator of ``state`` on the direct-sum space."""
    p = state.basis.n_photons
    if p > space.max_photons or state.basis.n_modes != space.n_modes:
        raise SectorError("state does not fit the sector space")
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.block(p)] = state.amplitudes
    return np.outer(vec, vec.conj())


def _sector_operators(space: SectorSpace, params: ModelParams):
    dim = space.dim
    h = np.zeros((dim, dim), dtype=complex)
    for k, basis in enumerate(space.bases):
        sl = space.block(k)
        h[sl, sl] = build_hamiltonian(params.replace(n_photons=k), basis)
    jumps = []
    for mode in range(1, space.n_modes + 1):
        a = np.zeros((dim, dim))
        for k in range(1, space.max_photons + 1):
            a[space.block(k - 1), space.block(k)] = monomial_matrix(
                space.bases[k], LadderMonomial((), (mode,)), target=space.bases[k - 1]
            )
        jumps.append(a)
    return h, jumps


@dataclass
class LindbladTrajectory:
    times: np.ndarray
    trace: np.ndarray
    sector_populations: np.ndarray
    P: Optional[np.ndarray]
    densities: np.ndarray = field(repr=False)
    step: float = 0.0


def _trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


def lindblad_reference(
    rho0: np.ndarray,
    params: ModelParams,
    gamma: float,
    t_grid,
    space: Optional[SectorSpace] = None,
    tol: float = 1e-8,
    max_halvings: int = 12,
) -> LindbladTrajectory:
    """Integrate the Lindblad equation with uniform mode loss by fixed-step RK4.

    ``rho0`` lives on the direct sum of the 0..p photon sectors, with
    ``p = params.n_photons``. The step is halved until halving it once more
    moves the final state by less than ``tol`` in trace distance. The
    returned ``P`` holds the two-photon correlations of the renormalised
    p = 2 block.
    """
    space = sector_space(params.n_modes, params.n_photons) if space is None else space
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (space.dim, space.dim):
        raise SectorError(f"rho0 has shape {rho0.shape}, expected {(space.dim, space.dim)}")
    t = _check_grid(t_grid)
    h, jumps = _sector_operators(space, params)
    loss = sum(a.T @ a for a in jumps)
    heff = h - 0.5j * gamma * loss

    def rhs(rho):
        out = -1j * (heff @ rho - rho @ heff.conj().T)
        if gamma:
            out += gamma * sum(a @ rho @ a.T for a in jumps)
        return out

    def run(dt):
        rhos = np.empty((t.size,) + rho0.shape, dtype=complex)
        rho, now = rho0.copy(), 0.0
        for i, target in enumerate(t):
            span = target - now
            steps = int(np.ceil(span / dt - 1e-12)) if span > 0 else 0
            h_step = span / steps if steps else 0.0
            for _ in range(steps):
                k1 = rhs(rho)
                k2 = rhs(rho + 0.5 * h_step * k1)
                k3 = rhs(rho + 0.5 * h_step * k2)
                k4 = rhs(rho + h_step * k3)
                rho = rho + (h_step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            rhos[i] = rho
            now = target
        return rhos

    scale = np.max(np.abs(np.linalg.eigvalsh(h)), initial=0.0) + gamma * params.n_photons + 1.0
    dt = 0.5 / scale
    coarse = run(dt)
    for _ in range(max_halvings):
        fine = run(dt / 2)
        change = max(_trace_distance(c, f) for c, f in zip(coarse, fine))
        coarse, dt = fine, dt / 2
        if change < tol:
            break
    else:
        raise ConvergenceError(
            f"RK4 step did not converge to {tol} in trace distance", residual=change
        )

    pops = np.array(
        [[np.trace(r[space.block(k), space.block(k)]).real for k in range(space.max_photons + 1)] for r in coarse]
    )
    P = None
    if space.max_photons >= 2:
        basis2 = space.bases[2]
        rows, cols = _pair_indices(basis2)
        sl = space.block(2)
        P = np.zeros((t.size, space.n_modes, space.n_modes))
        for i, r in enumerate(coarse):
            diag = np.real(np.diag(r[sl, sl]))
            total = diag.sum()
            if total > 0:
                P[i, rows, cols] = diag / total
                P[i, cols, rows] = diag / total
    return LindbladTrajectory(
        times=t,
        trace=np.real(np.trace(coarse, axis1=1, axis2=2)),
        sector_populations=pops,
        P=P,
        densities=coarse,
        step=dt,
    )
