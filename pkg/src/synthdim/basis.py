"""Fixed photon-number Fock bases and ladder-operator monomials.

Mode labels in the public API run from 1 to ``n_modes``, matching the
frequency-level numbering of the lattice. Occupation arrays are indexed
from 0 internally.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from math import comb
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .exceptions import CapacityError, DomainError

DEFAULT_MAX_DIM = 100_000


def max_dimension() -> int:
    """Capacity cap on basis size; ``SYNTHDIM_MAX_DIM`` overrides the default."""
    value = os.environ.get("SYNTHDIM_MAX_DIM")
    if value is None:
        return DEFAULT_MAX_DIM
    try:
        cap = int(value)
    except ValueError as exc:
        raise DomainError(f"SYNTHDIM_MAX_DIM must be an integer, got {value!r}") from exc
    if cap < 1:
        raise DomainError("SYNTHDIM_MAX_DIM must be positive")
    return cap


def sector_dimension(n_modes: int, n_photons: int) -> int:
    """Number of ways to place ``n_photons`` bosons in ``n_modes`` modes."""
    return comb(n_modes + n_photons - 1, n_photons)


def _occupations_desc(n_modes: int, n_photons: int) -> np.ndarray:
    # Lexicographically descending: first mode takes the most photons first.
    out = np.zeros((sector_dimension(n_modes, n_photons), n_modes), dtype=np.int64)
    row = 0
    occ = [0] * n_modes

    def fill(pos: int, remaining: int) -> None:
        nonlocal row
        if pos == n_modes - 1:
            occ[pos] = remaining
            out[row] = occ
            row += 1
            return
        for k in range(remaining, -1, -1):
            occ[pos] = k
            fill(pos + 1, remaining - k)

    fill(0, n_photons)
    return out


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number states of ``n_modes`` bosonic modes holding ``n_photons``.

    States are stored in lexicographically descending order, so for three
    modes and two photons the order is ``(2,0,0), (1,1,0), (1,0,1), (0,2,0),
    (0,1,1), (0,0,2)``. Instances are immutable; build them with
    :func:`enumerate_basis`.
    """

    n_modes: int
    n_photons: int
    states: np.ndarray = field(repr=False)
    index_of: Dict[Tuple[int, ...], int] = field(repr=False)
    _binom: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FockBasis):
            return NotImplemented
        return self.n_modes == other.n_modes and self.n_photons == other.n_photons

    def __hash__(self) -> int:
        return hash((self.n_modes, self.n_photons))

    def state(self, index: int) -> Tuple[int, ...]:
        if not 0 <= index < self.dim:
            raise IndexError(f"basis index {index} out of range for dimension {self.dim}")
        return tuple(int(v) for v in self.states[index])

    def index(self, occupation: Sequence[int]) -> int:
        key = tuple(int(v) for v in occupation)
        try:
            return self.index_of[key]
        except KeyError:
            raise KeyError(f"{key} is not a state of {self!r}") from None

    def rank(self, occupations: np.ndarray) -> np.ndarray:
        """Vectorised basis index of each row of ``occupations``.

        Rows must be valid states of this basis (non-negative, summing to
        ``n_photons``); no check is made here.
        """
        occ = np.atleast_2d(np.asarray(occupations, dtype=np.int64))
        n = self.n_modes
        remaining = self.n_photons - np.cumsum(occ, axis=1) + occ
        slots = n - 1 - np.arange(n)
        # states ranked above: same prefix, more photons at position i
        gap = remaining - occ - 1
        idx = np.where(gap >= 0, self._binom[np.clip(gap + slots, 0, None), slots], 0)
        idx[:, -1] = 0
        return idx.sum(axis=1)

    def number_operator_diagonals(self) -> np.ndarray:
        """``states`` as float, i.e. the diagonal of every ``n_i`` (D x N)."""
        return self.states.astype(float)


def enumerate_basis(n_modes: int, n_photons: int, max_dim: Optional[int] = None) -> FockBasis:
    """Enumerate the Fock space of ``n_photons`` bosons in ``n_modes`` modes.

    Raises
    ------
    DomainError
        If ``n_modes < 1`` or ``n_photons < 0``.
    CapacityError
        If the dimension exceeds ``max_dim`` (default: :func:`max_dimension`).
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise DomainError(f"n_modes must be a positive integer, got {n_modes}")
    if int(n_photons) != n_photons or n_photons < 0:
        raise DomainError(f"n_photons must be a non-negative integer, got {n_photons}")
    n_modes, n_photons = int(n_modes), int(n_photons)
    cap = max_dimension() if max_dim is None else max_dim
    dim = sector_dimension(n_modes, n_photons)
    if dim > cap:
        raise CapacityError(
            f"dimension {dim} for N={n_modes}, p={n_photons} exceeds the cap of {cap}"
        )
    states = _occupations_desc(n_modes, n_photons)
    states.setflags(write=False)
    index_of = {tuple(int(v) for v in row): i for i, row in enumerate(states)}
    size = n_modes + n_photons + 1
    binom = np.array([[comb(a, b) for b in range(size)] for a in range(size)], dtype=np.int64)
    binom.setflags(write=False)
    return FockBasis(n_modes, n_photons, states, index_of, binom)


@dataclass(frozen=True)
class LadderMonomial:
    """Normally ordered product of creation then annihilation operators.

    ``LadderMonomial(creators=(1,), annihilators=(2,))`` is ``a_1^dag a_2``.
    Annihilators act right to left, so ``annihilators=(2, 3)`` means
    ``a_2 a_3`` with ``a_3`` applied first.
    """

    creators: Tuple[int, ...] = ()
    annihilators: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "creators", tuple(int(c) for c in self.creators))
        object.__setattr__(self, "annihilators", tuple(int(a) for a in self.annihilators))

    @property
    def photon_change(self) -> int:
        return len(self.creators) - len(self.annihilators)

    def adjoint(self) -> "LadderMonomial":
        return LadderMonomial(tuple(reversed(self.annihilators)), tuple(reversed(self.creators)))

    def check_modes(self, n_modes: int) -> None:
        for m in self.creators + self.annihilators:
            if not 1 <= m <= n_modes:
                raise DomainError(f"mode index {m} outside 1..{n_modes}")


def _apply_to_occupations(mono: LadderMonomial, occ: np.ndarray):
    occ = np.array(occ, dtype=np.int64, copy=True)
    amp = np.ones(occ.shape[0])
    for mode in reversed(mono.annihilators):
        k = mode - 1
        amp *= np.sqrt(np.clip(occ[:, k], 0, None))
        occ[:, k] -= 1
    alive = amp != 0.0
    occ[~alive] = 0
    for mode in reversed(mono.creators):
        k = mode - 1
        occ[:, k] += 1
        amp *= np.sqrt(occ[:, k])
    return occ, amp, alive


def monomial_matrix_element(
    basis: FockBasis,
    mono: LadderMonomial,
    col: int,
    target: Optional[FockBasis] = None,
) -> Optional[Tuple[int, float]]:
    """Unique nonzero entry of column ``col`` of a monomial's matrix.

    The monomial maps ``basis`` into ``target`` (default: ``basis`` itself,
    which requires a photon-number-conserving monomial). Returns
    ``(row, amplitude)`` or ``None`` when an annihilator hits an empty mode
    or the result leaves the target sector.

    >>> b = enumerate_basis(3, 2)
    >>> row, amp = monomial_matrix_element(b, LadderMonomial((1,), (2,)), b.index((0, 2, 0)))
    >>> b.state(row), round(amp**2, 12)
    ((1, 1, 0), 2.0)
    """
    if not 0 <= col < basis.dim:
        raise IndexError(f"column {col} out of range for dimension {basis.dim}")
    mono.check_modes(basis.n_modes)
    target = basis if target is None else target
    if basis.n_photons + mono.photon_change != target.n_photons:
        return None
    occ, amp, alive = _apply_to_occupations(mono, basis.states[col : col + 1])
    if not alive[0]:
        return None
    return target.index(occ[0]), float(amp[0])


def apply_monomial(basis: FockBasis, mono: LadderMonomial, target: Optional[FockBasis] = None):
    """Vectorised :func:`monomial_matrix_element` over every column.

    Returns ``(rows, cols, amps)`` for the surviving columns.
    """
    mono.check_modes(basis.n_modes)
    target = basis if target is None else target
    if basis.n_photons + mono.photon_change != target.n_photons:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    occ, amp, alive = _apply_to_occupations(mono, basis.states)
    cols = np.flatnonzero(alive)
    return target.rank(occ[cols]), cols, amp[cols]


def monomial_matrix(basis: FockBasis, mono: LadderMonomial, target: Optional[FockBasis] = None) -> np.ndarray:
    """Dense matrix of a monomial from ``basis`` to ``target``."""
    target = basis if target is None else target
    rows, cols, amps = apply_monomial(basis, mono, target)
    out = np.zeros((target.dim, basis.dim))
    out[rows, cols] = amps
    return out
