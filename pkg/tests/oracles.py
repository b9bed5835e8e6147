"""Independent reference implementations used by the tests.

Nothing here imports the package's Hamiltonian or dynamics code; each oracle
builds its answer from first principles on a small truncated Fock space.
"""

from __future__ import annotations

import itertools
import math
from functools import reduce

import numpy as np


def full_space_ladders(n_modes: int, cutoff: int):
    """Annihilation operators on the product space with 0..cutoff photons per mode."""
    d = cutoff + 1
    a1 = np.diag(np.sqrt(np.arange(1, d)), k=1)
    eye = np.eye(d)
    ops = []
    for k in range(n_modes):
        factors = [a1 if j == k else eye for j in range(n_modes)]
        ops.append(reduce(np.kron, factors))
    return ops


def full_space_occupations(n_modes: int, cutoff: int) -> np.ndarray:
    return np.array(list(itertools.product(range(cutoff + 1), repeat=n_modes)))


def sector_projector_indices(n_modes: int, cutoff: int, states: np.ndarray) -> np.ndarray:
    """Row of each fixed-p basis state inside the full product space."""
    d = cutoff + 1
    weights = d ** np.arange(n_modes - 1, -1, -1)
    return states @ weights


def _sinc(x: float) -> float:
    return 1.0 if x == 0 else math.sin(x) / x


def naive_hamiltonian(n_modes, n_photons, K, phi, tilt, g, chi, mode, weight_mode="unit", ratio=1e3):
    """Full product-space Hamiltonian from explicit ladder-operator products."""
    cutoff = max(n_photons, 1)
    a = full_space_ladders(n_modes, cutoff)
    ad = [op.conj().T for op in a]
    dim = a[0].shape[0]
    h = np.zeros((dim, dim), dtype=complex)
    offsets = [n - (n_modes + 1) / 2 for n in range(1, n_modes + 1)]
    freqs = [ratio + o for o in offsets]
    for mu in range(1, len(K) + 1):
        for n in range(1, n_modes - mu + 1):
            w = 1.0
            if weight_mode == "frequency_weighted":
                w = 2 * math.sqrt(freqs[n - 1] * freqs[n + mu - 1]) / (freqs[n - 1] + freqs[n + mu - 1])
            term = K[mu - 1] * w * np.exp(1j * phi[mu - 1]) * ad[n - 1] @ a[n + mu - 1]
            h -= term + term.conj().T
    for n in range(1, n_modes + 1):
        h -= n * tilt * ad[n - 1] @ a[n - 1]
    if mode == "full_fwm":
        for n, m, p, q in itertools.product(range(n_modes), repeat=4):
            if n + m != p + q:
                continue
            theta = chi * (offsets[n] ** 2 + offsets[m] ** 2 - offsets[p] ** 2 - offsets[q] ** 2)
            coeff = -0.5 * g * np.exp(1j * theta) * _sinc(theta)
            h += coeff * ad[n] @ ad[m] @ a[p] @ a[q]
    elif mode == "local_limit":
        for n in range(n_modes):
            h -= 0.5 * g * ad[n] @ ad[n] @ a[n] @ a[n]
        for n, m in itertools.permutations(range(n_modes), 2):
            h -= g * (ad[n] @ a[n]) @ (ad[m] @ a[m])
    elif mode == "local_gauge":
        for n in range(n_modes):
            h += 0.5 * g * ad[n] @ ad[n] @ a[n] @ a[n]
    else:
        raise ValueError(mode)
    return h, cutoff


def naive_sector_hamiltonian(states, **kw):
    n_modes = states.shape[1]
    n_photons = int(states[0].sum())
    h, cutoff = naive_hamiltonian(n_modes, n_photons, **kw)
    idx = sector_projector_indices(n_modes, cutoff, states)
    return h[np.ix_(idx, idx)]


def pair_state_by_expansion(f: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Coefficients of ``(sum_n f_n a_n^dag)^2 |0>`` on normalised Fock states.

    Expands the square as a polynomial in commuting creation operators: the
    monomial ``a_i^dag a_j^dag`` appears with weight ``2 f_i f_j`` for
    ``i < j`` and ``f_i^2`` for ``i = j``; acting on vacuum the latter gives
    ``sqrt 2 |2_i>``.
    """
    poly = {}
    for i, j in itertools.product(range(f.size), repeat=2):
        key = tuple(sorted((i, j)))
        poly[key] = poly.get(key, 0.0) + f[i] * f[j]
    out = np.zeros(states.shape[0])
    for k, occ in enumerate(states):
        idx = tuple(np.repeat(np.arange(f.size), occ))
        vac_norm = math.sqrt(math.prod(math.factorial(int(o)) for o in occ))
        out[k] = poly.get(idx, 0.0) * vac_norm
    return out / np.linalg.norm(out)


def rk4_schrodinger(h: np.ndarray, psi0: np.ndarray, t: float, steps: int = 4000) -> np.ndarray:
    """Fixed-step classical RK4 for ``i d psi/dt = H psi``."""
    dt = t / steps
    psi = psi0.astype(complex)
    f = lambda v: -1j * (h @ v)
    for _ in range(steps):
        k1 = f(psi)
        k2 = f(psi + 0.5 * dt * k1)
        k3 = f(psi + 0.5 * dt * k2)
        k4 = f(psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def beam_splitter_oracle(U1: np.ndarray, U2_col: dict, alpha: int, beta: int, delay: float):
    """Coincidence amplitudes from explicit creation-operator bookkeeping.

    Modes are labelled ``(port, frequency)``; states are dictionaries from a
    sorted tuple of labels to amplitude. ``U1`` is the single-photon
    evolution matrix and ``U2_col`` maps sorted frequency pairs to the
    two-photon amplitude ``<mu nu|U|alpha beta>`` (normalised states).
    Returns probabilities of (both_r, both_t, alpha_r_beta_t, beta_r_alpha_t)
    for ``alpha != beta``.
    """
    s = 1 / math.sqrt(2)

    def bs(port):  # creation operator of an input port in terms of outputs
        return [("r", s), ("t", s)] if port == "in" else [("r", s), ("t", -s)]

    def normal(key):
        # normalisation <0| a..a a^dag..a^dag |0> for a monomial key
        counts = {}
        for lab in key:
            counts[lab] = counts.get(lab, 0) + 1
        return math.sqrt(math.prod(math.factorial(c) for c in counts.values()))

    # first splitter: alpha enters "in", beta enters "u"
    state = {}
    for (pa, ca), (pb, cb) in itertools.product(bs("in"), bs("u")):
        key = tuple(sorted([(pa, alpha), (pb, beta)]))
        state[key] = state.get(key, 0) + ca * cb  # monomial coefficients

    # ring on "r" arm, delay on "t" arm; the "r" output feeds port "in" of BS2
    mid = {}
    for key, c in state.items():
        ring = [f for p, f in key if p == "r"]
        dly = [f for p, f in key if p == "t"]
        phase = np.exp(1j * delay * len(dly))
        if len(ring) == 2:
            # monomial a^dag_a a^dag_b |0> equals normalised |ab> (a != b)
            for (mu, nu), amp in U2_col.items():
                mono_norm = math.sqrt(2) if mu == nu else 1.0
                k2 = (("in", mu), ("in", nu))
                mid[k2] = mid.get(k2, 0) + c * amp / mono_norm
        elif len(ring) == 1:
            for mu in range(U1.shape[0]):
                k2 = tuple(sorted([("in", mu), ("u", dly[0])]))
                mid[k2] = mid.get(k2, 0) + c * U1[mu, ring[0]] * phase
        else:
            k2 = tuple(sorted([("u", f) for f in dly]))
            mid[k2] = mid.get(k2, 0) + c * phase

    out = {}
    for key, c in mid.items():
        (p1, f1), (p2, f2) = key
        for (q1, c1), (q2, c2) in itertools.product(bs(p1), bs(p2)):
            k3 = tuple(sorted([(q1, f1), (q2, f2)]))
            out[k3] = out.get(k3, 0) + c * c1 * c2

    def prob(labels):
        key = tuple(sorted(labels))
        amp = out.get(key, 0) * normal(key)
        return abs(amp) ** 2

    return np.array(
        [
            prob([("r", alpha), ("r", beta)]),
            prob([("t", alpha), ("t", beta)]),
            prob([("r", alpha), ("t", beta)]),
            prob([("r", beta), ("t", alpha)]),
        ]
    )
