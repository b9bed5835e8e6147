"""Few-photon dynamics and spectral statistics on a synthetic frequency lattice."""

__version__ = "0.1.0"

from .basis import FockBasis, LadderMonomial, enumerate_basis
from .dynamics import DbarPeakTrigger, QuenchSchedule, StateVector, evolve, initial_gaussian_pair
from .hamiltonian import ModelParams, build_hamiltonian
from .spectral import DisorderEnsemble, r_statistic, r_statistic_ensemble, sff_exact, sff_theory

__all__ = [
    "DbarPeakTrigger",
    "DisorderEnsemble",
    "FockBasis",
    "LadderMonomial",
    "ModelParams",
    "QuenchSchedule",
    "StateVector",
    "build_hamiltonian",
    "enumerate_basis",
    "evolve",
    "initial_gaussian_pair",
    "r_statistic",
    "r_statistic_ensemble",
    "sff_exact",
    "sff_theory",
]
