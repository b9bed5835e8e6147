"""Exception types raised across the package."""


class SynthDimError(Exception):
    """Base class for all package errors."""


class CapacityError(SynthDimError, ValueError):
    """Hilbert-space dimension exceeds the configured maximum."""


class DomainError(SynthDimError, ValueError):
    """An argument lies outside the domain of the operation."""


class HermiticityError(SynthDimError, RuntimeError):
    """An assembled operator failed its Hermiticity self-check."""


class ConvergenceError(SynthDimError, RuntimeError):
    """A numerical routine failed to reach its accuracy target.

    The best residual achieved is stored on ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TooFewLevelsError(SynthDimError, ValueError):
    """Not enough eigenvalues remain to form spacing ratios."""


class DegenerateSpectrumError(SynthDimError, ValueError):
    """Too many spacings were dropped as degenerate to classify the spectrum."""


class SectorError(SynthDimError, ValueError):
    """A state lives in the wrong photon-number sector, or bases disagree."""


class CalibrationError(SynthDimError, ValueError):
    """Single-photon calibration produced an unphysical amplitude."""


class InversionError(SynthDimError, ValueError):
    """Two-photon amplitude inversion is inconsistent with the data."""


class ConfigError(SynthDimError, ValueError):
    """Configuration text is malformed or fails validation."""
