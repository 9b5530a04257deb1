"""Exception types shared across the package."""

from __future__ import annotations


class RoundReachError(Exception):
    """Base class for all package-specific errors."""


class OrderMismatchError(RoundReachError, ValueError):
    """Arithmetic between cyclotomic numbers of different orders."""


class NotRealError(RoundReachError, ValueError):
    """A real-only operation was applied to a non-real value."""


class PrecisionExhaustedError(RoundReachError, RuntimeError):
    """Interval refinement hit the precision cap without deciding."""


class InternalInvariantError(RoundReachError, RuntimeError):
    """A proved invariant failed at runtime; indicates a bug, not bad input."""


class NonRationalSpectrumError(RoundReachError, ValueError):
    """The matrix has an eigenvalue outside the rationals."""


class ModulusOneSpectrumError(RoundReachError, ValueError):
    """An eigenvalue of modulus one where the method requires otherwise."""


class UnsupportedAngleError(RoundReachError, ValueError):
    """An angle that cannot be represented on the requested grid."""


class GadgetBrokenError(RoundReachError, ValueError):
    """A perturbation factor changed the boolean behaviour of some row."""


class UndecidableTieError(RoundReachError, RuntimeError):
    """An irrational rotation step could not be certified at the precision cap."""
