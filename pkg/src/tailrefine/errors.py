"""Exception types raised by the library.

Everything derives from ``TailError`` (a ``ValueError``) so callers that only
care about "bad input" can catch one class.
"""


class TailError(ValueError):
    pass


class DomainError(TailError):
    """Natural parameter outside the open domain where the MGF is finite."""


class RangeError(TailError):
    """Target mean outside the open mean value range, or not an upper tail."""


class ConvergenceError(TailError):
    """Root finder exhausted its iteration budget."""


class DegenerateTiltError(TailError):
    """Tilt too close to zero for the tail corrections to be meaningful."""


class LatticeAlignmentError(TailError):
    """n * mu does not sit on the lattice of attainable sums."""


class ShiftError(TailError):
    """The shifted mean mu - c/n fell at or below the base mean."""


class UnsupportedModelError(TailError):
    pass


class InsufficientDataError(TailError):
    pass


class ModelSpecError(TailError):
    pass
