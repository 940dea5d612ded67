"""Exception and warning types raised across the package."""

import numpy as np


class SingularMatrix(np.linalg.LinAlgError):
    """A pivot fell below the rank tolerance."""


class SingularSum(SingularMatrix):
    """``A + B`` is singular, so the LCP reduction does not exist."""


class NoConvergence(RuntimeError):
    """An iterative routine exhausted its iteration budget."""


class RangeViolation(ValueError):
    pass


class CapExceeded(ValueError):
    """An exponential enumeration was requested above its size cap."""


class InconsistencyDetected(AssertionError):
    """Two certificates contradict a proven implication; this is a bug."""


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(ValueError):
    pass


class ImpossiblePair(UserWarning):
    """A separation query contradicts a known implication."""
