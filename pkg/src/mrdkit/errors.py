"""Exception types raised across mrdkit."""

import numpy as np


class MrdError(Exception):
    """Base class for all mrdkit errors."""


class InvalidInputError(MrdError, ValueError):
    """Arguments violate a documented precondition."""


class SingularSystemError(MrdError, np.linalg.LinAlgError):
    """A linear system is singular and no pseudoinverse fallback was allowed."""


class ConvergenceError(MrdError, RuntimeError):
    """An iterative solver hit its iteration cap.

    Extra keyword arguments are kept on ``details`` so callers can report the
    last bracket, norm or gradient without parsing the message.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class DataError(MrdError, ValueError):
    """A data file or manifest could not be parsed."""


class DegenerateInputWarning(UserWarning):
    """A fallback value was substituted for a degenerate quantity."""


class PairwiseError(MrdError, RuntimeError):
    """A distance failed inside a pairwise computation; ``pair`` is ``(i, j)``."""

    def __init__(self, i, j, cause):
        super().__init__(f"distance ({i}, {j}) failed: {type(cause).__name__}: {cause}")
        self.pair = (i, j)
        self.cause = cause
