"""Exception hierarchy shared by every module in the package."""


class MinSvdError(Exception):
    """Base class for all errors raised by minsvd."""


class DimensionError(MinSvdError, ValueError):
    """Operand shapes are incompatible."""


class NonFiniteError(MinSvdError, ValueError):
    """A NaN or Inf reached a module boundary."""


class ConvergenceError(MinSvdError, RuntimeError):
    """An inner iteration failed to converge."""


class HypothesisError(MinSvdError, ValueError):
    """A theoretical precondition does not hold."""


class MatrixMarketError(MinSvdError, ValueError):
    """Malformed Matrix Market input.

    ``lineno`` is the 1-based line where parsing failed, or None when the
    problem is not tied to a single line.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
