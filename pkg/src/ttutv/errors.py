"""Exception types raised across the package."""


class ResourceLimitError(MemoryError):
    """Raised when an operation would materialize more elements than allowed."""


class ConvergenceError(ArithmeticError):
    """An iterative kernel hit its iteration cap.

    Attributes
    ----------
    iterations : int
        Number of sweeps performed.
    residual : float
        Size of the remaining off-diagonal coupling when the cap was reached.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class BoundViolation(AssertionError):
    """A decomposition exceeded its a-priori error bound."""

    def __init__(self, achieved, bound, slack):
        super().__init__(
            f"achieved error {achieved:.6e} exceeds bound {bound:.6e} "
            f"(+ slack {slack:.3e})"
        )
        self.achieved = achieved
        self.bound = bound
        self.slack = slack


class InvariantError(AssertionError):
    """An internal consistency check failed (debug instrumentation)."""


class FormatError(ValueError):
    """Malformed tensor or TT file.

    Attributes
    ----------
    offset : int
        Byte offset at which parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class MagicMismatch(FormatError):
    pass


class TruncatedPayload(FormatError):
    def __init__(self, expected, actual, offset):
        super().__init__(
            f"payload truncated: expected {expected} bytes, got {actual}", offset
        )
        self.expected = expected
        self.actual = actual


class DimsOverflow(FormatError):
    pass
