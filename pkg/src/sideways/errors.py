"""Exception hierarchy."""


class SidewaysError(Exception):
    """Base class for all errors raised by this package."""


class GridError(SidewaysError, ValueError):
    """Malformed grid, grid function or grid mismatch."""


class SingularPointError(SidewaysError, ArithmeticError):
    """A kernel was evaluated on (or numerically at) its singular set."""


class InvalidEpsilon(SidewaysError, ValueError):
    """Noise level outside the admissible interval (0, e^-3)."""


class InvalidSource(SidewaysError, ValueError):
    """The heat source produced non-finite values."""


class NonContractive(SidewaysError):
    """The integral operator is not a contraction on the working grid (K >= 1)."""

    def __init__(self, k_estimate: float):
        super().__init__(f"contraction constant K = {k_estimate:.6g} >= 1")
        self.k_estimate = k_estimate


class NoConvergence(SidewaysError):
    """An iteration hit its iteration cap; ``report`` holds the diagnostics."""

    def __init__(self, message: str, report):
        super().__init__(message)
        self.report = report


class ConfigError(SidewaysError, ValueError):
    """Invalid run configuration."""


class InsufficientRows(SidewaysError, ValueError):
    """A rate fit was requested on fewer than three rows."""
