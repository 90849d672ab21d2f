"""Exception types shared across the package."""


class WmpropError(Exception):
    """Base class for all package-specific errors."""


class DomainError(WmpropError):
    """An argument lies outside its documented domain."""


class EmptyDataset(WmpropError):
    """An operation that needs samples received none."""


class DegenerateDenominator(WmpropError):
    """A plug-in denominator vanished; the requested quantity is not identifiable
    from the supplied data (the green-red binary case is the canonical example)."""


class ConvergenceError(WmpropError):
    """An iteration budget was exhausted before reaching tolerance.

    Carries the best iterate seen so callers can still inspect it.
    """

    def __init__(self, message: str, best: float | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ParseError(WmpropError):
    """A data file failed to parse; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line
