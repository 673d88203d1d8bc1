class CrossingsError(Exception):
    """Base class for every error raised by the crossings package."""


class DomainError(CrossingsError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateQuadError(DomainError):
    """Two boundary points of a quad coincide."""


class EnumerationCapError(DomainError):
    """A graph has too many bonds for exhaustive enumeration."""


class ConvergenceError(CrossingsError, ArithmeticError):
    """A series did not converge within its hard term cap.

    Carries the partial sum reached and a bound on the neglected remainder.
    """

    def __init__(self, message: str, partial: float, bound: float):
        super().__init__(f"{message} (partial={partial!r}, bound={bound!r})")
        self.partial = partial
        self.bound = bound


class ConfigError(CrossingsError):
    """An experiment document failed validation."""
