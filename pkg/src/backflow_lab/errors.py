"""Exception types shared across the library and mapped to CLI exit codes."""


class BackflowLabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(BackflowLabError):
    """Invalid configuration or quadrature specification (CLI exit code 2)."""


class ContractViolation(BackflowLabError):
    """A caller broke a documented precondition."""


class NumericalDomainError(BackflowLabError):
    """An integrand or operand left its numerical domain (non-finite values)."""


class RangeOverflowError(BackflowLabError):
    """Requested evaluation lies in a floating-point overflow region."""


class ConvergenceError(BackflowLabError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ClassicalRegimeError(BackflowLabError):
    """State or quantity undefined at the classical point (epsilon = 0)."""


class DegenerateStateError(BackflowLabError):
    """State parameters produce a zero or non-normalizable wavefunction."""


class ResolutionError(BackflowLabError):
    """Grid or quadrature too coarse for the requested tolerance."""
