"""Exception hierarchy shared by all modules."""


class SolitonError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(SolitonError, ValueError):
    """Malformed input (mismatched lengths, wrong shapes, bad grids)."""


class ParameterError(SolitonError, ValueError):
    """A numerical parameter is outside its admissible range."""


class ValidationError(SolitonError, ValueError):
    """Input violates a mathematical invariant.

    ``violations`` carries the individual findings when available.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SpectralParseError(SolitonError, ValueError):
    """Syntax error in a spectral data file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ResolutionError(ParameterError):
    """Sampled data too coarse for the requested evaluation range."""


class ConvergenceError(SolitonError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularSynthesisError(ConvergenceError):
    """det(1 + iM(x)) vanishes (numerically) at some grid node."""


class IllPosedError(ConvergenceError):
    """Linear system conditioning exceeds the allowed bound."""
