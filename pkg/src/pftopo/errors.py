"""Exception hierarchy shared by all modules."""


class PhaseFieldError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(PhaseFieldError, ValueError):
    """Invalid geometry, material, or run configuration."""


class SolverError(PhaseFieldError, RuntimeError):
    """An iterative linear solve did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InfeasibleError(PhaseFieldError):
    """The bound/volume projection has no admissible answer."""


class MultiplierError(PhaseFieldError):
    """The decay multiplier sigma hit the normalization singularity."""


class StalledSecantError(PhaseFieldError):
    """Two successive secant residuals are numerically identical."""


class DecayFailure(PhaseFieldError):
    """No objective-decreasing candidate found within the secant cap.

    ``best`` holds the lowest-J candidate seen as a dict with keys
    ``phi``, ``u``, ``J`` and ``sigma``; ``diagnostics`` lists every
    ``(sigma, F, J)`` evaluation in order.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or []
