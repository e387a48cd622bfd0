"""Exception types shared across the package."""


class DiscFillError(Exception):
    """Base class for all package errors."""


class StructureError(DiscFillError):
    """Almost complex structure data is inconsistent or out of range."""


class DegenerateHypersurfaceError(DiscFillError):
    """Defining function loses rank at the requested point."""


class PreconditionError(DiscFillError):
    """Operator input violates a documented precondition."""


class NonConvergenceError(DiscFillError):
    """Iterative solve failed to reach the requested tolerance."""

    def __init__(self, message, iterations=None, residuals=None, contraction=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = residuals
        self.contraction = contraction


class DegenerateBoundaryJacobianError(DiscFillError):
    """Boundary linearization became singular along the iterate."""


class ConfigError(DiscFillError):
    """Experiment configuration is invalid."""


class InconclusiveRankError(DiscFillError):
    """Singular values cluster at the rank threshold."""
