"""Exception hierarchy shared across the package."""


class ShearspecError(Exception):
    """Base class for all package errors."""


class ConfigError(ShearspecError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DomainError(ShearspecError):
    """A point or parameter lies outside the configured domain."""


class MassError(ShearspecError):
    """A fiber-mass requirement is violated (infinite where finite is needed, or vice versa)."""


class QuadratureError(ShearspecError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_tol: float | None = None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class ResolutionError(ShearspecError):
    """Grid or time-step resolution is insufficient for the requested operation."""


class ToleranceError(ShearspecError):
    """A numeric result failed its declared tolerance (CLI exit code 3)."""
