"""Exception types raised by the solver library."""


class ConfigurationError(ValueError):
    """Invalid user input: degrees, dimensions, material or case settings."""


class DomainError(ValueError):
    """A parameter value lies outside the knot range or the model domain."""


class GeometryError(RuntimeError):
    """Degenerate geometry, e.g. a non-positive Jacobian inside a cell."""


class ModelError(RuntimeError):
    """Inconsistent multipatch model, e.g. non-matching interfaces."""


class NumericalError(RuntimeError):
    """Factorization breakdown or iterative solver failure."""
