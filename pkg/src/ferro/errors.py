"""Typed failures shared across the package.

Every error that a caller can act on gets its own class; generic numeric
breakdown is NumericError so the CLI can map it to a dedicated exit code.
"""


class FerroError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FerroError):
    """Arguments violate a documented precondition."""


class DegenerateTensorError(FerroError):
    """Operation needs |Q| bounded away from zero and got |Q| ~ 0."""


class DegreeUndefinedError(FerroError):
    """Loop degree requested where |Q| < 1/2 somewhere on the loop."""


class ResolutionError(FerroError):
    """Sampling too coarse to resolve a winding/feature unambiguously."""


class FrameUndefinedError(FerroError):
    """Eigenframe propagation hit a node with |Q| below the clearing threshold."""


class NoProjectionError(FerroError):
    """Nearest-well projection requested outside its radius-1 domain."""


class NumericError(FerroError):
    """An iterative method failed to converge or produced garbage."""


class InfeasibleGeometryError(FerroError):
    """No admissible geometric solution (e.g. no valid connection)."""


class ConfigError(FerroError):
    """Malformed or inconsistent run configuration."""
