"""Semantic exception hierarchy shared across the package."""


class GenboundError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GenboundError, ValueError):
    """Malformed or inconsistent inputs: bad shapes, bad weights, caps exceeded."""


class DomainError(GenboundError, ValueError):
    """Arguments outside a function's mathematical domain."""


class AbsoluteContinuityError(GenboundError, ValueError):
    """A density ratio was requested where the reference measure vanishes."""


class UnsupportedGeometryError(GenboundError, ValueError):
    """A geometric operation was asked for outside the supported (Euclidean) setting."""


class InvalidProcessError(GenboundError, ValueError):
    """A stochastic process fails its increment or centering requirements."""
