"""Exception types shared across the laboratory modules."""


class StrichartzLabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(StrichartzLabError, ValueError):
    """An argument violates a documented precondition."""


class BoxTooSmallError(StrichartzLabError):
    """A spatial box does not contain the required mass / kernel support."""


class GridTooCoarseError(StrichartzLabError):
    """A frequency lattice cannot hold a symbol inside the anti-aliasing margin.

    Carries ``required_n``, the smallest per-side sample count that would fit.
    """

    def __init__(self, msg, required_n=None):
        super().__init__(msg)
        self.required_n = required_n


class AccuracyError(StrichartzLabError):
    """A requested tolerance is unattainable; ``achievable`` holds the floor."""

    def __init__(self, msg, achievable=None):
        super().__init__(msg)
        self.achievable = achievable


class ConvergenceError(StrichartzLabError):
    """An iterative solver ran out of iterations; ``best`` holds its estimate."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class DegenerateInputError(StrichartzLabError):
    """An input is degenerate for the requested operation (e.g. zero weights)."""


class ConfigError(StrichartzLabError):
    """An experiment configuration failed validation."""
