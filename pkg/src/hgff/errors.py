"""Exception types raised across the package."""


class HGFFError(Exception):
    """Base class for all errors raised by hgff."""


class DomainError(HGFFError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(HGFFError):
    """A dense computation would exceed the configured vertex cap."""


class MasslessWithoutBoundary(HGFFError):
    """m = 0 with an empty boundary: the field and its partition function do not exist."""


class SingularSystem(HGFFError):
    """A linear system that should be solvable is singular (e.g. boundary unreachable)."""


class ReducibleChain(HGFFError):
    """The walk is reducible (second-largest eigenvalue equals one)."""


class EmptyStats(HGFFError):
    """Statistics were requested from an accumulator holding no samples."""
