"""Exception hierarchy shared across the package."""


class DomainWallError(Exception):
    """Base class for all package errors."""


class DimensionError(DomainWallError, ValueError):
    """Array or bitstring length does not match the model."""


class DomainError(DomainWallError, ValueError):
    """A value lies outside its admissible alphabet or range."""


class ParameterError(DomainWallError, ValueError):
    """A numeric parameter is outside its allowed range."""


class StructureError(DomainWallError, ValueError):
    """A model does not have the structure an operation requires."""


class ResourceError(DomainWallError, RuntimeError):
    """An exhaustive computation would exceed its size cap."""


class BracketError(DomainWallError, ValueError):
    """A target value is not reachable inside a search bracket."""


class ExtrapolationError(DomainWallError, ValueError):
    """A lookup falls outside the range of a tabulated function."""
