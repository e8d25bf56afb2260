"""Exception hierarchy shared by all infobound modules."""


class InfoboundError(Exception):
    """Base class for library errors."""


class ValidationError(InfoboundError, ValueError):
    """A value violates a stated invariant (probability sums, Hermiticity, ...).

    ``invariant`` names the violated property; ``path`` is an optional
    JSON-pointer-like location filled in by the document layer.
    """

    def __init__(self, message, invariant=None, path=""):
        super().__init__(message)
        self.invariant = invariant
        self.path = path


class ShapeError(InfoboundError, ValueError):
    """Dimensions of two objects do not agree."""


class DomainError(InfoboundError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ResourceLimitError(InfoboundError):
    """A requested computation exceeds a configured size guard."""


class InfiniteSigmaError(InfoboundError):
    """A forward trajectory has zero reverse-reference weight."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class RegressionError(InfoboundError, AssertionError):
    """A reproduced reference value no longer matches."""
