"""Exception types shared across the package."""


class QecBoundsError(Exception):
    """Base class for all package errors."""


class LabelError(QecBoundsError, KeyError):
    """A subsystem label is unknown or duplicated."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ShapeError(QecBoundsError, ValueError):
    """Dimensions of operands do not fit together."""


class DomainError(QecBoundsError, ValueError):
    """A parameter lies outside its admissible range."""


class ResourceError(QecBoundsError, ValueError):
    """A requested object would exceed a configured size cap."""


class SolverError(QecBoundsError, RuntimeError):
    """The conic solver broke down numerically."""


class CertificationError(QecBoundsError, RuntimeError):
    """Rank minimization or rank-loop certification failed."""


class ExtractionError(QecBoundsError, RuntimeError):
    """A certificate could not be factored into an encoder/decoder pair."""


class ConstructionError(QecBoundsError, RuntimeError):
    """A built object failed its own consistency check."""


class DegenerateInput(QecBoundsError, ValueError):
    """The input makes the requested quantity ill-defined."""
