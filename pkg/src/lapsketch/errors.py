"""Exception types shared across the package.

The CLI maps these onto exit codes, so each family gets its own base class.
"""


class LapSketchError(Exception):
    """Base class for every error raised by this package."""


class IngestError(LapSketchError, ValueError):
    """Malformed or unsupported graph input (self-loops, bad weights, bad file)."""


class PreconditionError(LapSketchError, ValueError):
    """An operation was called outside its documented domain."""


class DimensionError(PreconditionError):
    """A query vector does not match the vertex count."""


class DomainError(PreconditionError):
    """Input is structurally invalid for the operation (empty cut, disconnected graph...)."""


class RangeViolation(PreconditionError):
    """A right-hand side is not orthogonal to the all-ones vector on some component."""

    def __init__(self, component: int, residual: float, tol: float):
        self.component = component
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"vector is not in the Laplacian range: component {component} "
            f"has residual mass {residual:.3e} (tolerance {tol:.3e})"
        )


class CertificationError(LapSketchError, RuntimeError):
    """A built object failed its own spectral self-check."""

    def __init__(self, message: str, measured: float | None = None):
        self.measured = measured
        super().__init__(message)
