"""Exception hierarchy shared across the package.

Every error carries a short machine-parsable ``code`` that the CLI prints as
``error[<code>]: <message>`` on a single line before exiting nonzero.
"""

from __future__ import annotations


class ProcamError(Exception):
    """Base class for all package-specific errors."""

    code = "error"


class SchemaError(ProcamError):
    """A config or data file does not match its documented schema."""

    code = "schema"


class BehindDeviceError(ProcamError):
    """A point with non-positive depth was projected through a pinhole."""

    code = "behind-device"


class LimitError(ProcamError):
    """A pan/tilt state outside the configured mechanical limits."""

    code = "limit"


class EmptyObservationError(ProcamError):
    """An observation produced no usable samples (e.g. no visible corners)."""

    code = "empty-observation"


class DegenerateConfigurationError(ProcamError):
    """Input data admits no unique solution (collinear, coplanar, on-axis...)."""

    code = "degenerate"


class UnderdeterminedError(ProcamError):
    """Fewer independent constraints than unknowns."""

    code = "underdetermined"


class DecompositionError(ProcamError):
    """A matrix factorization produced a physically invalid result."""

    code = "decomposition"


class ConvergenceError(ProcamError):
    """Iterative refinement did not converge within the iteration cap.

    The best iterate seen so far is attached as ``best``.
    """

    code = "convergence"

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class EyeOnScreenPlaneError(ProcamError):
    """The eye lies on the virtual screen plane, so no projection exists."""

    code = "eye-on-screen"


class ImageFormatError(ProcamError):
    """An image file format is malformed or unsupported in this install."""

    code = "image-format"


class EmptyIntersectionError(ProcamError):
    """Two corner sets share no corner indices."""

    code = "empty-intersection"


class StageError(ProcamError):
    """A calibration pipeline stage failed; names the stage and wraps the cause."""

    code = "stage"

    def __init__(self, stage: str, cause: Exception | str):
        self.stage = stage
        self.cause = cause if isinstance(cause, Exception) else None
        super().__init__(f"stage '{stage}' failed: {cause}")
