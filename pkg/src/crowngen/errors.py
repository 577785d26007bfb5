"""Exception types shared across the pipeline.

Size, parameter, and degeneracy violations raise plain ValueError; the
classes below exist where the CLI needs a distinct exit code.
"""


class TopologyError(Exception):
    """Mesh connectivity prevents the requested operation."""


class NoBoundaryError(TopologyError):
    """The mesh is watertight: no boundary edge to extract a margin from."""


class NumericalError(Exception):
    """A computation produced NaN or diverged."""
