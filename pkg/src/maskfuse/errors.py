"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: validation-type failures exit
with 2, missing inputs with 3, anything else (an internal invariant that
should never trip) with 4.
"""


class MaskFuseError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatchError(MaskFuseError):
    """Two masks (or tracks) that must share dimensions do not."""


class ValidationError(MaskFuseError):
    """Structurally invalid input: manifest, config, RLE payload, parameters."""


class CorruptEncodingError(ValidationError):
    """An RLE payload whose counts do not describe a mask of the stated size."""


class MissingInputError(MaskFuseError):
    """A referenced file, track or prediction is absent."""
