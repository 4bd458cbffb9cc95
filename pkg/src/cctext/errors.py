"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: ``DataError`` -> 2, ``InvariantError`` -> 3.
"""


class CctextError(Exception):
    pass


class DataError(CctextError, ValueError):
    """Bad or missing input data (unreadable image, malformed file, ...)."""


class SizingError(DataError):
    """An image is too small for the requested operation."""


class ModelFormatError(DataError):
    """A model file could not be parsed or has an unsupported version."""


class InvariantError(CctextError, RuntimeError):
    """An internal consistency check failed."""
