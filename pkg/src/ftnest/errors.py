"""Exception hierarchy shared by all ftnest modules."""


class FtnError(Exception):
    """Base class for ftnest errors."""


class ParameterError(FtnError, ValueError):
    """Invalid configuration or argument."""


class GridError(ParameterError):
    """Packing ratio does not land on the sample grid (alpha * I not an integer)."""


class FormatError(FtnError):
    """A binary file is malformed, truncated or of an unsupported version."""


class CapacityError(FtnError):
    """A sample stream is too short for the requested number of decisions."""


class UnreachableTargetError(FtnError):
    """An accuracy target cannot be reached for the given decision statistics."""
