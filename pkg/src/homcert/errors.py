"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A computation could not be carried out to its certified accuracy.

    Raised for floating-point underflow of a normalising quantity, truncation
    tails above their configured bound, or non-PSD matrices beyond round-off.
    """
