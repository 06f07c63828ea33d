"""Exception types raised by the library.

Each class corresponds to one failure kind that callers may want to catch
separately; the CLI maps them onto process exit codes.
"""


class SpgroundError(Exception):
    """Base class for all library errors."""


class InvalidGridError(SpgroundError, ValueError):
    """Grid parameters out of range (R <= 0, too few intervals, ...)."""


class GridMismatchError(SpgroundError, ValueError):
    """Fields or operators built on different grids were combined."""


class DomainMismatchError(SpgroundError, ValueError):
    """Target domain incompatible with the source (resample, cutoff)."""


class UnsupportedExponentError(SpgroundError, ValueError):
    """Exponent outside the range an operation is defined for."""


class InvalidScaleError(SpgroundError, ValueError):
    """Non-positive or non-finite scale factor."""


class OracleSizeError(SpgroundError, ValueError):
    """Brute-force reference path refused: grid too large for O(N^2) work."""


class ZeroFieldError(SpgroundError, ValueError):
    """Operation undefined for the identically zero field."""


class NonuniquenessError(SpgroundError, ValueError):
    """Scalar fiber map not single-valued for this exponent range."""


class UnsupportedCombinationError(SpgroundError, ValueError):
    """Family / potential / manifold combination outside the theory."""


class ValidationError(SpgroundError, ValueError):
    """Configuration or input validation failed.

    Carries the full list of violations so callers can report all of them
    at once instead of fixing them one by one.
    """

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class StagnationError(SpgroundError, RuntimeError):
    """Descent made no progress; carries a diagnostic snapshot."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
