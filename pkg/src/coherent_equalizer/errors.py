"""Exception hierarchy shared by the synthesis modules."""


class EqualizerError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(EqualizerError, ValueError):
    """Matrix shapes are inconsistent."""


class PreconditionError(EqualizerError):
    """An operation's mathematical precondition does not hold.

    Raised e.g. for a non-Hurwitz drift matrix, a missing stabilizing
    Riccati solution, or a controller that is not bounded real.
    """


class NumericalError(EqualizerError):
    """A computed result failed its own residual check."""


class ConfigError(EqualizerError):
    """The problem configuration could not be parsed or validated."""
