"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front-end, so
each failure class maps to a distinct, documented process status.
"""


class BoutError(Exception):
    """Base class for all errors raised by boutmetrics."""

    exit_code = 1


class FileError(BoutError, OSError):
    exit_code = 3


class ParseError(BoutError, ValueError):
    exit_code = 4


class UnknownLabel(BoutError, KeyError):
    exit_code = 5

    def __str__(self):
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class GapError(ParseError):
    exit_code = 6


class LengthMismatch(BoutError, ValueError):
    exit_code = 7


class LabelSetMismatch(BoutError, ValueError):
    exit_code = 8


class OverlapError(BoutError, ValueError):
    exit_code = 9


class LikelihoodRangeError(ParseError):
    exit_code = 10


class NonFiniteCoordinate(ParseError):
    exit_code = 11


class FrameCountMismatch(LengthMismatch):
    exit_code = 12


class MissingKeypoint(BoutError, KeyError):
    exit_code = 13

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MissingScale(BoutError, ValueError):
    exit_code = 14


class PreconditionError(BoutError, ValueError):
    exit_code = 15


class UnitError(BoutError, ValueError):
    exit_code = 16


class ConfigError(BoutError, ValueError):
    exit_code = 17


class InfeasibleDensity(BoutError, ValueError):
    exit_code = 18


class TooLarge(BoutError, ValueError):
    exit_code = 19


class TimebaseMismatch(BoutError, ValueError):
    exit_code = 20


EXIT_CODES = {
    cls.__name__: cls.exit_code
    for cls in (
        BoutError,
        FileError,
        ParseError,
        UnknownLabel,
        GapError,
        LengthMismatch,
        LabelSetMismatch,
        OverlapError,
        LikelihoodRangeError,
        NonFiniteCoordinate,
        FrameCountMismatch,
        MissingKeypoint,
        MissingScale,
        PreconditionError,
        UnitError,
        ConfigError,
        InfeasibleDensity,
        TooLarge,
        TimebaseMismatch,
    )
}
