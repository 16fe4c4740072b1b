"""Exception hierarchy.

Checker failures carry the offending report so callers (the CLI in
particular) can serialize what went wrong instead of just a message.
"""


class ParafreqError(Exception):
    """Base class for every error raised by the package."""


class TimeOutOfWindow(ParafreqError, ValueError):
    pass


class UnsupportedBackground(ParafreqError, ValueError):
    pass


class ReprMismatch(ParafreqError, TypeError):
    pass


class DegreeTooLarge(ParafreqError, ValueError):
    pass


class KernelNotPositive(ParafreqError, ArithmeticError):
    pass


class NodeSingularity(ParafreqError, ArithmeticError):
    pass


class ZeroSolution(ParafreqError, ArithmeticError):
    pass


class DualFormMismatch(ParafreqError, ArithmeticError):
    pass


class IllConditioned(ParafreqError, ArithmeticError):
    pass


class ConfigError(ParafreqError, ValueError):
    pass


class IoError(ParafreqError, OSError):
    pass


class CheckFailure(ParafreqError, AssertionError):
    """A numerical checker found its inequality or identity violated."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MonotonicityViolation(CheckFailure):
    pass


class NotStationary(CheckFailure):
    pass


class BoundViolation(CheckFailure):
    pass
