"""Exception hierarchy shared by every module in the package."""


class BinomTVError(Exception):
    """Base class for all package errors."""


# precision / arithmetic

class PrecisionTooLow(BinomTVError, ValueError):
    pass


class MPOverflow(BinomTVError, OverflowError):
    pass


class MPUnderflow(BinomTVError, ArithmeticError):
    pass


class DomainError(BinomTVError, ValueError):
    pass


class DivisionByZero(BinomTVError, ZeroDivisionError):
    pass


class CalibrationUnstable(BinomTVError):
    pass


# hat distribution

class RegionTooSmall(BinomTVError, ValueError):
    """n*p*(1-p) is below the transformed-rejection validity threshold."""


class DominationFailure(BinomTVError):
    pass


# exact oracles

class ResourceLimit(BinomTVError, ValueError):
    pass


class SupportMismatch(BinomTVError, ValueError):
    pass


class EmptyHistogram(BinomTVError, ValueError):
    pass


# sampler / budget

class InvalidParam(BinomTVError, ValueError):
    pass


class BudgetExceeded(BinomTVError):
    """Raised when a certified distance bound does not fit the caller's budget.

    ``accumulated`` is the budget consumed before the failing charge and
    ``label`` names the charge (or sampler call) that did not fit.
    """

    def __init__(self, message, *, accumulated=None, label=None, bound=None):
        super().__init__(message)
        self.accumulated = accumulated
        self.label = label
        self.bound = bound


class ZetaFloor(BinomTVError):
    """The Lanczos term alone exceeds the requested distance; raise t."""


# DNF counting

class ParseError(BinomTVError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TooManyVariables(BinomTVError, ValueError):
    pass


class CountTooLarge(BinomTVError, ValueError):
    pass
