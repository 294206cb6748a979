"""Exception hierarchy shared by every plcert module."""


class PLCertError(Exception):
    """Base class for all recoverable plcert errors."""


class DomainError(PLCertError, ValueError):
    """A point or interval lies outside the domain of a map."""


class BudgetExceeded(PLCertError):
    """Piece count or coefficient bit-length exceeded a PieceBudget."""

    def __init__(self, message, pieces=None, bits=None):
        super().__init__(message)
        self.pieces = pieces
        self.bits = bits


class PreconditionError(PLCertError):
    pass


class NotMarkovWithinHorizon(PLCertError):
    """Cut-set closure did not stabilize; ``cuts`` holds the partial set."""

    def __init__(self, message, cuts=()):
        super().__init__(message)
        self.cuts = tuple(cuts)


class NoInteriorFixedPoint(PLCertError):
    pass


class ClassificationUnavailable(PLCertError):
    pass


class HypothesisFailed(PLCertError):
    pass


class CoverageTimeout(PLCertError):
    """No qualifying time was found inside the search horizon."""


class DisjointnessFailure(PLCertError):
    pass


class ReplayFailure(PLCertError):
    """A recorded certificate fact failed exact re-verification."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ParseError(PLCertError):
    def __init__(self, message, line=0, column=0):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class ValidationError(PLCertError):
    def __init__(self, message, line=0):
        super().__init__(f"{line}: {message}" if line else message)
        self.line = line
        self.reason = message


class UnknownBuiltin(PLCertError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
