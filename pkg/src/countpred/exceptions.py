"""Exception hierarchy shared across the package."""


class CountPredError(Exception):
    """Base class for all errors raised by countpred."""


class ParseError(CountPredError, ValueError):
    """A data file contains a token that is not a non-negative integer."""

    def __init__(self, row, token, reason="not a non-negative integer"):
        self.row = row
        self.token = token
        super().__init__(f"row {row}: {token!r} is {reason}")


class DegenerateSeries(CountPredError, ValueError):
    pass


class InvalidState(CountPredError, ValueError):
    pass


class ZeroLikelihood(CountPredError, FloatingPointError):
    """A transition probability underflowed to zero."""

    def __init__(self, t, x_prev, x_next):
        self.t, self.x_prev, self.x_next = t, x_prev, x_next
        super().__init__(
            f"transition {x_prev} -> {x_next} at t={t} has probability 0"
        )


class NonConvergence(CountPredError, RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SingularInformation(CountPredError, ArithmeticError):
    pass


class ZeroGradient(CountPredError, ArithmeticError):
    pass


class InsufficientVisits(CountPredError, ValueError):
    pass


class TruncationTooTight(CountPredError, ValueError):
    pass


class DegeneratePoint(CountPredError, ValueError):
    pass


class TooManyRefitFailures(CountPredError, RuntimeError):
    pass
