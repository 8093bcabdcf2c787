"""Exception hierarchy shared by the solver modules."""


class DelayWaveError(Exception):
    """Base class; every computation failure derives from this."""


class FamilyError(DelayWaveError, ValueError):
    pass


class NoBracket(DelayWaveError):
    pass


class EnvelopeDegenerate(DelayWaveError):
    pass


class NonpositiveRho(DelayWaveError):
    pass


class ResidualNaN(DelayWaveError):
    pass


class SingularJacobian(DelayWaveError):
    pass


class NoConvergence(DelayWaveError):
    pass


class MonotonicityLost(DelayWaveError):
    """Raised by the continuation when a converged step leaves the monotone class."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class ContinuationStalled(DelayWaveError):
    def __init__(self, message, last_tau):
        super().__init__(message)
        self.last_tau = last_tau


class TailTooShort(DelayWaveError):
    pass


class RootNotFound(DelayWaveError):
    pass


class BlowUp(DelayWaveError):
    pass


class WindowTooShort(DelayWaveError):
    pass


class ConfigError(DelayWaveError):
    """Bad configuration text; carries the 1-based line (and column when known)."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class UnknownCommand(DelayWaveError):
    pass


class InvalidStep(DelayWaveError, ValueError):
    """Time step incompatible with the delay."""
