"""Exception types raised across the toolkit."""


class RppgError(Exception):
    """Base class for every error raised by rppgbench."""


# chunk I/O
class MissingFile(RppgError, FileNotFoundError):
    pass


class CorruptHeader(RppgError):
    pass


class InvariantViolation(RppgError, ValueError):
    """A domain object failed validation.

    ``invariant`` names the rule that was broken so callers can report it
    without parsing the message.
    """

    def __init__(self, invariant: str, message: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class IoFailure(RppgError, OSError):
    pass


# trace / estimators
class EmptyRoi(RppgError, ValueError):
    pass


class NoLandmarks(RppgError, ValueError):
    pass


# rates / metrics
class BandAboveNyquist(RppgError, ValueError):
    pass


class EmptyBand(RppgError, ValueError):
    pass


class FlatSignal(RppgError, ValueError):
    pass


class ConstantInput(RppgError, ValueError):
    pass


class EmptyList(RppgError, ValueError):
    pass


# factors
class SingularDesign(RppgError, ValueError):
    def __init__(self, columns, message: str = ""):
        self.columns = list(columns)
        names = ", ".join(self.columns)
        super().__init__(message or f"design matrix is singular; collinear columns: {names}")


class TooFewObservations(RppgError, ValueError):
    pass


class UnknownColumn(RppgError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown column"


# synth
class SpecInvalid(RppgError, ValueError):
    pass
