class IndepError(Exception):
    """Base class for every error raised by the indep library."""


class SpaceMismatch(IndepError):
    pass


class TooLarge(IndepError):
    pass


class TrivialAlgebra(IndepError):
    pass


class MeasureMismatch(IndepError):
    pass


class NotAProbability(IndepError):
    pass


class ZeroMeasure(IndepError):
    pass


class UnknownAlgebraIndex(IndepError):
    pass


class InvariantViolation(IndepError):
    """An identity that must hold exactly did not; always a bug, never bad input."""
