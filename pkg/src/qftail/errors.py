"""Exception hierarchy.

``QFTailInputError`` subclasses signal bad user input (exit status 2 in the
CLI); ``QFTailNumericalError`` subclasses signal a numerical failure of an
otherwise valid request (exit status 1).
"""


class QFTailError(Exception):
    """Base class for all package errors."""


class QFTailInputError(QFTailError, ValueError):
    pass


class QFTailNumericalError(QFTailError, ArithmeticError):
    pass


# --- input validation ---

class NonSymmetricError(QFTailInputError):
    pass


class NotPositiveDefiniteError(QFTailInputError):
    pass


class NotPSDError(QFTailInputError):
    pass


class NonPositiveThresholdError(QFTailInputError):
    pass


class DegenerateFormError(QFTailInputError):
    """The form matrix has no eigenvalue above the rank tolerance."""


class NonZeroMeanError(QFTailInputError):
    pass


class DegenerateProbabilityError(QFTailInputError):
    pass


class BaseOutOfRangeError(QFTailInputError):
    pass


class ConfigError(QFTailInputError):
    pass


class ProblemFileError(QFTailInputError):
    pass


# --- numerical failures ---

class IterationLimitError(QFTailNumericalError):
    pass


class DegenerateWeightError(QFTailNumericalError):
    pass


class QuadratureFailure(QFTailNumericalError):
    pass


class NoConvergenceError(QFTailNumericalError):
    pass


class AtMeanSingularityError(QFTailNumericalError):
    pass


class ZeroEstimateError(QFTailNumericalError):
    pass
