"""Exception hierarchy.

Two families matter to callers and to the CLI exit codes: ``ValidationError``
(bad input, exit code 2) and ``NumericalError`` (a computation broke down on
otherwise valid input, exit code 3).
"""


class QStatError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QStatError, ValueError):
    pass


class NumericalError(QStatError, ArithmeticError):
    pass


# input validation
class NotHermitian(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class NonPositiveSpectrum(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ArityMismatch(ValidationError):
    pass


class UnsupportedArity(ValidationError):
    pass


class InvalidOrdering(ValidationError):
    pass


class EvenDimension(ValidationError):
    pass


class NotPure(ValidationError):
    pass


class NotAState(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class MalformedInput(ValidationError):
    pass


# numerical breakdown
class EigensolverFailure(NumericalError):
    pass


class BranchAmbiguity(NumericalError):
    pass


class ZeroPostSelection(NumericalError):
    pass


class OrthogonalSelection(NumericalError):
    pass


class SamplerFailure(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class SingularWeighting(NumericalError):
    pass


class MaxIterations(NumericalError):
    pass
