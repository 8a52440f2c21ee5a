"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`ReductionError`, which is itself a ``ValueError`` so that callers
validating user input can catch a single familiar type.
"""


class ReductionError(ValueError):
    """Base class for all package errors."""


class NonHermitianInput(ReductionError):
    pass


class EmptySpectrum(ReductionError):
    pass


class InvalidSpectrum(ReductionError):
    pass


class InvalidState(ReductionError):
    pass


class DimensionMismatch(ReductionError):
    pass


class IndexOutOfRange(ReductionError, IndexError):
    pass


class ZeroProbabilityBranch(ReductionError):
    pass


class OutsideExponentDomain(ReductionError):
    pass


class NonpositiveTimestep(ReductionError):
    pass


class ZeroKappa(ReductionError):
    pass


class QuadratureFailure(ReductionError):
    pass


class InvalidLevyMeasure(ReductionError):
    pass


class InvalidSignal(ReductionError):
    pass


class BadGrid(ReductionError):
    pass


class WrongNoiseKind(ReductionError):
    pass


class AllWeightsZeroProbability(ReductionError):
    pass


class DegenerateNormalization(ReductionError):
    pass


class StepUnstable(ReductionError, ArithmeticError):
    pass


class NonpositiveInput(ReductionError):
    pass


class ConfigInvalid(ReductionError):
    pass


class PathError(ReductionError):
    """A domain error raised while simulating one path of an ensemble."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"path {index}: {type(cause).__name__}: {cause}")

    def __reduce__(self):
        return (type(self), (self.index, self.cause))
