"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError` so the CLI can
map it to exit code 2; usage problems derive from :class:`UsageError`.
"""


class StableLearnError(Exception):
    """Base class for all package errors."""

    code = "error"


class UsageError(StableLearnError, ValueError):
    code = "usage"


class NumericalError(StableLearnError):
    code = "numerical_failure"


class DimensionMismatch(UsageError):
    code = "dimension_mismatch"


class NonFiniteInput(UsageError):
    code = "non_finite_input"


class NonSPD(NumericalError):
    code = "non_spd"


class SingularMatrix(NumericalError):
    code = "singular_matrix"


class NonConvergence(NumericalError):
    code = "non_convergence"


class UnstableInput(NumericalError):
    code = "unstable_input"


class DefectiveMatrix(NumericalError):
    code = "defective_matrix"


class SingularGram(NumericalError):
    code = "singular_gram"

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class MonotonicityViolation(NumericalError):
    code = "monotonicity_violation"


class StructureViolation(NumericalError):
    code = "structure_violation"


class OversamplingExhausted(NumericalError):
    code = "oversampling_exhausted"


class RejectionCapExceeded(NumericalError):
    code = "rejection_cap_exceeded"
