"""Learning stable linear dynamics: least squares followed by the reverse
I-projection onto the stable matrices, computed through an LQR problem."""

from .errors import (DefectiveMatrix, DimensionMismatch, MonotonicityViolation,
                     NonConvergence, NonFiniteInput, NonSPD, NumericalError,
                     OversamplingExhausted, RejectionCapExceeded, SingularGram,
                     SingularMatrix, StableLearnError, StructureViolation,
                     UnstableInput, UsageError)
from .lyapunov import StationaryCovariance, solve_dlyap
from .riccati import DareSolution, dlqr, solve_dare
from .stabproj import (ProjectionResult, clip_eigenvalues, delta_sweep,
                       epsilon_bound, rate_function, reverse_i_projection,
                       structure_check)
from .sysid import LinearSystem, Trajectory, least_squares, simulate

__version__ = "0.1.0"

__all__ = [
    "DareSolution", "DefectiveMatrix", "DimensionMismatch", "LinearSystem",
    "MonotonicityViolation", "NonConvergence", "NonFiniteInput", "NonSPD",
    "NumericalError", "OversamplingExhausted", "ProjectionResult",
    "RejectionCapExceeded", "SingularGram", "SingularMatrix", "StableLearnError",
    "StationaryCovariance", "StructureViolation", "Trajectory", "UnstableInput",
    "UsageError", "clip_eigenvalues", "delta_sweep", "dlqr", "epsilon_bound",
    "least_squares", "rate_function", "reverse_i_projection", "simulate",
    "solve_dare", "solve_dlyap", "structure_check",
]
