"""Message-passing and splitting solvers for l1 and total-variation regression."""

from .datagen import shepp_logan, synthetic_instance, tomography_instance
from .fastpath import Precomputation, precompute
from .operators import DenseMap, GradientOperator, GridShape, IdentityMap
from .problem import L1Penalty, Problem, TVPenalty
from .solvers import ALGORITHMS, Budget, ConfigurationError, kkt_residual, objective, run
from .trace import Trace, TraceRow

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Budget",
    "ConfigurationError",
    "DenseMap",
    "GradientOperator",
    "GridShape",
    "IdentityMap",
    "L1Penalty",
    "Precomputation",
    "Problem",
    "TVPenalty",
    "Trace",
    "TraceRow",
    "kkt_residual",
    "objective",
    "precompute",
    "run",
    "shepp_logan",
    "synthetic_instance",
    "tomography_instance",
]
