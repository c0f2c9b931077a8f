"""Problem description shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .operators import GradientOperator, GridShape, IdentityMap

__all__ = ["L1Penalty", "TVPenalty", "Problem"]


@dataclass(frozen=True)
class L1Penalty:
    """``sum_j |x_j|``."""

    name = "l1"


@dataclass(frozen=True)
class TVPenalty:
    """Isotropic total variation ``sum_k ||(grad x)_k||_2`` on a periodic lattice."""

    grid: GridShape
    name = "tv"

    def __post_init__(self):
        if not isinstance(self.grid, GridShape):
            object.__setattr__(self, "grid", GridShape(tuple(self.grid)))


@dataclass(frozen=True, eq=False)
class Problem:
    """``min_x 0.5 ||y - A x||^2 + lam * sum_k f((K x)_k)``.

    ``K`` is the identity for :class:`L1Penalty` (``f = |.|``) and the
    periodic gradient for :class:`TVPenalty` (``f`` the group 2-norm).
    """

    y: np.ndarray
    A: np.ndarray
    lam: float
    penalty: L1Penalty | TVPenalty = L1Penalty()

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
            raise ValueError(f"inconsistent shapes: A {A.shape}, y {y.shape}")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(y)):
            raise ValueError("problem data must be finite")
        if not float(self.lam) >= 0.0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if isinstance(self.penalty, TVPenalty) and self.penalty.grid.size != A.shape[1]:
            raise ValueError(
                f"grid {self.penalty.grid.dims} has {self.penalty.grid.size} sites, A has {A.shape[1]} columns"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]

    @property
    def is_tv(self) -> bool:
        return isinstance(self.penalty, TVPenalty)

    @cached_property
    def K(self):
        if self.is_tv:
            return GradientOperator(self.penalty.grid)
        return IdentityMap(self.p)

    @property
    def r(self) -> int:
        return self.K.shape[0]

    @property
    def group_size(self) -> int:
        return self.penalty.grid.ndim if self.is_tv else 1

    @cached_property
    def Aty(self):
        return self.A.T @ self.y
