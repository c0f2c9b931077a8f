"""Linear operators: dense feature matrices and the periodic lattice gradient.

The gradient maps an image on a ``d``-dimensional periodic lattice with
``size`` sites to ``d * size`` values. The ``d`` forward differences of one
site are stored contiguously (site-major), so ``g.reshape(size, d)`` yields one
row per group.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

__all__ = [
    "DimensionError",
    "GridShape",
    "DenseMap",
    "GradientOperator",
    "IdentityMap",
    "laplacian_spectrum",
]


class DimensionError(ValueError):
    """Raised when a vector does not match the operator it is applied to."""


@dataclass(frozen=True)
class GridShape:
    """Side lengths of a periodic lattice with 1, 2 or 3 axes."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(L) for L in self.dims)
        if not 1 <= len(dims) <= 3:
            raise ValueError(f"lattice must have 1, 2 or 3 axes, got {len(dims)}")
        if any(L < 2 for L in dims):
            raise ValueError(f"every lattice side must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)


def _check_length(v, expected, what):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != expected:
        raise DimensionError(f"{what} must be a vector of length {expected}, got shape {v.shape}")
    return v


class DenseMap:
    """Row-major dense matrix with ``apply``/``adjoint``."""

    def __init__(self, matrix):
        matrix = np.ascontiguousarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionError(f"expected a 2-d array, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix has non-finite entries")
        self.matrix = matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, x):
        return self.matrix @ _check_length(x, self.shape[1], "x")

    def adjoint(self, y):
        return self.matrix.T @ _check_length(y, self.shape[0], "y")

    def as_dense(self):
        return self.matrix


class IdentityMap:
    """Identity on ``R^size``; the split operator of a separable penalty."""

    def __init__(self, size: int):
        self.size = int(size)

    @property
    def shape(self) -> tuple[int, int]:
        return self.size, self.size

    def apply(self, x):
        return _check_length(x, self.size, "x").copy()

    def adjoint(self, g):
        return _check_length(g, self.size, "g").copy()

    def as_dense(self):
        return np.eye(self.size)


class GradientOperator:
    """Forward differences with periodic wraparound on every lattice axis.

    Component ``c`` of a site holds the difference along array axis
    ``d - 1 - c``: for an image ``x[i, j]`` the group is
    ``(x[i, j+1] - x[i, j], x[i+1, j] - x[i, j])`` with indices wrapping around.
    """

    def __init__(self, shape: GridShape | tuple[int, ...]):
        if not isinstance(shape, GridShape):
            shape = GridShape(tuple(shape))
        self.grid = shape

    @property
    def shape(self) -> tuple[int, int]:
        n = self.grid.size
        return self.grid.ndim * n, n

    @property
    def group_size(self) -> int:
        return self.grid.ndim

    def apply(self, x):
        x = _check_length(x, self.grid.size, "x").reshape(self.grid.dims)
        out = np.empty(self.grid.dims + (self.grid.ndim,))
        d = self.grid.ndim
        for c in range(d):
            out[..., c] = np.roll(x, -1, axis=d - 1 - c) - x
        return out.reshape(-1)

    def adjoint(self, g):
        d = self.grid.ndim
        g = _check_length(g, d * self.grid.size, "g").reshape(self.grid.dims + (d,))
        out = np.zeros(self.grid.dims)
        for c in range(d):
            gc = g[..., c]
            out += np.roll(gc, 1, axis=d - 1 - c) - gc
        return out.reshape(-1)

    def as_dense(self):
        """Materialize the operator column by column (small lattices only)."""
        n = self.grid.size
        K = np.empty(self.shape)
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            K[:, j] = self.apply(e)
            e[j] = 0.0
        return K


def laplacian_spectrum(shape: GridShape | tuple[int, ...]):
    """Eigenvalues of ``K^T K`` for the periodic gradient ``K``.

    Flat array of ``shape.size`` values in row-major DFT frequency order
    (``k_a = 0..L_a-1`` on each axis): entry ``i`` pairs with
    ``np.fft.fftn(x.reshape(shape.dims)).ravel()[i]``.
    """
    if not isinstance(shape, GridShape):
        shape = GridShape(tuple(shape))
    lam = np.zeros(shape.dims)
    for a, L in enumerate(shape.dims):
        axis_eigs = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(L) / L)
        bshape = [1] * shape.ndim
        bshape[a] = L
        lam = lam + axis_eigs.reshape(bshape)
    return lam.ravel()
