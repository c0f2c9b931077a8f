"""Fast linear solves for ``(A^T A + rho K^T K) x = b`` in the ``n << p`` regime.

Separable penalties (``K = I``) use the Woodbury identity around the
eigendecomposition ``A A^T = U diag(d) U^T``; each solve is two
matrix-vector products with the cached ``W = A^T U``.

For the periodic gradient ``K``, ``K^T K`` is the lattice Laplacian, which the
DFT diagonalizes. The Laplacian is singular on constant images, so the solve
splits ``x`` into its mean and a zero-mean part. On the zero-mean subspace
Woodbury is applied around ``rho * Laplacian`` with the eigendecomposition of
``G = A L^+ A^T`` (``L^+`` the Laplacian pseudo-inverse, applied by FFT);
the mean is recovered from a scalar Schur complement. All per-iteration work
is two products with the cached ``B = L^+ A^T U`` plus one real FFT pair.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .operators import GradientOperator, GridShape, laplacian_spectrum

__all__ = [
    "SingularSystemError",
    "Precomputation",
    "precompute",
    "ridge_solve_woodbury",
    "sigma_x_spectral",
    "tv_solve_fft",
    "sigma_x_tv",
    "sigma_x_tv_appendix",
]

EIG_RTOL = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    """The TV system is singular and its right-hand side has a mean component."""


def _check_rho(rho):
    rho = float(rho)
    if not rho > 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    return rho


def _clamped_eigh(G):
    G = 0.5 * (G + G.T)
    d, U = np.linalg.eigh(G)
    d = np.where(d < EIG_RTOL * max(d.max(initial=0.0), 0.0), 0.0, d)
    return d, U


@dataclass(frozen=True, eq=False)
class Precomputation:
    """Cached factorizations shared by VAMP, PRS and ADMM x-updates.

    ``U``/``d`` diagonalize ``A A^T`` for a separable penalty and
    ``A L^+ A^T`` for a TV penalty. ``W`` is ``A^T U`` (separable) or
    ``L^+ A^T U`` (TV). For TV, ``dc_coupling`` is ``U^T A 1/sqrt(p)``.
    """

    A: np.ndarray
    U: np.ndarray
    d: np.ndarray
    W: np.ndarray
    grid: GridShape | None = None
    laplacian_eigs: np.ndarray | None = None
    dc_coupling: np.ndarray | None = None
    dc_null: bool = False
    seconds: float = 0.0
    inv_half_spectrum: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]

    @property
    def is_tv(self) -> bool:
        return self.grid is not None

    def laplacian_pinv(self, b):
        """Apply ``L^+`` to one vector or to the rows of a 2-d array."""
        dims = self.grid.dims
        axes = tuple(range(-len(dims), 0))
        b = np.asarray(b, dtype=float)
        field = b.reshape(b.shape[:-1] + dims)
        spec = np.fft.rfftn(field, axes=axes) * self.inv_half_spectrum
        return np.fft.irfftn(spec, s=dims, axes=axes).reshape(b.shape)

    # -- generic right-hand side solves -------------------------------------
    def solve(self, b, rho):
        """Return ``(A^T A + rho K^T K)^{-1} b``."""
        rho = _check_rho(rho)
        b = np.asarray(b, dtype=float)
        if not self.is_tv:
            return b / rho - self.W @ ((self.W.T @ b) / (rho * (self.d + rho)))
        p = self.p
        alpha = self.dc_coupling
        denom = self.d + rho
        h = self.W.T @ b
        b0 = b.sum() / np.sqrt(p)
        s = rho * np.sum(alpha**2 / denom)
        if self.dc_null:
            if abs(b0) > 1e-10 * max(np.linalg.norm(b), 1e-300):
                raise SingularSystemError(
                    "A annihilates constant images and the right-hand side has a mean component"
                )
            c = 0.0
        else:
            c = (b0 - np.sum(alpha * h / denom)) / s
        x = (self.laplacian_pinv(b) - self.W @ ((h + c * rho * alpha) / denom)) / rho
        return x + c / np.sqrt(p)


def precompute(A, penalty=None) -> Precomputation:
    """Factorize `A` for the fast solves.

    `penalty` is ``None``/``"l1"``/an object without a grid for the separable
    route, or a :class:`GridShape`/:class:`GradientOperator`/object with a
    ``grid`` attribute for the TV route. Elapsed wall-clock time is stored in
    ``seconds``.
    """
    t0 = time.perf_counter()
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"A must be 2-d, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    grid = _grid_of(penalty)

    if grid is None:
        d, U = _clamped_eigh(A @ A.T)
        W = A.T @ U
        return Precomputation(A=A, U=U, d=d, W=W, seconds=time.perf_counter() - t0)

    if grid.size != A.shape[1]:
        raise ValueError(f"grid has {grid.size} sites but A has {A.shape[1]} columns")
    lam = laplacian_spectrum(grid)
    half = lam.reshape(grid.dims)[..., : grid.dims[-1] // 2 + 1]
    # zero eigenvalue (constant images) maps to zero: pseudo-inverse
    inv_half = np.where(half > 0.0, 1.0 / np.where(half > 0.0, half, 1.0), 0.0)
    partial = Precomputation(A=A, U=np.empty((0, 0)), d=np.empty(0), W=np.empty((0, 0)),
                             grid=grid, laplacian_eigs=lam, inv_half_spectrum=inv_half)
    LpAt = partial.laplacian_pinv(A).T  # p x n, columns L^+ a_i
    d, U = _clamped_eigh(A @ LpAt)
    W = LpAt @ U
    a0 = A.sum(axis=1) / np.sqrt(A.shape[1])
    alpha = U.T @ a0
    dc_null = bool(np.linalg.norm(a0) <= 1e-10 * max(np.linalg.norm(A), 1e-300))
    return Precomputation(A=A, U=U, d=d, W=W, grid=grid, laplacian_eigs=lam,
                          dc_coupling=alpha, dc_null=dc_null, inv_half_spectrum=inv_half,
                          seconds=time.perf_counter() - t0)


def _grid_of(penalty):
    if penalty is None or isinstance(penalty, str):
        if penalty not in (None, "l1"):
            raise ValueError(f"unknown penalty {penalty!r}")
        return None
    if isinstance(penalty, GridShape):
        return penalty
    if isinstance(penalty, GradientOperator):
        return penalty.grid
    return getattr(penalty, "grid", None)


def ridge_solve_woodbury(precomp: Precomputation, y, u, rho):
    """``(A^T A + rho I)^{-1} (A^T y + u)`` as ``u/rho + A^T U [U^T(y - A u/rho) / (d + rho)]``."""
    rho = _check_rho(rho)
    if precomp.is_tv:
        raise ValueError("ridge_solve_woodbury needs a separable precomputation")
    u = np.asarray(u, dtype=float)
    W = precomp.W
    inner = (precomp.U.T @ y - (W.T @ u) / rho) / (precomp.d + rho)
    return u / rho + W @ inner


def sigma_x_spectral(precomp: Precomputation, rho):
    """Mean diagonal of ``(A^T A + rho I_p)^{-1}``.

    The ``n`` eigenvalues of ``A A^T`` carry the nonzero spectrum of
    ``A^T A``; the remaining ``p - n`` directions contribute ``1/rho`` each
    (a negative count when ``n > p`` removes the surplus zero modes).
    """
    rho = _check_rho(rho)
    n, p = precomp.n, precomp.p
    return float((np.sum(1.0 / (precomp.d + rho)) + (p - n) / rho) / p)


def tv_solve_fft(precomp: Precomputation, y, u, rho):
    """``(A^T A + rho K^T K)^{-1} (A^T y + K^T u)`` for the periodic gradient ``K``."""
    if not precomp.is_tv:
        raise ValueError("tv_solve_fft needs a TV precomputation")
    K = GradientOperator(precomp.grid)
    return precomp.solve(precomp.A.T @ np.asarray(y, dtype=float) + K.adjoint(u), rho)


def sigma_x_tv(precomp: Precomputation, rho):
    """``Tr[K (A^T A + rho K^T K)^{-1} K^T] / r`` with ``r = d * p`` split components.

    Uses the pseudo-inverse when `A` annihilates constant images.
    """
    rho = _check_rho(rho)
    if not precomp.is_tv:
        raise ValueError("sigma_x_tv needs a TV precomputation")
    p = precomp.p
    r = precomp.grid.ndim * p
    denom = precomp.d + rho
    trace = ((p - 1) - np.sum(precomp.d / denom)) / rho
    if not precomp.dc_null:
        alpha2 = precomp.dc_coupling**2
        trace += np.sum(alpha2 * precomp.d / denom**2) / (rho * np.sum(alpha2 / denom))
    return float(trace / r)


def sigma_x_tv_appendix(precomp: Precomputation, rho):
    """Closed form that treats the Laplacian as invertible (ignores the mean mode).

    Kept as a cross-check: it differs from :func:`sigma_x_tv` only by the
    constant-image contribution, which is ``O(1/(r rho))``.
    """
    rho = _check_rho(rho)
    p = precomp.p
    dim = precomp.grid.ndim
    r = dim * p
    d_full = np.zeros(r)
    d_full[: precomp.d.size] = precomp.d
    return float(np.sum(1.0 / (d_full + rho)) / r - (dim - 1) / (dim * rho))
