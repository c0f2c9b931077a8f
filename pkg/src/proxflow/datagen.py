"""Deterministic generators for synthetic and tomography instances.

Every random draw comes from a Philox counter-based generator keyed by
``SeedSequence(seed, spawn_key=(stream,))``, with one fixed stream per
generator function (see ``STREAMS``). The same ``(parameters, seed)`` always
produces the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "STREAMS",
    "rng_for",
    "SyntheticInstance",
    "TomoInstance",
    "bernoulli_gaussian",
    "gaussian_matrix",
    "product_matrix",
    "noisy_measurements",
    "snr_noise_variance",
    "synthetic_instance",
    "shepp_logan",
    "radon_matrix",
    "tomography_instance",
    "SHEPP_LOGAN_ELLIPSES",
]

STREAMS = {
    "bernoulli_gaussian": 1,
    "gaussian_matrix": 2,
    "product_matrix": 3,
    "noise": 4,
}


def rng_for(stream: str, seed: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(STREAMS[stream],))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SyntheticInstance:
    A: np.ndarray
    x_true: np.ndarray
    y: np.ndarray
    noise_variance: float
    seed: int


@dataclass
class TomoInstance:
    phantom: np.ndarray
    radon: np.ndarray
    y: np.ndarray
    angles: np.ndarray
    noise_variance: float
    seed: int = 0
    meta: dict = field(default_factory=dict)


def bernoulli_gaussian(p: int, sparsity: float, seed: int):
    """Vector whose entries are N(0, 1) with probability `sparsity`, else 0."""
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError(f"sparsity must lie in [0, 1], got {sparsity}")
    rng = rng_for("bernoulli_gaussian", seed)
    mask = rng.random(p) < sparsity
    values = rng.standard_normal(p)
    return np.where(mask, values, 0.0)


def gaussian_matrix(n: int, p: int, seed: int):
    """i.i.d. N(0, 1/n) entries."""
    if n < 1 or p < 1:
        raise ValueError("matrix dimensions must be positive")
    rng = rng_for("gaussian_matrix", seed)
    return rng.standard_normal((n, p)) / np.sqrt(n)


def product_matrix(n: int, p: int, r: int, seed: int):
    """``A = U V^T`` with ``U ~ N(0, 1/n)`` of shape (n, r) and ``V ~ N(0, 1/r)`` of shape (p, r).

    Entries of `A` then have variance ``r * (1/n) * (1/r) = 1/n``, the same
    scale as :func:`gaussian_matrix`, but the matrix is far from i.i.d.
    """
    if r < 1:
        raise ValueError(f"rank must be >= 1, got {r}")
    rng = rng_for("product_matrix", seed)
    U = rng.standard_normal((n, r)) / np.sqrt(n)
    V = rng.standard_normal((p, r)) / np.sqrt(r)
    return U @ V.T


def noisy_measurements(A, x, noise_variance: float, seed: int):
    if noise_variance < 0:
        raise ValueError(f"noise variance must be nonnegative, got {noise_variance}")
    clean = np.asarray(A) @ np.asarray(x)
    if noise_variance == 0:
        return clean
    rng = rng_for("noise", seed)
    return clean + np.sqrt(noise_variance) * rng.standard_normal(clean.shape[0])


def snr_noise_variance(clean, fraction: float = 0.01) -> float:
    """Noise variance ``fraction * ||clean||^2 / n`` (1% SNR by default)."""
    clean = np.asarray(clean, dtype=float)
    return float(fraction * clean @ clean / clean.size)


def synthetic_instance(n, p, sparsity, noise_variance, seed, matrix="gaussian", rank=None):
    """Bernoulli-Gaussian signal observed through a Gaussian or product matrix."""
    x = bernoulli_gaussian(p, sparsity, seed)
    if matrix == "gaussian":
        A = gaussian_matrix(n, p, seed)
    elif matrix == "product":
        A = product_matrix(n, p, n if rank is None else rank, seed)
    else:
        raise ValueError(f"unknown matrix kind {matrix!r}")
    y = noisy_measurements(A, x, noise_variance, seed)
    return SyntheticInstance(A=A, x_true=x, y=y, noise_variance=float(noise_variance), seed=seed)


# intensity, semi-axis a, semi-axis b, center x, center y, rotation (degrees)
SHEPP_LOGAN_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def phantom_coordinates(L: int):
    """Pixel-center coordinates on ``[-1, 1]^2``; row 0 is the top (``y = +1``)."""
    c = (2.0 * np.arange(L) + 1.0) / L - 1.0
    X, Y = np.meshgrid(c, -c)
    return X, Y


def ellipse_mask(X, Y, a, b, x0, y0, phi_deg):
    phi = np.deg2rad(phi_deg)
    xr = (X - x0) * np.cos(phi) + (Y - y0) * np.sin(phi)
    yr = -(X - x0) * np.sin(phi) + (Y - y0) * np.cos(phi)
    return (xr / a) ** 2 + (yr / b) ** 2 <= 1.0


def shepp_logan(L: int):
    """Ten-ellipse (Toft-modified) Shepp-Logan phantom sampled at pixel centers."""
    if L < 16:
        raise ValueError(f"phantom side must be >= 16, got {L}")
    X, Y = phantom_coordinates(L)
    img = np.zeros((L, L))
    for intensity, a, b, x0, y0, phi in SHEPP_LOGAN_ELLIPSES:
        img[ellipse_mask(X, Y, a, b, x0, y0, phi)] += intensity
    return np.clip(img, 0.0, 1.0)


def _ray_weights(L, theta, t):
    """Exact intersection lengths of the line ``x cos + y sin = t`` with the pixels.

    The image covers ``[-L/2, L/2]^2`` with unit pixels; pixel ``(i, j)`` has
    its center at ``(j - (L-1)/2, (L-1)/2 - i)``. Returns flat pixel indices
    and lengths.
    """
    half = L / 2.0
    nx, ny = np.cos(theta), np.sin(theta)
    dx, dy = -ny, nx
    ox, oy = t * nx, t * ny
    s_lo, s_hi = -np.inf, np.inf
    for o, dcomp in ((ox, dx), (oy, dy)):
        if abs(dcomp) < 1e-14:
            if not -half <= o <= half:
                return np.empty(0, dtype=np.intp), np.empty(0)
            continue
        s1, s2 = sorted(((-half - o) / dcomp, (half - o) / dcomp))
        s_lo, s_hi = max(s_lo, s1), min(s_hi, s2)
    if not s_hi > s_lo:
        return np.empty(0, dtype=np.intp), np.empty(0)
    planes = np.arange(L + 1) - half
    cuts = [np.array([s_lo, s_hi])]
    for o, dcomp in ((ox, dx), (oy, dy)):
        if abs(dcomp) >= 1e-14:
            s = (planes - o) / dcomp
            cuts.append(s[(s > s_lo) & (s < s_hi)])
    s = np.unique(np.concatenate(cuts))
    lengths = np.diff(s)
    mid = 0.5 * (s[1:] + s[:-1])
    keep = lengths > 1e-12
    mid, lengths = mid[keep], lengths[keep]
    j = np.clip(np.floor(ox + mid * dx + half).astype(np.intp), 0, L - 1)
    i = np.clip(np.floor(half - (oy + mid * dy)).astype(np.intp), 0, L - 1)
    return i * L + j, lengths


def radon_matrix(L: int, angles):
    """Dense ``(len(angles) * L) x L^2`` line-integral matrix.

    Row ``a * L + k`` integrates along the line at angle ``angles[a]`` with
    detector offset ``k - (L-1)/2`` (bin centers, unit spacing). Angle 0 gives
    vertical rays, i.e. column sums of the image.
    """
    if L < 2:
        raise ValueError(f"image side must be >= 2, got {L}")
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    R = np.zeros((angles.size * L, L * L))
    offsets = np.arange(L) - (L - 1) / 2.0
    for a, theta in enumerate(angles):
        for k, t in enumerate(offsets):
            idx, w = _ray_weights(L, theta, t)
            np.add.at(R[a * L + k], idx, w)
    return R


def equispaced_angles(n_angles: int):
    return np.pi * np.arange(n_angles) / n_angles


def tomography_instance(L: int, n_angles: int, noise_fraction: float = 0.01, seed: int = 0):
    """Shepp-Logan phantom, explicit Radon matrix and noisy projections."""
    phantom = shepp_logan(L)
    angles = equispaced_angles(n_angles)
    R = radon_matrix(L, angles)
    clean = R @ phantom.ravel()
    var = snr_noise_variance(clean, noise_fraction)
    y = noisy_measurements(R, phantom.ravel(), var, seed)
    return TomoInstance(phantom=phantom, radon=R, y=y, angles=angles, noise_variance=var,
                        seed=seed, meta={"size": L, "n_angles": n_angles,
                                         "noise_fraction": noise_fraction})
