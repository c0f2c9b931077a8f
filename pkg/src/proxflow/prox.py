"""Soft and group-soft thresholding with their averaged Jacobian traces.

Both operators return a :class:`ProxResult`: the thresholded vector together
with the mean of the diagonal of its Jacobian, which the message-passing
solvers use as a variance (Onsager) estimate.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "ProxResult",
    "soft_threshold",
    "group_soft_threshold",
    "group_norms",
    "moreau_envelope",
]


class ProxResult(NamedTuple):
    value: np.ndarray
    avg_derivative: float


def _check_theta(theta):
    theta = float(theta)
    if not theta >= 0.0:
        raise ValueError(f"threshold must be nonnegative, got {theta}")
    return theta


def soft_threshold(v, theta) -> ProxResult:
    """Prox of ``theta * |.|`` applied elementwise.

    Entries with ``|v_i| <= theta`` map to zero and contribute a zero
    derivative; the others shrink towards zero by ``theta``.
    """
    theta = _check_theta(theta)
    v = np.asarray(v, dtype=float)
    mag = np.abs(v)
    active = mag > theta
    value = np.where(active, v - theta * np.sign(v), 0.0)
    avg = float(np.count_nonzero(active)) / v.size if v.size else 0.0
    return ProxResult(value, avg)


def group_norms(v, group_size: int):
    return np.linalg.norm(np.asarray(v, dtype=float).reshape(-1, group_size), axis=1)


def group_soft_threshold(v, theta, group_size: int) -> ProxResult:
    """Prox of ``theta * sum_g ||v_g||_2`` over contiguous groups.

    Parameters
    ----------
    v : array, length a multiple of `group_size`
        Site-major grouped vector, e.g. the output of
        :meth:`proxflow.operators.GradientOperator.apply`.
    theta : float
        Nonnegative threshold.
    group_size : int
        Number of components per group.

    Returns
    -------
    ProxResult
        ``value`` is ``(1 - theta/||v_g||)_+ v_g`` per group. ``avg_derivative``
        is the full Jacobian trace divided by ``len(v)``; an active group
        contributes ``g - (g - 1) * theta / ||v_g||`` to the trace, an inactive
        one (``||v_g|| <= theta``) contributes nothing.
    """
    theta = _check_theta(theta)
    v = np.asarray(v, dtype=float)
    if v.size % group_size:
        raise ValueError(f"length {v.size} is not a multiple of group size {group_size}")
    groups = v.reshape(-1, group_size)
    norms = np.linalg.norm(groups, axis=1)
    active = norms > theta
    safe = np.where(active, norms, 1.0)
    scale = np.where(active, 1.0 - theta / safe, 0.0)
    value = (groups * scale[:, None]).reshape(v.shape)
    trace = np.sum(np.where(active, group_size - (group_size - 1) * theta / safe, 0.0))
    avg = float(trace) / v.size if v.size else 0.0
    return ProxResult(value, avg)


def moreau_envelope(f_spec: str, v, weight, group_size: int | None = None) -> float:
    """Value of ``min_x weight * f(x) + 0.5 * ||x - v||^2``.

    `f_spec` is ``"abs"`` (sum of absolute values) or ``"group-l2"`` (sum of
    group Euclidean norms; the whole of `v` is one group unless `group_size`
    is given). The minimizer is the corresponding prox, so the envelope's
    gradient is ``v - prox(v)``.
    """
    weight = float(weight)
    if not weight > 0.0:
        raise ValueError(f"weight must be positive, got {weight}")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if f_spec == "abs":
        x = soft_threshold(v, weight).value
        penalty = np.sum(np.abs(x))
    elif f_spec == "group-l2":
        g = v.size if group_size is None else group_size
        x = group_soft_threshold(v, weight, g).value
        penalty = np.sum(group_norms(x, g))
    else:
        raise ValueError(f"unknown penalty {f_spec!r}; expected 'abs' or 'group-l2'")
    return float(weight * penalty + 0.5 * np.sum((x - v) ** 2))
