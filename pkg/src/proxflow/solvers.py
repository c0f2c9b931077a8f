"""Iterative solvers for ``0.5 ||y - A x||^2 + lam * sum_k f((K x)_k)``.

Six iterations share one :class:`~proxflow.problem.Problem`:

========  ==========================================================
``ista``  proximal gradient with stepsize ``1/L``
``amp``   approximate message passing (separable penalty only)
``vamp``  vector AMP; the TV variant splits on ``z = K x``
``admm``  Douglas-Rachford splitting with fixed ``rho``
``prs``   Peaceman-Rachford splitting with fixed ``rho``
========  ==========================================================

Each has a state dataclass, an ``init`` through :func:`init` and a step
function that updates the state in place and returns it. :func:`run` drives
any of them under an iteration/time budget and records a :class:`Trace`.

VAMP with ``adapt_variances=False`` pins ``sigma_x = sigma_z = 1/(2 rho)``
and then reproduces PRS step for step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fastpath import Precomputation, precompute, sigma_x_spectral, sigma_x_tv
from .problem import Problem
from .prox import group_norms, group_soft_threshold, soft_threshold
from .trace import Trace, TraceRow

__all__ = [
    "ALGORITHMS",
    "ConfigurationError",
    "SIGMA_MIN",
    "RHO_MIN",
    "DENOM_MIN",
    "IstaState",
    "AmpState",
    "VampState",
    "SplitState",
    "Budget",
    "init",
    "step",
    "ista_step",
    "amp_step",
    "vamp_step",
    "vamp_sep_step",
    "vamp_tv_step",
    "admm_step",
    "prs_step",
    "objective",
    "kkt_residual",
    "lipschitz_constant",
    "run",
]

ALGORITHMS = ("ista", "amp", "vamp", "admm", "prs")

SIGMA_MIN = 1e-11
RHO_MIN = 1e-11
DENOM_MIN = 1e-8

VAMP_GAMMA = 0.6
PRS_GAMMA = 0.95


class ConfigurationError(ValueError):
    """Invalid algorithm name or missing/invalid solver option."""


@dataclass
class IstaState:
    x: np.ndarray
    step: float
    iteration: int = 0


@dataclass
class AmpState:
    x: np.ndarray
    z: np.ndarray
    sigma: float
    alpha: float
    onsager: float = 0.0
    diverged: bool = False
    iteration: int = 0


@dataclass
class VampState:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    rho: float = 1.0
    sigma_x: float = 0.5
    sigma_z: float = 0.5
    gamma: float = VAMP_GAMMA
    adapt_variances: bool = True
    iteration: int = 0


@dataclass
class SplitState:
    """ADMM/PRS iterate; ``gamma`` relaxes the PRS dual step and is unused by ADMM."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    rho: float
    gamma: float = 1.0
    iteration: int = 0


@dataclass
class Budget:
    """Stopping rules for :func:`run`.

    The run stops after `max_iter` steps, once `max_seconds` of wall-clock
    have elapsed, or when ``|f_t - f_{t-window}| <= stop_tol * |f_t|``.
    ``stop_tol=None`` disables the objective test.
    """

    max_iter: int = 1000
    max_seconds: float | None = None
    stop_tol: float | None = 1e-10
    window: int = 10


# -- objective and optimality ------------------------------------------------

def penalty_value(problem: Problem, Kx):
    if problem.is_tv:
        return float(np.sum(group_norms(Kx, problem.group_size)))
    return float(np.sum(np.abs(Kx)))


def objective(problem: Problem, x) -> float:
    x = np.asarray(x, dtype=float)
    resid = problem.y - problem.A @ x
    return 0.5 * float(resid @ resid) + problem.lam * penalty_value(problem, problem.K.apply(x))


def _prox(problem: Problem, v, theta):
    if problem.is_tv:
        return group_soft_threshold(v, theta, problem.group_size)
    return soft_threshold(v, theta)


def kkt_residual(problem: Problem, x, *, zero_tol=1e-4, inner_iter=5000, inner_tol=1e-12):
    """Smallest norm of ``A^T (A x - y) + lam K^T s`` over subgradients ``s``.

    Groups of ``K x`` with norm at most ``zero_tol * max(1, max_g ||(K x)_g||)``
    count as flat, so ``s_g`` ranges over the unit ball there; elsewhere
    ``s_g = (K x)_g / ||(K x)_g||``. For the separable penalty the minimization
    is coordinatewise and exact. For TV the ball-constrained least-squares
    problem over the zero groups is solved by accelerated projected gradient,
    which gives an upper bound that is tight once the inner solve converges.
    """
    x = np.asarray(x, dtype=float)
    g = problem.A.T @ (problem.A @ x - problem.y)
    lam = problem.lam
    if lam == 0.0:
        return float(np.linalg.norm(g))
    K = problem.K
    gs = problem.group_size
    Kx = K.apply(x).reshape(-1, gs)
    norms = np.linalg.norm(Kx, axis=1)
    tol = zero_tol * max(1.0, norms.max(initial=0.0))
    active = norms > tol
    s = np.zeros_like(Kx)
    s[active] = Kx[active] / norms[active, None]

    if not problem.is_tv:
        r = g + lam * s[:, 0]
        inactive = ~active
        r[inactive] = np.sign(g[inactive]) * np.maximum(np.abs(g[inactive]) - lam, 0.0)
        return float(np.linalg.norm(r))

    r0 = g + lam * K.adjoint(s.ravel())
    inactive = ~active
    if not inactive.any():
        return float(np.linalg.norm(r0))

    # Accelerated projected gradient on 0.5 ||r0 + lam K^T s||^2 over s_g in the unit ball.
    lip = lam**2 * 4.0 * gs
    mask = inactive[:, None]

    def residual(sv):
        return r0 + lam * K.adjoint(sv.ravel())

    def project(sv):
        nrm = np.linalg.norm(sv, axis=1, keepdims=True)
        return np.where(mask, sv / np.maximum(nrm, 1.0), 0.0)

    s_in = project(np.zeros_like(Kx))
    w = s_in.copy()
    t = 1.0
    best = np.linalg.norm(r0)
    scale = max(best, 1e-300)
    for _ in range(inner_iter):
        grad = lam * K.apply(residual(w)).reshape(-1, gs)
        s_new = project(w - grad / lip)
        val = np.linalg.norm(residual(s_new))
        if val > best:
            t = 1.0  # restart momentum
            w = s_in
            continue
        best = val
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        w = s_new + ((t - 1.0) / t_new) * (s_new - s_in)
        converged = np.linalg.norm(s_new - s_in) <= inner_tol * max(1.0, np.linalg.norm(s_new))
        s_in, t = s_new, t_new
        if best <= inner_tol * scale or converged:
            break
    return float(best)


def lipschitz_constant(A, n_iter=100, rtol=1e-6, seed=0) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration."""
    A = np.asarray(A, dtype=float)
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iter):
        w = A.T @ (A @ v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    # power iteration underestimates; a small margin keeps 1/L a valid step
    return est * (1.0 + 10.0 * rtol)


# -- initialization ----------------------------------------------------------

def init(problem: Problem, algorithm: str, options: dict | None = None):
    """Zero iterates plus the algorithm's scalar parameters.

    Options
    -------
    ista: ``lipschitz`` (default: power iteration on ``A^T A``).
    amp: ``sigma0`` (default 1).
    vamp: ``rho0`` (1), ``sigma0`` (0.5), ``gamma`` (0.6),
        ``adapt_variances`` (True).
    admm, prs: ``rho`` (required); prs also ``gamma`` (0.95).
    """
    opts = dict(options or {})
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    p, r = problem.p, problem.r

    if algorithm == "ista":
        lip = opts.get("lipschitz")
        if lip is None:
            lip = lipschitz_constant(problem.A)
        return IstaState(x=np.zeros(p), step=1.0 / lip if lip > 0 else 1.0)

    if algorithm == "amp":
        if problem.is_tv:
            raise ConfigurationError("amp supports separable penalties only")
        return AmpState(x=np.zeros(p), z=np.zeros(problem.n), sigma=float(opts.get("sigma0", 1.0)),
                        alpha=problem.n / problem.p)

    if algorithm == "vamp":
        sigma0 = float(opts.get("sigma0", 0.5))
        gamma = float(opts.get("gamma", VAMP_GAMMA))
        if not 0.0 < gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {gamma}")
        return VampState(x=np.zeros(p), z=np.zeros(r), u=np.zeros(r),
                         rho=float(opts.get("rho0", 1.0)), sigma_x=sigma0, sigma_z=sigma0,
                         gamma=gamma, adapt_variances=bool(opts.get("adapt_variances", True)))

    rho = opts.get("rho")
    if rho is None:
        raise ConfigurationError(f"{algorithm} needs a stepsize option 'rho'")
    rho = float(rho)
    if not rho > 0.0:
        raise ConfigurationError(f"rho must be positive, got {rho}")
    gamma = float(opts.get("gamma", PRS_GAMMA if algorithm == "prs" else 1.0))
    return SplitState(x=np.zeros(p), z=np.zeros(r), u=np.zeros(r), rho=rho, gamma=gamma)


# -- steps ---------------------------------------------------------------------

def ista_step(state: IstaState, problem: Problem) -> IstaState:
    if problem.is_tv:
        raise ConfigurationError("ista supports separable penalties only")
    A, x = problem.A, state.x
    v = x + state.step * (problem.Aty - A.T @ (A @ x))
    state.x = soft_threshold(v, problem.lam * state.step).value
    state.iteration += 1
    return state


def amp_step(state: AmpState, problem: Problem) -> AmpState:
    """One AMP iteration.

    The residual carries the Onsager term built from the previous
    thresholding's mean derivative; the threshold is ``lam * sigma``.
    """
    A = problem.A
    z = problem.y - A @ state.x + (state.onsager / state.alpha) * state.z
    v = state.x + A.T @ z
    res = soft_threshold(v, problem.lam * state.sigma) if np.isfinite(state.sigma) else None
    state.z = z
    if res is None or not (np.all(np.isfinite(res.value)) and np.all(np.isfinite(z))):
        state.diverged = True
        state.x = np.full_like(state.x, np.nan)
    else:
        state.x = res.value
        state.onsager = res.avg_derivative
        state.sigma = 1.0 + state.sigma * res.avg_derivative / state.alpha
    state.iteration += 1
    return state


def _sigma_x(problem, precomp, rho):
    return sigma_x_tv(precomp, rho) if problem.is_tv else sigma_x_spectral(precomp, rho)


def vamp_step(state: VampState, problem: Problem, precomp: Precomputation) -> VampState:
    """One VAMP iteration (separable or TV, chosen by the problem's penalty).

    The linear step solves ``(A^T A + rho K^T K) x = A^T y + K^T u`` and sets
    ``sigma_x`` to the mean diagonal of ``K (A^T A + rho K^T K)^{-1} K^T``.
    The penalty step thresholds ``(K x - sigma_x u) / (1 - sigma_x rho)`` at
    ``lam sigma_x / (1 - sigma_x rho)`` and scales the mean derivative into
    ``sigma_z``. ``u`` and ``rho`` then move by ``gamma`` times the mismatch
    between the two estimates.
    """
    K = problem.K
    rho = state.rho
    x = precomp.solve(problem.Aty + K.adjoint(state.u), rho)
    Kx = K.apply(x)
    g = state.gamma
    if state.adapt_variances:
        sx = max(_sigma_x(problem, precomp, rho), SIGMA_MIN)
        denom = max(1.0 - sx * rho, DENOM_MIN)
        res = _prox(problem, (Kx - sx * state.u) / denom, problem.lam * sx / denom)
        sz = max(sx / denom * res.avg_derivative, SIGMA_MIN)
        state.u = state.u + g * (res.value / sz - Kx / sx)
        state.rho = max(rho + g * (1.0 / sz - 1.0 / sx), RHO_MIN)
    else:
        # sigma_x = sigma_z = 1/(2 rho): the general formulas simplify exactly,
        # and evaluating the simplified form avoids rounding drift
        sx = sz = 1.0 / (2.0 * rho)
        res = _prox(problem, 2.0 * Kx - state.u / rho, problem.lam / rho)
        state.u = state.u + 2.0 * rho * g * (res.value - Kx)
    state.x, state.z = x, res.value
    state.sigma_x, state.sigma_z = sx, sz
    state.iteration += 1
    return state


def vamp_sep_step(state: VampState, problem: Problem, precomp: Precomputation) -> VampState:
    if problem.is_tv:
        raise ConfigurationError("vamp_sep_step needs a separable penalty")
    return vamp_step(state, problem, precomp)


def vamp_tv_step(state: VampState, problem: Problem, precomp: Precomputation) -> VampState:
    if not problem.is_tv:
        raise ConfigurationError("vamp_tv_step needs a TV penalty")
    return vamp_step(state, problem, precomp)


def admm_step(state: SplitState, problem: Problem, precomp: Precomputation) -> SplitState:
    """ADMM on ``L(x, z, u) = loss(x) + lam R(z) - u^T (K x - z) + rho/2 ||K x - z||^2``."""
    K, rho = problem.K, state.rho
    x = precomp.solve(problem.Aty + K.adjoint(state.u + rho * state.z), rho)
    Kx = K.apply(x)
    z = _prox(problem, Kx - state.u / rho, problem.lam / rho).value
    state.u = state.u + rho * (z - Kx)
    state.x, state.z = x, z
    state.iteration += 1
    return state


def prs_step(state: SplitState, problem: Problem, precomp: Precomputation) -> SplitState:
    """Peaceman-Rachford with dual step ``u += 2 rho gamma (z - K x)``."""
    K, rho = problem.K, state.rho
    x = precomp.solve(problem.Aty + K.adjoint(state.u), rho)
    Kx = K.apply(x)
    z = _prox(problem, 2.0 * Kx - state.u / rho, problem.lam / rho).value
    state.u = state.u + 2.0 * rho * state.gamma * (z - Kx)
    state.x, state.z = x, z
    state.iteration += 1
    return state


def step(state, problem: Problem, precomp: Precomputation | None = None):
    """Dispatch on the state type (and the penalty for VAMP)."""
    if isinstance(state, IstaState):
        return ista_step(state, problem)
    if isinstance(state, AmpState):
        return amp_step(state, problem)
    if isinstance(state, VampState):
        return vamp_step(state, problem, precomp)
    raise TypeError("SplitState is shared by ADMM and PRS; call admm_step or prs_step")


_STEPPERS = {
    "ista": lambda s, pr, pc: ista_step(s, pr),
    "amp": lambda s, pr, pc: amp_step(s, pr),
    "vamp": vamp_step,
    "admm": admm_step,
    "prs": prs_step,
}


def needs_precomputation(algorithm: str) -> bool:
    return algorithm in ("vamp", "admm", "prs")


# -- driver ------------------------------------------------------------------

def _diagnostics(state):
    if isinstance(state, VampState):
        return state.sigma_x, state.sigma_z, state.rho
    if isinstance(state, SplitState):
        return None, None, state.rho
    if isinstance(state, AmpState):
        return state.sigma, None, None
    return None, None, None


def _diverging(state, obj, obj0, factor):
    if isinstance(state, AmpState) and state.diverged:
        return True
    if not np.isfinite(obj) or not np.all(np.isfinite(state.x)):
        return True
    return obj > factor * max(obj0, 1e-300)


def run(problem: Problem, algorithm: str, options: dict | None = None, budget: Budget | None = None,
        *, precomp: Precomputation | None = None) -> Trace:
    """Iterate `algorithm` on `problem` and record one row per iteration.

    Extra options beyond those of :func:`init`:

    ``record_kkt`` (False)
        also evaluate :func:`kkt_residual` every iteration.
    ``divergence_factor`` (1e8)
        the divergence signal fires when an iterate is non-finite or the
        objective exceeds this multiple of its starting value.

    A shared `precomp` may be passed in; its own setup time is then charged to
    this run's preprocessing anyway so wall-clock columns stay comparable.
    """
    opts = dict(options or {})
    budget = budget or Budget()
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    record_kkt = bool(opts.pop("record_kkt", False))
    factor = float(opts.pop("divergence_factor", 1e8))

    t0 = time.perf_counter()
    charged = 0.0
    if needs_precomputation(algorithm):
        if precomp is None:
            precomp = precompute(problem.A, problem.penalty if problem.is_tv else None)
        else:
            charged = precomp.seconds
    state = init(problem, algorithm, opts)
    prep = time.perf_counter() - t0 + charged
    stepper = _STEPPERS[algorithm]

    trace = Trace(meta={"solver": algorithm, "preprocessing_seconds": prep, "diverged": False,
                        "options": {k: v for k, v in opts.items() if np.isscalar(v)}})

    def record(it):
        obj = objective(problem, state.x)
        kkt = kkt_residual(problem, state.x) if record_kkt and np.isfinite(obj) else None
        trace.append(TraceRow(it, time.perf_counter() - t0 + charged, obj, kkt, *_diagnostics(state)))
        return obj

    obj0 = record(0)
    for it in range(1, budget.max_iter + 1):
        stepper(state, problem, precomp)
        obj = record(it)
        if _diverging(state, obj, obj0, factor):
            trace.meta.update(diverged=True, diverged_at=it)
            break
        w = budget.window
        if budget.stop_tol is not None and it >= w:
            prev = trace.rows[-1 - w].objective
            if abs(obj - prev) <= budget.stop_tol * max(abs(obj), 1e-300):
                break
        if budget.max_seconds is not None and trace.rows[-1].seconds >= budget.max_seconds:
            break
    trace.meta["iterations"] = trace.rows[-1].iter
    trace.x = state.x.copy()
    trace.state = state
    return trace
