"""End-to-end acceptance checks, one test per criterion.

Each check records a one-line verdict that is printed in the pytest terminal
summary. Running this file directly prints the same lines:

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import sys
import time
from functools import lru_cache

import numpy as np
import pytest
from sklearn.linear_model import Lasso

from proxflow.datagen import synthetic_instance, tomography_instance
from proxflow.fastpath import (
    precompute,
    ridge_solve_woodbury,
    sigma_x_spectral,
    sigma_x_tv,
    tv_solve_fft,
)
from proxflow.operators import GradientOperator, GridShape, laplacian_spectrum
from proxflow.problem import Problem, TVPenalty
from proxflow.prox import group_soft_threshold, moreau_envelope, soft_threshold
from proxflow.solvers import Budget, admm_step, init, kkt_residual, lipschitz_constant, objective, prs_step, run, vamp_step

RESULTS: dict[int, str] = {}


def record(k: int, ok: bool, detail: str):
    RESULTS[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    return ok


def rel_gap(f, ref):
    return abs(f - ref) / abs(ref)


# -- shared instances ----------------------------------------------------------

SEP_SEEDS = range(20)
TOMO_SEEDS = range(5)
TOMO_L, TOMO_ANGLES = 32, 10
ORACLE_ADMM_RHO = 100.0
ORACLE_ADMM_ITERS = 10_000
VAMP_TV_ITERS = 8000


@lru_cache(maxsize=None)
def sep_problem(seed):
    inst = synthetic_instance(150, 500, 0.1, 1e-10, seed)
    return Problem(inst.y, inst.A, 1.0)


def ista_oracle(problem, iters=50_000):
    """Plain proximal-gradient loop, written out independently of the library solver."""
    A, y, lam = problem.A, problem.y, problem.lam
    step = 1.0 / lipschitz_constant(A)
    Aty = A.T @ y
    x = np.zeros(problem.p)
    for _ in range(iters):
        v = x + step * (Aty - A.T @ (A @ x))
        x = np.sign(v) * np.maximum(np.abs(v) - lam * step, 0.0)
    return x


def lasso_oracle(problem):
    model = Lasso(alpha=problem.lam / problem.n, fit_intercept=False, tol=1e-14, max_iter=500_000)
    return model.fit(problem.A, problem.y).coef_


@lru_cache(maxsize=None)
def tomo_problem(seed):
    t = tomography_instance(TOMO_L, TOMO_ANGLES, 0.01, seed)
    return Problem(t.y, t.radon, 1.0, TVPenalty((TOMO_L, TOMO_L)))


@lru_cache(maxsize=None)
def tomo_precomp(seed):
    pr = tomo_problem(seed)
    return precompute(pr.A, pr.penalty)


@lru_cache(maxsize=None)
def tomo_oracle(seed):
    """Long fixed-stepsize ADMM run; returns (objective, x, seconds)."""
    pr, pc = tomo_problem(seed), tomo_precomp(seed)
    t0 = time.perf_counter()
    s = init(pr, "admm", {"rho": ORACLE_ADMM_RHO})
    for _ in range(ORACLE_ADMM_ITERS):
        admm_step(s, pr, pc)
    return objective(pr, s.x), s.x, time.perf_counter() - t0


@lru_cache(maxsize=None)
def tomo_vamp(seed, gamma=0.6, iters=VAMP_TV_ITERS):
    pr = tomo_problem(seed)
    t0 = time.perf_counter()
    tr = run(pr, "vamp", {"gamma": gamma}, Budget(max_iter=iters, stop_tol=None), precomp=tomo_precomp(seed))
    return tr, time.perf_counter() - t0


# -- criteria -------------------------------------------------------------------

def check_1():
    solvers = (("vamp", {}), ("ista", {}), ("admm", {"rho": 1.0}), ("prs", {"rho": 1.0}))
    worst = {name: 0.0 for name, _ in solvers}
    solver_seconds = oracle_seconds = 0.0
    for seed in SEP_SEEDS:
        pr = sep_problem(seed)
        t0 = time.perf_counter()
        ref = objective(pr, ista_oracle(pr))
        oracle_seconds += time.perf_counter() - t0
        for name, opts in solvers:
            t0 = time.perf_counter()
            tr = run(pr, name, opts, Budget(max_iter=20_000))
            solver_seconds += time.perf_counter() - t0
            worst[name] = max(worst[name], rel_gap(tr.final_objective, ref))
    ok = all(w <= 1e-6 for w in worst.values()) and solver_seconds <= 60.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return record(1, ok, f"worst relative gap [{detail}] (tol 1e-6); solvers {solver_seconds:.1f} s "
                         f"(limit 60 s), oracle {oracle_seconds:.1f} s, total {solver_seconds + oracle_seconds:.1f} s")


def check_2():
    t_start = time.perf_counter()
    gaps, kkts = [], []
    for seed in TOMO_SEEDS:
        ref, _, _ = tomo_oracle(seed)
        tr, _ = tomo_vamp(seed)
        gaps.append(rel_gap(tr.final_objective, ref))
        kkts.append(kkt_residual(tomo_problem(seed), tr.x))
    seconds = time.perf_counter() - t_start
    ok = max(gaps) <= 1e-4 and max(kkts) <= 1e-4 and seconds <= 120.0
    return record(2, ok, f"max relative gap {max(gaps):.1e} (tol 1e-4), max KKT {max(kkts):.1e} (tol 1e-4), "
                         f"{seconds:.1f} s incl. oracles (limit 120 s)")


def check_3():
    rng = np.random.default_rng(7)
    worst = {}
    for name, pr in (("separable", sep_problem(0)), ("tv", tomo_problem(0))):
        pc = precompute(pr.A, pr.penalty if pr.is_tv else None)
        rho = 2.5
        v = init(pr, "vamp", {"rho0": rho, "gamma": 1.0, "adapt_variances": False})
        p = init(pr, "prs", {"rho": rho, "gamma": 1.0})
        u0 = rng.standard_normal(pr.r)
        v.u, p.u = u0.copy(), u0.copy()
        err = 0.0
        for _ in range(20):
            vamp_step(v, pr, pc)
            prs_step(p, pr, pc)
            for a, b in ((v.x, p.x), (v.z, p.z), (v.u, p.u)):
                err = max(err, np.linalg.norm(a - b) / max(np.linalg.norm(b), 1.0))
            err = max(err, abs(v.rho - p.rho))
        worst[name] = err
    ok = all(e <= 1e-12 for e in worst.values())
    return record(3, ok, "max iterate difference over 20 steps: "
                         + ", ".join(f"{k} {e:.1e}" for k, e in worst.items()) + " (tol 1e-12)")


def check_4():
    lines, ok = [], True
    for seed in range(3):
        g = synthetic_instance(600, 2000, 0.1, 1e-10, seed)
        pr = Problem(g.y, g.A, 1.0)
        ref = objective(pr, lasso_oracle(pr))
        amp = run(pr, "amp", {}, Budget(max_iter=200, stop_tol=None))
        gaps = np.abs(amp.objectives - ref) / ref
        hit = int(np.argmax(gaps <= 1e-5)) if np.any(gaps <= 1e-5) else None
        ok &= hit is not None and not amp.diverged

        prod = synthetic_instance(600, 2000, 0.1, 1e-10, seed, matrix="product", rank=600)
        pp = Problem(prod.y, prod.A, 1.0)
        ref_p = objective(pp, lasso_oracle(pp))
        amp_p = run(pp, "amp", {}, Budget(max_iter=200))
        vamp_p = run(pp, "vamp", {}, Budget(max_iter=1000))
        vgap = rel_gap(vamp_p.final_objective, ref_p)
        ok &= amp_p.diverged and amp_p.meta["diverged_at"] <= 200 and vgap <= 1e-5
        lines.append(f"seed {seed}: gaussian AMP at 1e-5 by iter {hit}; product AMP diverged at "
                     f"{amp_p.meta.get('diverged_at')}, VAMP gap {vgap:.1e}")
    return record(4, ok, "; ".join(lines))


def _dense_grad(dims):
    return GradientOperator(dims).as_dense()


def check_5():
    rng = np.random.default_rng(5)
    rhos = (0.01, 1.0, 100.0)
    worst = 0.0
    count = 0
    for n, p in ((10, 25), (15, 40), (20, 50), (40, 40), (50, 20), (30, 300), (100, 100), (80, 120)):
        A = rng.standard_normal((n, p)) / np.sqrt(n)
        pc = precompute(A)
        for rho in rhos:
            y, u = rng.standard_normal(n), rng.standard_normal(p)
            M = A.T @ A + rho * np.eye(p)
            dense = np.linalg.solve(M, A.T @ y + u)
            worst = max(worst, np.linalg.norm(ridge_solve_woodbury(pc, y, u, rho) - dense) / np.linalg.norm(dense))
            tr = np.trace(np.linalg.inv(M)) / p
            worst = max(worst, abs(sigma_x_spectral(pc, rho) - tr) / tr)
            count += 1
    for n, dims in ((8, (4, 4)), (5, (3, 5)), (3, (6,)), (7, (2, 3, 2)), (20, (8, 8)), (100, (10, 10)),
                    (40, (5, 5, 4))):
        p = int(np.prod(dims))
        A = rng.standard_normal((n, p)) / np.sqrt(n)
        K = _dense_grad(dims)
        pc = precompute(A, GridShape(dims))
        for rho in rhos:
            y, u = rng.standard_normal(n), rng.standard_normal(K.shape[0])
            M = A.T @ A + rho * K.T @ K
            dense = np.linalg.solve(M, A.T @ y + K.T @ u)
            worst = max(worst, np.linalg.norm(tv_solve_fft(pc, y, u, rho) - dense) / np.linalg.norm(dense))
            tr = np.trace(K @ np.linalg.solve(M, K.T)) / K.shape[0]
            worst = max(worst, abs(sigma_x_tv(pc, rho) - tr) / tr)
            count += 1
    return record(5, worst <= 1e-8, f"worst relative error {worst:.1e} over {count} (instance, rho) pairs (tol 1e-8)")


def check_6():
    zk, sg = [], []
    for seed in TOMO_SEEDS:
        tr, _ = tomo_vamp(seed)
        s = tr.state
        Kx = tomo_problem(seed).K.apply(s.x)
        zk.append(np.linalg.norm(s.z - Kx) / np.linalg.norm(Kx))
        sg.append(abs(s.sigma_x - s.sigma_z) / s.sigma_x)
    for seed in range(5):
        pr = sep_problem(seed)
        s = run(pr, "vamp", {}, Budget(max_iter=2000)).state
        zk.append(np.linalg.norm(s.z - s.x) / np.linalg.norm(s.x))
        sg.append(abs(s.sigma_x - s.sigma_z) / s.sigma_x)
    ok = max(zk) <= 1e-6 and max(sg) <= 1e-6
    return record(6, ok, f"max ||z - Kx||/||Kx|| {max(zk):.1e}, max |sx - sz|/sx {max(sg):.1e} (tol 1e-6; "
                         f"5 TV + 5 separable runs)")


def check_7():
    rng = np.random.default_rng(11)
    failures = []
    for dims in ((7,), (4, 6), (3, 3, 4)):
        K = GradientOperator(dims)
        for _ in range(100):
            x, g = rng.standard_normal(K.shape[1]), rng.standard_normal(K.shape[0])
            a, b = K.apply(x) @ g, x @ K.adjoint(g)
            if abs(a - b) > 1e-12 * max(1.0, abs(a)):
                failures.append(f"adjoint {dims}")
                break
        dense = np.linalg.eigvalsh(K.as_dense().T @ K.as_dense())
        if np.abs(np.sort(laplacian_spectrum(dims)) - dense).max() > 1e-10:
            failures.append(f"spectrum {dims}")
    for _ in range(100):
        a, b, th = rng.standard_normal(8) * 3, rng.standard_normal(8) * 3, rng.random() * 2
        if np.linalg.norm(soft_threshold(a, th).value - soft_threshold(b, th).value) > np.linalg.norm(a - b) + 1e-12:
            failures.append("soft nonexpansive")
            break
        if (np.linalg.norm(group_soft_threshold(a, th, 2).value - group_soft_threshold(b, th, 2).value)
                > np.linalg.norm(a - b) + 1e-12):
            failures.append("group nonexpansive")
            break
    h = 1e-6
    for v in (-2.0, -0.3, 0.4, 1.9):
        fd = (moreau_envelope("abs", v + h, 0.7) - moreau_envelope("abs", v - h, 0.7)) / (2 * h)
        if abs(fd - (v - soft_threshold([v], 0.7).value[0])) > 1e-6:
            failures.append("moreau gradient")
    theta = 0.8
    groups = rng.standard_normal((50, 2)) * 1.5
    v = groups[np.abs(np.linalg.norm(groups, axis=1) - theta) > 1e-2].ravel()
    fd = 0.0
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        fd += (group_soft_threshold(v + e, theta, 2).value[i] - group_soft_threshold(v - e, theta, 2).value[i]) / (2 * h)
    if abs(fd / v.size - group_soft_threshold(v, theta, 2).avg_derivative) > 1e-4:
        failures.append("group derivative")
    w = rng.standard_normal(200) * 2
    w = w[np.abs(np.abs(w) - theta) > 1e-3]
    fd_soft = np.mean((soft_threshold(w + h, theta).value - soft_threshold(w - h, theta).value) / (2 * h))
    if abs(fd_soft - soft_threshold(w, theta).avg_derivative) > 1e-4:
        failures.append("soft derivative")
    ok = not failures
    return record(7, ok, "adjoint, spectrum, nonexpansiveness, Moreau gradient and derivative checks "
                         + ("all hold" if ok else "failed: " + ", ".join(failures)))


def check_8():
    inst = synthetic_instance(1200, 2000, 0.2, 1e-10, 0)
    pr = Problem(inst.y, inst.A, 1.0)
    ref = objective(pr, lasso_oracle(pr))
    pc = precompute(pr.A)
    finals = {}
    for rho in (0.01, 0.1, 1.0, 10.0):
        tr = run(pr, "prs", {"rho": rho, "gamma": 1.0}, Budget(max_iter=250, stop_tol=None), precomp=pc)
        finals[rho] = tr.final_objective
    gaps = {rho: max(f - ref, 0.0) / ref for rho, f in finals.items()}
    spread = np.log10(max(gaps.values()) / max(min(gaps.values()), 1e-300))
    best = min(finals.values())
    vamp = run(pr, "vamp", {}, precomp=pc)
    vgap = rel_gap(vamp.final_objective, best)
    ok = spread >= 2.0 and vgap <= 1e-4
    gtxt = ", ".join(f"rho={r:g}: {g:.1e}" for r, g in gaps.items())
    return record(8, ok, f"PRS suboptimality after 250 iters [{gtxt}] spans {spread:.1f} decades (need 2); "
                         f"default VAMP vs best PRS {vgap:.1e} (tol 1e-4)")


def check_9():
    spreads = []
    for seed in TOMO_SEEDS:
        finals = [tomo_vamp(seed, g, 2000)[0].final_objective for g in (0.4, 0.5)]
        # same 2000-iteration budget for gamma = 0.6, read off the longer deterministic run
        finals.append(tomo_vamp(seed)[0].rows[2000].objective)
        spreads.append((max(finals) - min(finals)) / min(finals))
    return record(9, max(spreads) <= 1e-3,
                  f"max relative spread of 2000-iteration VAMP objectives over gamma in (0.4, 0.5, 0.6): "
                  f"{max(spreads):.1e} (tol 1e-3)")


CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6, 7: check_7, 8: check_8,
          9: check_9}


@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(CHECKS))
def test_criterion(k):
    ok = CHECKS[k]()
    assert ok, RESULTS[k]


if __name__ == "__main__":
    failed = 0
    for k in sorted(CHECKS):
        failed += not CHECKS[k]()
        print(RESULTS[k], flush=True)
    sys.exit(1 if failed else 0)
