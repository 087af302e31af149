"""Acceptance gate: one test per release criterion, each printing a single
pass/fail line.  Run with ``pytest tests/test_acceptance.py -v -s``."""

import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

import predswitch as ps
from predswitch import errors
from predswitch.numerics import weighted_norm_sq
from conftest import (
    GAMMA_BENCH,
    MU_BENCH,
    Q_PUBLISHED,
    R_PUBLISHED,
    RHO1_PUBLISHED,
    RHO2_PUBLISHED,
    T_STAR,
    random_schur_instance,
    _sym,
)


def _report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    print(line)
    assert ok, line


def _rho_residual(T):
    _, nominal = ps.build_example_system(T, 0.007, 0.015)
    cycle = ps.Cycle(nu=(1, 2), num_modes=2)
    try:
        lc = ps.compute_limit_cycle(nominal, cycle)
    except errors.NoUniqueLimitCycle:
        return np.inf
    return max(
        np.linalg.norm(lc.rho[0] - RHO1_PUBLISHED),
        np.linalg.norm(lc.rho[1] - RHO2_PUBLISHED),
    )


def test_criterion_1_coupling_blocks_published_values(bench_ncert, bench_rcert):
    """Published (P, R, Q) satisfy both coupling blocks, independent of T."""
    t0 = time.perf_counter()
    R, Q = bench_rcert.R, bench_rcert.Q
    margins = []
    for P in bench_ncert.P:
        C = np.block([[R + Q, -Q], [-Q, P + Q - 2.0 * R]])
        margins.append(np.linalg.eigvalsh(0.5 * (C + C.T))[0])
    elapsed = time.perf_counter() - t0
    ok = min(margins) > 0 and elapsed < 1.0
    _report(
        1,
        ok,
        f"coupling min eigenvalues {margins[0]:.4g}, {margins[1]:.4g} "
        f"(> 0 required), {elapsed:.3f}s",
    )


def test_criterion_2_T_calibration():
    """A 1-D search over T in (0, 2] reproduces the published limit cycle."""
    t0 = time.perf_counter()
    grid = np.linspace(0.05, 2.0, 40)
    residuals = [_rho_residual(T) for T in grid]
    i = int(np.argmin(residuals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(_rho_residual, bounds=(lo, hi), method="bounded")
    t_star, best = float(res.x), float(res.fun)
    elapsed = time.perf_counter() - t0
    ok = best <= 5e-2 and elapsed < 30.0
    _report(
        2,
        ok,
        f"T* = {t_star:.4f} with residual {best:.4g} (<= 5e-2), {elapsed:.1f}s",
    )
    # the fixed period used by the rest of the suite must sit at the optimum
    assert abs(t_star - T_STAR) < 5e-3
    assert _rho_residual(T_STAR) <= 5e-2


def test_criterion_3_published_certificates_verify(
    bench_system, bench_lc, bench_ncert, bench_rcert
):
    """Published P (nominal decay) and (R, Q) (robust blocks) re-verify."""
    system, nominal, cycle = bench_system
    nrep = ps.verify_nominal_certificate(bench_ncert, nominal, cycle)
    rrep = ps.verify_robust_certificate(
        system, cycle, nominal, bench_lc, bench_ncert,
        bench_rcert.R, bench_rcert.Q, bench_rcert.gamma,
    )
    ok = (
        nrep.valid
        and nrep.min_margin > 1e-6
        and rrep.valid
        and rrep.min_margin > 1e-6
    )
    _report(
        3,
        ok,
        f"nominal min margin {nrep.min_margin:.4g}, "
        f"robust min margin {rrep.min_margin:.4g} (both > 1e-6)",
    )


def test_criterion_4_independent_synthesis(bench_system, bench_lc, bench_ncert):
    """The built-in LMI engine finds its own (R, Q) at gamma = 0.125."""
    system, nominal, cycle = bench_system
    t0 = time.perf_counter()
    cert = ps.synthesize_robust_certificate(
        system, cycle, nominal, bench_lc, bench_ncert, GAMMA_BENCH
    )
    elapsed = time.perf_counter() - t0
    rep = ps.verify_robust_certificate(
        system, cycle, nominal, bench_lc, bench_ncert, cert.R, cert.Q, cert.gamma
    )
    ok = rep.valid and rep.min_margin >= 1e-6 and elapsed < 60.0
    _report(
        4,
        ok,
        f"synthesized margin {rep.min_margin:.4g} (>= 1e-6), {elapsed:.1f}s",
    )


def test_criterion_5_invariance_100_runs(
    bench_system, bench_lc, bench_ncert, bench_rcert
):
    """100 seeded closed-loop runs: the attractor is never left once entered
    and the Lyapunov decrement holds wherever the argmin condition does."""
    system, nominal, cycle = bench_system
    gamma = bench_rcert.gamma
    t0 = time.perf_counter()
    worst_slack = -np.inf
    runs = 0
    for strategy in ("vertex-random", "dirichlet-uniform"):
        for seed in range(50):
            trace = ps.simulate(
                system, cycle, nominal, bench_lc, bench_ncert, bench_rcert,
                x0=[-1.0, 1.0, -1.0], horizon=10_000, seed=seed,
                strategy=strategy,
            )
            runs += 1
            inside = trace.in_attractor
            if inside.any():
                entered = int(np.argmax(inside))
                assert inside[entered:].all(), (strategy, seed)
            ok_steps = trace.argmin_ok[:-1]
            slack = np.max(
                trace.V[1:][ok_steps]
                - ((1.0 - gamma) * trace.V[:-1][ok_steps] + gamma)
            )
            worst_slack = max(worst_slack, float(slack))
            assert slack <= 1e-9, (strategy, seed, slack)
    elapsed = time.perf_counter() - t0
    ok = runs == 100 and worst_slack <= 1e-9 and elapsed < 120.0
    _report(
        5,
        ok,
        f"{runs} runs invariant, worst decrement slack {worst_slack:.3g} "
        f"(<= 1e-9), {elapsed:.1f}s",
    )


def test_criterion_6_property_suite(
    bench_system, bench_lc, bench_ncert, toy_system
):
    system, nominal, cycle = bench_system

    # (a) limit-cycle residual on 100 random Schur-stable instances
    rng = np.random.default_rng(2024)
    count = 0
    worst_res = 0.0
    while count < 100:
        n = int(rng.integers(1, 6))
        K = int(rng.integers(2, 4))
        inst_system, inst_nominal = random_schur_instance(rng, n, K)
        nu = tuple(int(v) for v in rng.integers(1, K + 1, size=rng.integers(1, 7)))
        try:
            inst_cycle = ps.Cycle(nu=nu, num_modes=K)
        except errors.InvalidInput:
            continue
        lc = ps.compute_limit_cycle(inst_nominal, inst_cycle)
        worst_res = max(
            worst_res, ps.limit_cycle_residual(lc, inst_nominal, inst_cycle)
        )
        count += 1
    assert worst_res <= 1e-10

    # (b) prediction identity (exact) and mismatch identity (1e-12)
    # over 10^4 random closed-loop steps
    rng = np.random.default_rng(2025)
    worst_mismatch = 0.0
    for _ in range(10_000):
        state = ps.ClosedLoopState(
            x=3.0 * rng.normal(size=3),
            z=3.0 * rng.normal(size=3),
            theta=int(rng.integers(1, 3)),
            vartheta=int(rng.integers(1, 3)),
        )
        pred = ps.predict(state, nominal, cycle)
        w = rng.dirichlet(np.ones(2))
        nxt = ps.step(state, system, w, nominal, cycle, bench_lc, bench_ncert)
        assert np.array_equal(
            ps.predict(nxt, nominal, cycle).zfrak1, pred.chi1
        )
        j = cycle.mode_at(state.theta)
        A, B = ps.realize(system.mode(j), w)
        Abar, _ = nominal.matrices(j)
        rho_th = bench_lc.rho[state.theta - 1]
        delta = A @ rho_th + B - bench_lc.point(state.theta + 1, cycle)
        lhs = nxt.x - pred.chi1
        rhs = (A - Abar) @ (pred.chi0 - rho_th) + delta
        worst_mismatch = max(worst_mismatch, float(np.max(np.abs(lhs - rhs))))
    assert worst_mismatch <= 1e-12

    # (c) predictor contraction at every state visited by a simulation
    rcert = ps.RobustCertificate(
        R=_sym(R_PUBLISHED), Q=_sym(Q_PUBLISHED), gamma=GAMMA_BENCH, margin=np.nan
    )
    trace = ps.simulate(
        system, cycle, nominal, bench_lc, bench_ncert, rcert,
        x0=[-1.0, 1.0, -1.0], horizon=2000, seed=11, strategy="vertex-random",
    )
    for k in range(trace.horizon + 1):
        th = int(trace.theta[k])
        nx = cycle.index(th + 1)
        lhs = weighted_norm_sq(
            trace.chi1[k] - bench_lc.rho[nx - 1], bench_ncert.P[nx - 1]
        )
        rhs = weighted_norm_sq(
            trace.x[k] - bench_lc.rho[th - 1], bench_ncert.P[th - 1]
        )
        assert lhs <= (1.0 - MU_BENCH) * rhs + 1e-9

    # (d) solver soundness: verdicts re-verified by direct eigenvalue checks
    prob = ps.assemble_theorem(
        system, cycle, nominal, bench_lc, bench_ncert, GAMMA_BENCH
    )
    result = ps.solve_feasibility(prob)
    direct = min(
        np.linalg.eigvalsh(M)[0] for M in prob.eval_blocks(result.assignment)
    )
    assert result.margin == direct
    infeasible = ps.LmiProblem(
        F0=(-np.eye(1), np.array([[-1.0]])),
        F=((np.eye(1), -np.eye(1)),),
    )
    with pytest.raises(errors.Infeasible) as exc_info:
        ps.solve_feasibility(infeasible)
    assert exc_info.value.best_margin <= 0

    # (e) closed-form certificate on 20 random zero-uncertainty instances
    rng = np.random.default_rng(2026)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        inst_system, inst_nominal = random_schur_instance(rng, n, 2)
        inst_cycle = ps.Cycle(nu=(1, 2), num_modes=2)
        lc = ps.compute_limit_cycle(inst_nominal, inst_cycle)
        mu = 0.5 * ps.max_mu(inst_nominal, inst_cycle)
        ncert = ps.synthesize_nominal_certificate(inst_nominal, inst_cycle, mu)
        gamma = 0.5 * mu
        R, Q = ps.closed_form_certificate(ncert, gamma)
        rep = ps.verify_robust_certificate(
            inst_system, inst_cycle, inst_nominal, lc, ncert, R, Q, gamma
        )
        assert rep.valid

    # (f) scalar toy limit cycle against the hand-derived oracle
    _, toy_nominal, toy_cycle = toy_system
    toy_lc = ps.compute_limit_cycle(toy_nominal, toy_cycle)
    assert abs(toy_lc.rho[0][0] + 2.0 / 3.0) < 1e-12
    assert abs(toy_lc.rho[1][0] - 2.0 / 3.0) < 1e-12

    _report(
        6,
        True,
        f"properties a-f hold (worst residual {worst_res:.2g}, "
        f"worst mismatch {worst_mismatch:.2g})",
    )


def test_criterion_7_ellipsoid_disjointness(bench_lc, bench_ncert, bench_rcert):
    """The two attractor ellipsoids are disjoint: analytic test plus
    Monte-Carlo cross-membership with zero hits."""
    ellipsoids, disjoint = ps.attractor_projection(
        bench_lc, bench_ncert, bench_rcert
    )
    assert disjoint[(1, 2)] is True
    rng = np.random.default_rng(77)
    n = 3
    hits = 0
    for a, b in ((0, 1), (1, 0)):
        ea, eb = ellipsoids[a], ellipsoids[b]
        w, V = np.linalg.eigh(ea.shape)
        half_inv = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
        g = rng.normal(size=(100_000, n))
        ball = g / np.linalg.norm(g, axis=1, keepdims=True)
        ball *= rng.uniform(size=(100_000, 1)) ** (1.0 / n)
        pts = ea.center + ball @ half_inv
        assert ea.contains(pts).all()
        hits += int(eb.contains(pts).sum())
    ok = hits == 0
    _report(7, ok, f"analytic test disjoint, {hits} cross-membership hits in 2x1e5")
