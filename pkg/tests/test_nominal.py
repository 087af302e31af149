import numpy as np
import pytest

import predswitch as ps
from predswitch import errors
from conftest import MU_BENCH, RHO1_PUBLISHED, RHO2_PUBLISHED, random_schur_instance


def test_monodromy_benchmark_spectral_radius(bench_system):
    _, nominal, cycle = bench_system
    rep = ps.monodromy(nominal, cycle)
    assert rep.schur_stable
    # frozen from an independent eigenvalue computation of the cycle product
    assert rep.spectral_radius == pytest.approx(0.42966215140427466, abs=1e-9)


def test_monodromy_order_application():
    # with non-commuting A's the product order matters for the matrix itself
    A1 = np.array([[0.0, 0.5], [0.0, 0.0]])
    A2 = np.array([[0.0, 0.0], [0.5, 0.0]])
    m1 = ps.ModePolytope(vertices=((A1, np.zeros(2)),))
    m2 = ps.ModePolytope(vertices=((A2, np.zeros(2)),))
    system = ps.SwitchedAffineSystem(modes=(m1, m2))
    nominal = ps.NominalSelection.midpoint(system)
    cycle = ps.Cycle(nu=(1, 2), num_modes=2)
    rep = ps.monodromy(nominal, cycle)
    # last applied mode (nu(2) = 2) sits leftmost: A2 @ A1
    assert np.allclose(rep.Phi, A2 @ A1)


def test_limit_cycle_residual_benchmark(bench_system, bench_lc):
    _, nominal, cycle = bench_system
    assert ps.limit_cycle_residual(bench_lc, nominal, cycle) < 1e-10


def test_limit_cycle_close_to_published(bench_system, bench_lc):
    # published to 2-4 decimals; the discretized cycle should land nearby
    err = max(
        np.linalg.norm(bench_lc.rho[0] - RHO1_PUBLISHED),
        np.linalg.norm(bench_lc.rho[1] - RHO2_PUBLISHED),
    )
    assert err < 5e-2


def test_limit_cycle_scalar_toy_exact(toy_system):
    _, nominal, cycle = toy_system
    lc = ps.compute_limit_cycle(nominal, cycle)
    assert abs(lc.rho[0][0] - (-2.0 / 3.0)) < 1e-12
    assert abs(lc.rho[1][0] - (2.0 / 3.0)) < 1e-12


def test_limit_cycle_point_wraps(toy_system):
    _, nominal, cycle = toy_system
    lc = ps.compute_limit_cycle(nominal, cycle)
    assert np.array_equal(lc.point(3, cycle), lc.rho[0])


def test_no_unique_limit_cycle_when_identity():
    m = ps.ModePolytope(vertices=((np.eye(2), np.ones(2)),))
    system = ps.SwitchedAffineSystem(modes=(m, m))
    nominal = ps.NominalSelection.midpoint(system)
    cycle = ps.Cycle(nu=(1, 2), num_modes=2)
    with pytest.raises(errors.NoUniqueLimitCycle):
        ps.compute_limit_cycle(nominal, cycle)


def test_max_mu_closed_form(bench_system):
    _, nominal, cycle = bench_system
    rep = ps.monodromy(nominal, cycle)
    expect = 1.0 - rep.spectral_radius ** (2.0 / cycle.period)
    assert ps.max_mu(nominal, cycle) == pytest.approx(expect, abs=1e-12)


def test_max_mu_requires_schur():
    m = ps.ModePolytope(vertices=((2.0 * np.eye(2), np.zeros(2)),))
    system = ps.SwitchedAffineSystem(modes=(m, m))
    nominal = ps.NominalSelection.midpoint(system)
    cycle = ps.Cycle(nu=(1, 2), num_modes=2)
    with pytest.raises(errors.MuInfeasible):
        ps.max_mu(nominal, cycle)


def test_synthesize_and_verify_benchmark(bench_system):
    _, nominal, cycle = bench_system
    cert = ps.synthesize_nominal_certificate(nominal, cycle, MU_BENCH)
    rep = ps.verify_nominal_certificate(cert, nominal, cycle)
    assert rep.valid
    assert rep.min_margin > 0


def test_synthesize_scale_renormalizes(bench_system):
    _, nominal, cycle = bench_system
    cert = ps.synthesize_nominal_certificate(nominal, cycle, MU_BENCH, scale=5.0)
    top = max(np.linalg.eigvalsh(P)[-1] for P in cert.P)
    assert top == pytest.approx(5.0, rel=1e-10)
    assert ps.verify_nominal_certificate(cert, nominal, cycle).valid


def test_synthesize_rejects_mu_out_of_range(bench_system):
    _, nominal, cycle = bench_system
    for mu in (0.0, 1.0, -0.1):
        with pytest.raises(errors.InvalidInput):
            ps.synthesize_nominal_certificate(nominal, cycle, mu)


def test_synthesize_mu_too_large(bench_system):
    _, nominal, cycle = bench_system
    mu_star = ps.max_mu(nominal, cycle)
    with pytest.raises(errors.MuTooLarge):
        ps.synthesize_nominal_certificate(nominal, cycle, min(0.999, mu_star + 0.05))


def test_published_certificate_verifies(bench_system, bench_ncert):
    _, nominal, cycle = bench_system
    rep = ps.verify_nominal_certificate(bench_ncert, nominal, cycle)
    assert rep.valid
    assert rep.min_margin > 1e-6


def test_synthesis_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n = int(rng.integers(1, 5))
        K = int(rng.integers(2, 4))
        system, nominal = random_schur_instance(rng, n, K)
        nu = [int(rng.integers(1, K + 1))]
        for _ in range(int(rng.integers(1, 4))):
            nxt = int(rng.integers(1, K + 1))
            nu.append(nxt)
        try:
            cycle = ps.Cycle(nu=tuple(nu), num_modes=K)
        except errors.InvalidInput:
            continue  # drew a reducible sequence; skip
        lc = ps.compute_limit_cycle(nominal, cycle)
        assert ps.limit_cycle_residual(lc, nominal, cycle) <= 1e-10
        mu = 0.5 * ps.max_mu(nominal, cycle)
        cert = ps.synthesize_nominal_certificate(nominal, cycle, mu)
        assert ps.verify_nominal_certificate(cert, nominal, cycle).valid
