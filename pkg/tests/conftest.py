"""Shared fixtures: the three-dimensional two-mode benchmark at its
calibrated sampling period, the published certificate values for it, and a
hand-checkable scalar toy system."""

import numpy as np
import pytest

import predswitch as ps

# Sampling period recovered by calibrating the discretized limit cycle
# against the published one (see test_acceptance criterion 2).
T_STAR = 1.0

# Published benchmark values (P1 carries rounding asymmetry in the source;
# ingest symmetrizes by averaging).
P1_PUBLISHED = np.array(
    [[0.73, 3.77, -3.38], [3.778, 25.7, -19.8], [-3.38, -19.8, 28.49]]
)
P2_PUBLISHED = np.array(
    [[4.51, 4.89, -2.9], [4.89, 6.31, -3.58], [-2.9, -3.58, 4.02]]
)
R_PUBLISHED = np.array(
    [[0.003, 0.003, -0.0051], [0.003, 0.0053, -0.0013], [-0.0051, -0.0013, 0.0781]]
)
Q_PUBLISHED = np.array(
    [[65.8, 7.56, -1.33], [7.56, 158.7, -122.6], [-1.33, -122.6, 553.01]]
)
RHO1_PUBLISHED = np.array([3.84, -0.65, 0.36])
RHO2_PUBLISHED = np.array([1.12, 0.014, 1.1042])
MU_BENCH = 0.25
GAMMA_BENCH = 0.125


def _sym(M):
    return 0.5 * (M + M.T)


@pytest.fixture(scope="session")
def bench_system():
    system, nominal = ps.build_example_system(T_STAR, 0.007, 0.015)
    cycle = ps.Cycle(nu=(1, 2), num_modes=2)
    return system, nominal, cycle


@pytest.fixture(scope="session")
def bench_lc(bench_system):
    _, nominal, cycle = bench_system
    return ps.compute_limit_cycle(nominal, cycle)


@pytest.fixture(scope="session")
def bench_ncert():
    return ps.NominalCertificate(
        P=(_sym(P1_PUBLISHED), _sym(P2_PUBLISHED)), mu=MU_BENCH
    )


@pytest.fixture(scope="session")
def bench_rcert():
    return ps.RobustCertificate(
        R=_sym(R_PUBLISHED), Q=_sym(Q_PUBLISHED), gamma=GAMMA_BENCH, margin=np.nan
    )


@pytest.fixture(scope="session")
def toy_system():
    """Scalar two-mode system x+ = 0.5 x +/- 1 with no uncertainty.

    Along the cycle (1, 2) the limit cycle is rho = (-2/3, 2/3): solving
    r2 = 0.5 r1 + 1 and r1 = 0.5 r2 - 1 by hand gives r1 = -2/3.
    """
    m1 = ps.ModePolytope(vertices=((np.array([[0.5]]), np.array([1.0])),))
    m2 = ps.ModePolytope(vertices=((np.array([[0.5]]), np.array([-1.0])),))
    system = ps.SwitchedAffineSystem(modes=(m1, m2))
    nominal = ps.NominalSelection.midpoint(system)
    cycle = ps.Cycle(nu=(1, 2), num_modes=2)
    return system, nominal, cycle


@pytest.fixture(scope="session")
def toy_certified(toy_system):
    system, nominal, cycle = toy_system
    lc = ps.compute_limit_cycle(nominal, cycle)
    ncert = ps.synthesize_nominal_certificate(nominal, cycle, mu=0.5)
    rcert = ps.synthesize_robust_certificate(
        system, cycle, nominal, lc, ncert, gamma=0.25
    )
    return lc, ncert, rcert


def random_schur_instance(rng, n, num_modes, radius=0.8):
    """A random single-vertex (certain) system whose per-mode A matrices all
    have spectral norm below ``radius``, so every cycle is Schur stable."""
    modes = []
    for _ in range(num_modes):
        A = rng.normal(size=(n, n))
        A *= radius * rng.uniform(0.3, 1.0) / np.linalg.svd(A, compute_uv=False)[0]
        B = rng.normal(size=n)
        modes.append(ps.ModePolytope(vertices=((A, B),)))
    system = ps.SwitchedAffineSystem(modes=tuple(modes))
    return system, ps.NominalSelection.midpoint(system)
