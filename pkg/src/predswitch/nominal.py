"""Nominal limit cycle and nominal Lyapunov certificates.

Given a cycle nu and nominal matrices, this module computes the monodromy
matrix and its Schur test, the unique periodic fixed point {rho_i}, and a
family {P_i} with decay margin mu satisfying

    P_i > 0,   Abar_{nu(i)}^T P_{i+1} Abar_{nu(i)} < (1 - mu) P_i.

Synthesis is constructive (discrete Lyapunov equation for the mu-scaled
monodromy, then back-propagation around the cycle), which keeps it
independent of the robust module's LMI engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, MuInfeasible, MuTooLarge, NoUniqueLimitCycle, NotSchurStable
from .model import Cycle, NominalSelection
from .numerics import (
    solve_discrete_lyapunov,
    spectral_radius,
    sym_eigs,
    symmetrize,
)

LIMIT_CYCLE_RESIDUAL_TOL = 1e-10

# Relative size of the epsilon shift that closes the strict inequalities in
# the back-propagated certificate.
SYNTHESIS_EPS_REL = 1e-6


@dataclass(frozen=True)
class MonodromyReport:
    Phi: np.ndarray
    spectral_radius: float
    schur_stable: bool


@dataclass(frozen=True)
class LimitCycle:
    """Periodic points rho_1..rho_N of the nominal dynamics along the cycle."""

    rho: tuple

    def point(self, i: int, cycle: Cycle):
        return self.rho[cycle.index(i) - 1]


@dataclass(frozen=True)
class NominalCertificate:
    """Matrices P_1..P_N and decay margin mu in (0, 1)."""

    P: tuple
    mu: float

    def matrix(self, i: int, cycle: Cycle):
        return self.P[cycle.index(i) - 1]


@dataclass(frozen=True)
class NominalMarginReport:
    """Min eigenvalues of P_i and of (1-mu) P_i - Abar^T P_{i+1} Abar per index."""

    p_margins: tuple
    decay_margins: tuple

    @property
    def valid(self) -> bool:
        return min(self.p_margins) > 0 and min(self.decay_margins) > 0

    @property
    def min_margin(self) -> float:
        return min(min(self.p_margins), min(self.decay_margins))


def _cycle_matrices(nominal: NominalSelection, cycle: Cycle):
    if max(cycle.nu) > nominal.num_modes:
        raise InvalidInput("cycle references a mode the nominal selection lacks")
    A = [nominal.Abar[j - 1] for j in cycle.nu]
    B = [nominal.Bbar[j - 1] for j in cycle.nu]
    return A, B


def monodromy(nominal: NominalSelection, cycle: Cycle) -> MonodromyReport:
    """Product of the nominal A matrices over one period, in application order
    (last applied mode leftmost), with its Schur stability verdict."""
    A, _ = _cycle_matrices(nominal, cycle)
    Phi = np.eye(A[0].shape[0])
    for Ai in A:
        Phi = Ai @ Phi
    rho = spectral_radius(Phi)
    return MonodromyReport(Phi=Phi, spectral_radius=rho, schur_stable=rho < 1.0)


def compute_limit_cycle(nominal: NominalSelection, cycle: Cycle) -> LimitCycle:
    """Solve rho_{i+1} = Abar_{nu(i)} rho_i + Bbar_{nu(i)} around the cycle.

    rho_1 solves the one-period fixed point (I - Phi) rho_1 = c; the other
    points follow by exact forward propagation.  One step of iterative
    refinement keeps the wrap-around residual at machine precision.
    """
    A, B = _cycle_matrices(nominal, cycle)
    n = A[0].shape[0]
    Phi = np.eye(n)
    c = np.zeros(n)
    for Ai, Bi in zip(A, B):
        c = Ai @ c + Bi
        Phi = Ai @ Phi
    M = np.eye(n) - Phi
    if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.linalg.norm(Phi)) ** n:
        raise NoUniqueLimitCycle("I - Phi is numerically singular")
    rho1 = np.linalg.solve(M, c)
    # one refinement step on the fixed point
    rho1 = rho1 + np.linalg.solve(M, c - M @ rho1)
    rho = [rho1]
    for Ai, Bi in zip(A[:-1], B[:-1]):
        rho.append(Ai @ rho[-1] + Bi)
    lc = LimitCycle(rho=tuple(rho))
    res = limit_cycle_residual(lc, nominal, cycle)
    if res > LIMIT_CYCLE_RESIDUAL_TOL:
        raise NoUniqueLimitCycle(f"fixed-point residual {res:.3g} exceeds tolerance")
    return lc


def limit_cycle_residual(lc: LimitCycle, nominal: NominalSelection, cycle: Cycle) -> float:
    """Max norm of rho_{i+1} - (Abar rho_i + Bbar) over the cycle."""
    A, B = _cycle_matrices(nominal, cycle)
    N = cycle.period
    res = 0.0
    for i in range(N):
        nxt = lc.rho[(i + 1) % N]
        res = max(res, float(np.linalg.norm(A[i] @ lc.rho[i] + B[i] - nxt)))
    return res


def max_mu(nominal: NominalSelection, cycle: Cycle, tol: float = 1e-9) -> float:
    """Largest mu in (0, 1) keeping (1-mu)^(-N/2) Phi Schur stable.

    Closed form: 1 - spectral_radius(Phi)^(2/N), capped at 1 - tol.
    """
    rep = monodromy(nominal, cycle)
    if not rep.schur_stable:
        raise MuInfeasible(
            f"monodromy spectral radius {rep.spectral_radius:.6g} >= 1"
        )
    if rep.spectral_radius == 0.0:
        return 1.0 - tol
    mu = 1.0 - rep.spectral_radius ** (2.0 / cycle.period)
    return min(mu, 1.0 - tol)


def synthesize_nominal_certificate(
    nominal: NominalSelection, cycle: Cycle, mu: float, scale: float | None = None
) -> NominalCertificate:
    """Constructive certificate for the decay inequality at rate mu.

    P_1 solves the discrete Lyapunov equation of the mu-scaled monodromy;
    the remaining P_i are back-propagated with a small epsilon shift so all
    strict inequalities close.  ``scale``, when given, renormalizes the
    family so the largest eigenvalue over all P_i equals it (the decay
    inequality is invariant under joint scaling; downstream robust
    feasibility is not, since its gamma block is fixed).
    """
    if scale is not None and scale <= 0:
        raise InvalidInput(f"scale must be positive, got {scale}")
    if not 0.0 < mu < 1.0:
        raise InvalidInput(f"mu must lie in (0, 1), got {mu}")
    A, _ = _cycle_matrices(nominal, cycle)
    N = cycle.period
    n = A[0].shape[0]
    s = (1.0 - mu) ** (-0.5)
    Phi_s = np.eye(n)
    for Ai in A:
        Phi_s = (s * Ai) @ Phi_s
    try:
        P1 = solve_discrete_lyapunov(Phi_s, np.eye(n))
    except NotSchurStable as exc:
        raise MuTooLarge(
            f"mu={mu} makes the scaled monodromy unstable ({exc})"
        ) from exc
    eps = SYNTHESIS_EPS_REL * sym_eigs(P1).eigenvalues[-1]
    P = [None] * N
    P[0] = symmetrize(P1)
    # back-propagate P_i from P_{i+1}; wrap closure is guaranteed by the
    # Lyapunov equation up to the epsilon shift
    for i in range(N - 1, 0, -1):
        P_next = P[(i + 1) % N]
        P[i] = symmetrize(A[i].T @ P_next @ A[i] / (1.0 - mu) + eps * np.eye(n))
    if scale is not None:
        top = max(sym_eigs(Pi).eigenvalues[-1] for Pi in P)
        P = [Pi * (scale / top) for Pi in P]
    cert = NominalCertificate(P=tuple(P), mu=mu)
    report = verify_nominal_certificate(cert, nominal, cycle)
    if not report.valid:
        raise MuTooLarge(
            f"synthesis failed to close at mu={mu} (min margin {report.min_margin:.3g})"
        )
    return cert


def verify_nominal_certificate(
    cert: NominalCertificate, nominal: NominalSelection, cycle: Cycle
) -> NominalMarginReport:
    """Min-eigenvalue margins of P_i > 0 and the mu-decay inequality per index."""
    A, _ = _cycle_matrices(nominal, cycle)
    N = cycle.period
    if len(cert.P) != N:
        raise InvalidInput("certificate length does not match the cycle period")
    p_margins = []
    decay_margins = []
    for i in range(N):
        Pi = np.asarray(cert.P[i], dtype=float)
        Pn = np.asarray(cert.P[(i + 1) % N], dtype=float)
        p_margins.append(sym_eigs(Pi).min_eig)
        decay = (1.0 - cert.mu) * Pi - A[i].T @ Pn @ A[i]
        decay_margins.append(sym_eigs(symmetrize(decay)).min_eig)
    return NominalMarginReport(p_margins=tuple(p_margins), decay_margins=tuple(decay_margins))
