"""Robust certification of the predictive closed loop.

Assembles the vertex-wise positive-definiteness conditions that certify
robust exponential convergence to the limit-cycle attractor: per cycle
index i, a 2n x 2n coupling block

    [[R + Q, -Q], [-Q, P_i + Q - 2R]] > 0

and, per index i and vertex l, the (3n+1) x (3n+1) block

    Psi_i(A^l, B^l) = [[(1-g)(R+Q) - (1-mu) P_i, -(1-g) Q, 0, dA^T (Q+2R)],
                       [*, (1-g)(P_i + Q - 2R),  0,  0],
                       [*, *, g, d^T (Q+2R)],
                       [*, *, *, Q + 2R]] > 0

with dA = A^l - Abar and d = A^l rho_i + B^l - rho_{i+1}, plus R >= 0.
Decision variables are the free entries of R and Q; gamma is a fixed
tuning parameter so the system is affine (an LMI) in the variables.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput
from .lmi import FeasibilityOptions, LmiProblem, solve_feasibility
from .model import Cycle, NominalSelection, SwitchedAffineSystem
from .nominal import LimitCycle, NominalCertificate
from .numerics import sym_eigs, symmetrize


@dataclass(frozen=True)
class RobustCertificate:
    R: np.ndarray
    Q: np.ndarray
    gamma: float
    margin: float


@dataclass(frozen=True)
class RobustMarginReport:
    """Min eigenvalue per assembled block at a given (R, Q, gamma)."""

    block_margins: tuple
    block_names: tuple
    r_margin: float  # min eig of R (>= 0 required)
    q_margin: float  # min eig of Q (> 0 required)

    @property
    def min_margin(self) -> float:
        return min(self.block_margins)

    @property
    def valid(self) -> bool:
        # R enters as a semidefinite constraint (R = 0 is admissible); all
        # other blocks must be strictly positive definite.
        strict = [
            m
            for m, name in zip(self.block_margins, self.block_names)
            if name != "R_psd"
        ]
        return min(strict) > 0 and self.r_margin >= 0 and self.q_margin > 0


def sym_basis(n: int):
    """Basis of symmetric n x n matrices: E_ij + E_ji for i <= j."""
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            E[j, i] = 1.0
            basis.append(E)
    return basis


def pack_rq(R, Q):
    """Flatten (R, Q) into the decision-variable vector."""
    R = np.asarray(R, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = R.shape[0]
    iu = np.triu_indices(n)
    return np.concatenate([R[iu], Q[iu]])


def unpack_rq(y, n: int):
    """Inverse of pack_rq."""
    y = np.asarray(y, dtype=float).ravel()
    m = n * (n + 1) // 2
    if y.shape != (2 * m,):
        raise InvalidInput(f"expected {2 * m} variables for n={n}, got {y.shape}")
    iu = np.triu_indices(n)
    R = np.zeros((n, n))
    Q = np.zeros((n, n))
    R[iu] = y[:m]
    Q[iu] = y[m:]
    R = R + R.T - np.diag(np.diag(R))
    Q = Q + Q.T - np.diag(np.diag(Q))
    return R, Q


def delta_vector(
    system: SwitchedAffineSystem, cycle: Cycle, lc: LimitCycle, i: int, ell: int
):
    """Deviation of vertex (i, l) from the nominal limit-cycle recursion:
    A^l rho_i + B^l - rho_{i+1}."""
    if not 1 <= i <= cycle.period:
        raise InvalidInput(f"cycle index {i} out of 1..{cycle.period}")
    mode = system.mode(cycle.mode_at(i))
    if not 1 <= ell <= mode.num_vertices:
        raise InvalidInput(f"vertex index {ell} out of 1..{mode.num_vertices}")
    A, B = mode.vertices[ell - 1]
    rho_i = lc.rho[i - 1]
    rho_next = lc.point(i + 1, cycle)
    return A @ rho_i + B - rho_next


def _theorem_blocks(system, cycle, nominal, lc, cert, gamma, R, Q):
    """Evaluate all certification blocks at concrete (R, Q).

    Returns (blocks, names).  This direct evaluation is the single source of
    truth; the affine LmiProblem is derived from it by probing."""
    n = system.n
    N = cycle.period
    mu = cert.mu
    QR = Q + 2.0 * R
    blocks = []
    names = []
    for i in range(1, N + 1):
        Pi = np.asarray(cert.P[i - 1], dtype=float)
        C = np.block([[R + Q, -Q], [-Q, Pi + Q - 2.0 * R]])
        blocks.append(symmetrize(C))
        names.append(f"coupling[i={i}]")
    for i in range(1, N + 1):
        Pi = np.asarray(cert.P[i - 1], dtype=float)
        j = cycle.mode_at(i)
        Abar, _ = nominal.matrices(j)
        mode = system.mode(j)
        for ell in range(1, mode.num_vertices + 1):
            Al, _ = mode.vertices[ell - 1]
            dA = Al - Abar
            dl = delta_vector(system, cycle, lc, i, ell)
            M = np.zeros((3 * n + 1, 3 * n + 1))
            M[:n, :n] = (1.0 - gamma) * (R + Q) - (1.0 - mu) * Pi
            M[:n, n : 2 * n] = -(1.0 - gamma) * Q
            M[n : 2 * n, :n] = -(1.0 - gamma) * Q
            M[:n, 2 * n + 1 :] = dA.T @ QR
            M[2 * n + 1 :, :n] = (dA.T @ QR).T
            M[n : 2 * n, n : 2 * n] = (1.0 - gamma) * (Pi + Q - 2.0 * R)
            M[2 * n, 2 * n] = gamma
            M[2 * n, 2 * n + 1 :] = dl @ QR
            M[2 * n + 1 :, 2 * n] = QR @ dl
            M[2 * n + 1 :, 2 * n + 1 :] = QR
            blocks.append(symmetrize(M))
            names.append(f"psi[i={i},l={ell}]")
    blocks.append(R.copy())
    names.append("R_psd")
    return blocks, names


def psi_block(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    gamma: float,
    R,
    Q,
    i: int,
    ell: int,
):
    """The single (3n+1)-dimensional block Psi_i(A^l, B^l) at concrete (R, Q)."""
    blocks, names = _theorem_blocks(
        system, cycle, nominal, lc, cert, gamma, np.asarray(R, float), np.asarray(Q, float)
    )
    name = f"psi[i={i},l={ell}]"
    if name not in names:
        raise InvalidInput(f"no block {name}")
    return blocks[names.index(name)]


def assemble_theorem(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    gamma: float,
) -> LmiProblem:
    """Canonical affine LmiProblem over the free entries of (R, Q)."""
    if not 0.0 < gamma < 1.0:
        raise InvalidInput(f"gamma must lie in (0, 1), got {gamma}")
    n = system.n
    m = n * (n + 1)  # 2 * n(n+1)/2 scalars
    zero = np.zeros((n, n))
    F0, names = _theorem_blocks(system, cycle, nominal, lc, cert, gamma, zero, zero)
    F = []
    for p in range(m):
        y = np.zeros(m)
        y[p] = 1.0
        R, Q = unpack_rq(y, n)
        Bp, _ = _theorem_blocks(system, cycle, nominal, lc, cert, gamma, R, Q)
        F.append(tuple(M - M0 for M, M0 in zip(Bp, F0)))
    return LmiProblem(F0=tuple(F0), F=tuple(F), block_names=tuple(names))


def synthesize_robust_certificate(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    gamma: float,
    options: FeasibilityOptions | None = None,
) -> RobustCertificate:
    """Assemble and solve the certification LMIs, then re-verify the result."""
    prob = assemble_theorem(system, cycle, nominal, lc, cert, gamma)
    n = system.n
    opts = replace(options) if options is not None else FeasibilityOptions()
    if opts.initial_assignment is None:
        opts.initial_assignment = pack_rq(1e-3 * np.eye(n), np.eye(n))
    result = solve_feasibility(prob, opts)
    R, Q = unpack_rq(result.assignment, n)
    report = verify_robust_certificate(
        system, cycle, nominal, lc, cert, R, Q, gamma
    )
    return RobustCertificate(R=R, Q=Q, gamma=gamma, margin=report.min_margin)


def verify_robust_certificate(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    R,
    Q,
    gamma: float,
) -> RobustMarginReport:
    """Direct eigenvalue check of every block at given (R, Q, gamma).

    Pure re-verification: independent of the LMI engine."""
    R = symmetrize(np.asarray(R, dtype=float))
    Q = symmetrize(np.asarray(Q, dtype=float))
    blocks, names = _theorem_blocks(system, cycle, nominal, lc, cert, gamma, R, Q)
    margins = tuple(sym_eigs(M).min_eig for M in blocks)
    return RobustMarginReport(
        block_margins=margins,
        block_names=tuple(names),
        r_margin=sym_eigs(R).min_eig,
        q_margin=sym_eigs(Q).min_eig,
    )


def closed_form_certificate(cert: NominalCertificate, gamma: float, slack: float = 2.0):
    """Closed-form (R, Q) valid in the zero-uncertainty limit for gamma < mu:
    R = 0 and Q > (1 - mu) / (mu - gamma) * P_i for all i."""
    if not gamma < cert.mu:
        raise InvalidInput("closed form requires gamma < mu")
    n = np.asarray(cert.P[0]).shape[0]
    coeff = (1.0 - cert.mu) / (cert.mu - gamma)
    lam = max(sym_eigs(P).eigenvalues[-1] for P in cert.P)
    return np.zeros((n, n)), slack * coeff * lam * np.eye(n)


def gamma_sweep(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    grid,
    options: FeasibilityOptions | None = None,
):
    """solve_feasibility per gamma grid point; returns a list of row dicts."""
    rows = []
    for gamma in grid:
        try:
            rc = synthesize_robust_certificate(
                system, cycle, nominal, lc, cert, float(gamma), options
            )
            rows.append(
                dict(gamma=float(gamma), feasible=True, margin=rc.margin, certificate=rc)
            )
        except Exception as exc:  # Infeasible or InvalidInput per grid point
            best = getattr(exc, "best_margin", None)
            rows.append(
                dict(gamma=float(gamma), feasible=False, margin=best, certificate=None)
            )
    return rows
