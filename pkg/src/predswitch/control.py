"""Predictive min-switching closed loop under sampled uncertainty.

The complete closed-loop state is xi = (x, z, theta, vartheta): the plant
state, its one-step memory z = x_{k-1}, the cycle index theta whose mode is
being applied (chosen one step earlier), and its memory vartheta.  The
controller predicts chi_1 = Abar x + Bbar with nominal matrices and picks
the cycle index minimizing the P_i-weighted distance of chi_1 to the limit
cycle.  The Lyapunov function

    V(xi) = |z1 - rho_theta|^2_{P_theta - 2R} + |chi0 - z1|^2_Q
            + |chi0 - rho_theta|^2_R

(with z1 the previous step's prediction) certifies an invariant attractor
V <= 1 under every polytopic uncertainty realization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import Diverged, InvalidCertificatePair, InvalidInput
from .model import (
    Cycle,
    NominalSelection,
    SwitchedAffineSystem,
    UncertaintyRealization,
    realize,
    sample_uncertainty,
)
from .nominal import LimitCycle, NominalCertificate
from .numerics import sym_eig_pairs, sym_eigs, weighted_norm_sq
from .robust import RobustCertificate


@dataclass(frozen=True)
class ClosedLoopState:
    x: np.ndarray
    z: np.ndarray
    theta: int  # cycle index in 1..N of the mode currently being applied
    vartheta: int  # previous theta

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).ravel())


@dataclass(frozen=True)
class PredictionPair:
    chi0: np.ndarray
    chi1: np.ndarray
    zfrak0: np.ndarray
    zfrak1: np.ndarray


def predict(
    state: ClosedLoopState, nominal: NominalSelection, cycle: Cycle
) -> PredictionPair:
    """One-step nominal predictions from x (chi) and from the memory z."""
    A_th, B_th = nominal.matrices(cycle.mode_at(state.theta))
    A_vt, B_vt = nominal.matrices(cycle.mode_at(state.vartheta))
    chi0 = state.x
    zfrak0 = state.z
    return PredictionPair(
        chi0=chi0,
        chi1=A_th @ chi0 + B_th,
        zfrak0=zfrak0,
        zfrak1=A_vt @ zfrak0 + B_vt,
    )


def _weighted_distances(point, lc: LimitCycle, cert: NominalCertificate):
    return np.array(
        [weighted_norm_sq(point - r, P) for r, P in zip(lc.rho, cert.P)]
    )


def control_law(chi1, lc: LimitCycle, cert: NominalCertificate) -> int:
    """Min-switching law: the 1-based cycle index minimizing
    (chi1 - rho_i)^T P_i (chi1 - rho_i), ties to the smallest index."""
    d = _weighted_distances(np.asarray(chi1, dtype=float).ravel(), lc, cert)
    return int(np.argmin(d)) + 1


def step(
    state: ClosedLoopState,
    system: SwitchedAffineSystem,
    step_weights,
    nominal: NominalSelection,
    cycle: Cycle,
    lc: LimitCycle,
    cert: NominalCertificate,
) -> ClosedLoopState:
    """One closed-loop step: apply the realized dynamics of mode nu(theta),
    then update the control and memory variables."""
    mode_j = cycle.mode_at(state.theta)
    A, B = realize(system.mode(mode_j), step_weights)
    x_next = A @ state.x + B
    pred = predict(state, nominal, cycle)
    u = control_law(pred.chi1, lc, cert)
    return ClosedLoopState(x=x_next, z=state.x, theta=u, vartheta=state.theta)


def lyapunov(
    state: ClosedLoopState,
    nominal: NominalSelection,
    cycle: Cycle,
    lc: LimitCycle,
    cert: NominalCertificate,
    robust: RobustCertificate,
) -> float:
    pred = predict(state, nominal, cycle)
    rho_th = lc.rho[state.theta - 1]
    P_th = cert.P[state.theta - 1]
    R, Q = robust.R, robust.Q
    return (
        weighted_norm_sq(pred.zfrak1 - rho_th, P_th - 2.0 * R)
        + weighted_norm_sq(pred.chi0 - pred.zfrak1, Q)
        + weighted_norm_sq(pred.chi0 - rho_th, R)
    )


@dataclass
class Trace:
    """Time history of a closed-loop run.

    States are recorded at k = 0..horizon; controls, active modes, and
    realized vertex weights at k = 0..horizon-1.
    """

    x: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    vartheta: np.ndarray
    u: np.ndarray
    chi1: np.ndarray
    zfrak1: np.ndarray
    V: np.ndarray
    argmin_ok: np.ndarray
    in_attractor: np.ndarray
    active_mode: np.ndarray
    active_weights: np.ndarray  # weights of the active mode, NaN padded
    seed: int
    strategy: str
    sigma0: int

    @property
    def horizon(self) -> int:
        return self.u.shape[0]


def initial_state(cycle: Cycle, x0, sigma0: int) -> ClosedLoopState:
    """Memory initialization: z0 = x0 and vartheta0 = theta0, with theta0 the
    smallest cycle index whose mode matches sigma0."""
    matches = [i for i in range(1, cycle.period + 1) if cycle.mode_at(i) == sigma0]
    if not matches:
        raise InvalidInput(f"initial mode {sigma0} does not appear in the cycle")
    theta0 = matches[0]
    x0 = np.asarray(x0, dtype=float).ravel()
    return ClosedLoopState(x=x0, z=x0.copy(), theta=theta0, vartheta=theta0)


def simulate(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    robust: RobustCertificate,
    x0,
    horizon: int,
    seed: int,
    strategy: str,
    sigma0: int | None = None,
    realization: UncertaintyRealization | None = None,
) -> Trace:
    """Run the closed loop for ``horizon`` steps under a sampled uncertainty
    realization.  Deterministic given (seed, strategy)."""
    if horizon < 1:
        raise InvalidInput(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng(seed)
    if sigma0 is None:
        sigma0 = int(rng.integers(1, system.num_modes + 1))
        if not any(m == sigma0 for m in cycle.nu):
            sigma0 = cycle.nu[0]
    if realization is None:
        realization = sample_uncertainty(
            system, horizon, seed=seed, strategy=strategy, nominal=nominal
        )
    if realization.horizon < horizon:
        raise InvalidInput("realization shorter than the requested horizon")

    n = system.n
    N = cycle.period
    H = horizon
    state = initial_state(cycle, x0, sigma0)

    rho = np.stack(lc.rho)
    P = [np.asarray(Pi, dtype=float) for Pi in cert.P]
    Abar = [nominal.matrices(cycle.mode_at(i))[0] for i in range(1, N + 1)]
    Bbar = [nominal.matrices(cycle.mode_at(i))[1] for i in range(1, N + 1)]
    R, Q = robust.R, robust.Q
    PmR = [Pi - 2.0 * R for Pi in P]

    max_nv = max(m.num_vertices for m in system.modes)
    xs = np.empty((H + 1, n))
    zs = np.empty((H + 1, n))
    thetas = np.empty(H + 1, dtype=int)
    varthetas = np.empty(H + 1, dtype=int)
    us = np.empty(H, dtype=int)
    chi1s = np.empty((H + 1, n))
    zfrak1s = np.empty((H + 1, n))
    Vs = np.empty(H + 1)
    argmin_ok = np.empty(H + 1, dtype=bool)
    active_mode = np.empty(H, dtype=int)
    active_weights = np.full((H, max_nv), np.nan)

    x, z, th, vt = state.x, state.z, state.theta, state.vartheta
    # overflow on a diverging run is reported via Diverged, not warnings
    old_err = np.seterr(over="ignore", invalid="ignore")
    for k in range(H + 1):
        chi1 = Abar[th - 1] @ x + Bbar[th - 1]
        zfrak1 = Abar[vt - 1] @ z + Bbar[vt - 1]
        dz = zfrak1 - rho
        dists = np.array([dz[i] @ P[i] @ dz[i] for i in range(N)])
        ok = bool(dists[th - 1] <= dists.min())
        dzt = zfrak1 - rho[th - 1]
        ex = x - zfrak1
        er = x - rho[th - 1]
        V = float(dzt @ PmR[th - 1] @ dzt + ex @ Q @ ex + er @ R @ er)
        xs[k], zs[k], thetas[k], varthetas[k] = x, z, th, vt
        chi1s[k], zfrak1s[k], Vs[k], argmin_ok[k] = chi1, zfrak1, V, ok
        if k == H:
            break
        dc = chi1 - rho
        u = int(np.argmin([dc[i] @ P[i] @ dc[i] for i in range(N)])) + 1
        mode_j = cycle.mode_at(th)
        w = realization.step_weights(k, mode_j)
        mode = system.mode(mode_j)
        A = sum(wi * Ai for wi, (Ai, _) in zip(w, mode.vertices))
        B = sum(wi * Bi for wi, (_, Bi) in zip(w, mode.vertices))
        x_next = A @ x + B
        if not np.all(np.isfinite(x_next)):
            np.seterr(**old_err)
            raise Diverged(f"state became non-finite at step {k + 1}", step=k + 1)
        us[k] = u
        active_mode[k] = mode_j
        active_weights[k, : w.shape[0]] = w
        x, z, th, vt = x_next, x, u, th

    np.seterr(**old_err)
    return Trace(
        x=xs,
        z=zs,
        theta=thetas,
        vartheta=varthetas,
        u=us,
        chi1=chi1s,
        zfrak1=zfrak1s,
        V=Vs,
        argmin_ok=argmin_ok,
        in_attractor=(Vs <= 1.0) & argmin_ok,
        active_mode=active_mode,
        active_weights=active_weights,
        seed=seed,
        strategy=strategy,
        sigma0=sigma0,
    )


@dataclass(frozen=True)
class AttractorEllipsoid:
    """Sublevel-one ellipsoid (x - center)^T shape (x - center) <= 1."""

    center: np.ndarray
    shape: np.ndarray

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts - self.center
        return np.einsum("ki,ij,kj->k", d, self.shape, d) <= 1.0

    def boundary_points(self, count: int = 256, seed: int = 0) -> np.ndarray:
        """Point cloud on the ellipsoid boundary (for plotting/export)."""
        n = self.center.shape[0]
        w, Vv = sym_eig_pairs(self.shape)
        half_inv = Vv @ np.diag(1.0 / np.sqrt(w)) @ Vv.T
        if n == 1:
            sphere = np.array([[1.0], [-1.0]])
        elif n == 2:
            t = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
            sphere = np.stack([np.cos(t), np.sin(t)], axis=1)
        else:
            rng = np.random.default_rng(seed)
            g = rng.normal(size=(count, n))
            sphere = g / np.linalg.norm(g, axis=1, keepdims=True)
        return self.center + sphere @ half_inv


def ellipsoids_disjoint(
    e1: AttractorEllipsoid, e2: AttractorEllipsoid, tol: float = 1e-9
) -> bool:
    """Exact convex test: the ellipsoids are disjoint iff
    max_{t in (0,1)} [t f1 + (1-t) f2](x(t)) > 1, where x(t) minimizes the
    convex combination of the two quadratics."""
    M1, c1 = e1.shape, e1.center
    M2, c2 = e2.shape, e2.center

    def neg_h(t):
        Mt = t * M1 + (1.0 - t) * M2
        xt = np.linalg.solve(Mt, t * M1 @ c1 + (1.0 - t) * M2 @ c2)
        f1 = weighted_norm_sq(xt - c1, M1)
        f2 = weighted_norm_sq(xt - c2, M2)
        return -(t * f1 + (1.0 - t) * f2)

    res = minimize_scalar(neg_h, bounds=(1e-12, 1.0 - 1e-12), method="bounded")
    return bool(-res.fun > 1.0 + tol)


def attractor_projection(
    lc: LimitCycle, cert: NominalCertificate, robust: RobustCertificate
):
    """Per-index ellipsoids E(P_i - R, rho_i) estimating the robust limit
    cycle, plus the pairwise disjointness table."""
    ellipsoids = []
    for rho_i, P_i in zip(lc.rho, cert.P):
        M = np.asarray(P_i, dtype=float) - robust.R
        if sym_eigs(M).min_eig <= 0:
            raise InvalidCertificatePair("P_i - R is not positive definite")
        ellipsoids.append(AttractorEllipsoid(center=np.asarray(rho_i, float), shape=M))
    N = len(ellipsoids)
    disjoint = {}
    for i in range(N):
        for j in range(i + 1, N):
            disjoint[(i + 1, j + 1)] = ellipsoids_disjoint(
                ellipsoids[i], ellipsoids[j]
            )
    return ellipsoids, disjoint


@dataclass(frozen=True)
class InvarianceReport:
    samples_requested: int
    samples_accepted: int
    max_v_next: float | None
    passed: bool
    worst_case: dict | None = None


def check_robust_invariance_mc(
    system: SwitchedAffineSystem,
    cycle: Cycle,
    nominal: NominalSelection,
    lc: LimitCycle,
    cert: NominalCertificate,
    robust: RobustCertificate,
    samples: int,
    seed: int,
    tol: float = 1e-9,
) -> InvarianceReport:
    """Monte-Carlo invariance check in the full xi-space.

    Draws states with V(xi) <= 1 satisfying the theta-argmin condition,
    applies one closed-loop step per vertex of the active mode, and reports
    the largest V(xi+) seen.  Pass iff that maximum stays <= 1 + tol.
    """
    if samples < 1:
        warnings.warn("samples < 1: invariance check is vacuous")
        return InvarianceReport(samples, 0, None, True)
    n = system.n
    N = cycle.period
    rng = np.random.default_rng(seed)
    R, Q = robust.R, robust.Q
    # V as a quadratic in (chi0 - rho_theta, zfrak1 - rho_theta) is exactly
    # the per-index coupling block; sample uniformly inside its unit ball.
    couplings = []
    for Pi in cert.P:
        C = np.block(
            [[R + Q, -Q], [-Q, np.asarray(Pi, float) + Q - 2.0 * R]]
        )
        w, Vv = sym_eig_pairs(C)
        if w[0] <= 0:
            raise InvalidCertificatePair("coupling block not positive definite")
        couplings.append(Vv @ np.diag(1.0 / np.sqrt(w)) @ Vv.T)
    max_v_next = -np.inf
    worst = None
    accepted = 0
    attempts = 0
    while accepted < samples and attempts < 100 * samples:
        attempts += 1
        th = int(rng.integers(1, N + 1))
        vt = int(rng.integers(1, N + 1))
        g = rng.normal(size=2 * n)
        ball = g / np.linalg.norm(g) * rng.uniform() ** (1.0 / (2 * n))
        v = couplings[th - 1] @ ball
        rho_th = lc.rho[th - 1]
        chi0 = rho_th + v[:n]
        zfrak1 = rho_th + v[n:]
        A_vt, B_vt = nominal.matrices(cycle.mode_at(vt))
        try:
            z = np.linalg.solve(A_vt, zfrak1 - B_vt)
        except np.linalg.LinAlgError:
            raise InvalidInput(
                "nominal A matrix singular; cannot invert the memory prediction"
            )
        state = ClosedLoopState(x=chi0, z=z, theta=th, vartheta=vt)
        d = _weighted_distances(zfrak1, lc, cert)
        if d[th - 1] > d.min() * (1.0 + 1e-12):
            continue
        accepted += 1
        mode = system.mode(cycle.mode_at(th))
        for ell in range(mode.num_vertices):
            w_vertex = np.zeros(mode.num_vertices)
            w_vertex[ell] = 1.0
            nxt = step(state, system, w_vertex, nominal, cycle, lc, cert)
            v_next = lyapunov(nxt, nominal, cycle, lc, cert, robust)
            if v_next > max_v_next:
                max_v_next = v_next
                worst = dict(theta=th, vartheta=vt, vertex=ell + 1, v_next=v_next)
    if accepted == 0:
        warnings.warn("no sample satisfied the theta-argmin condition")
        return InvarianceReport(samples, 0, None, True)
    return InvarianceReport(
        samples_requested=samples,
        samples_accepted=accepted,
        max_v_next=float(max_v_next),
        passed=bool(max_v_next <= 1.0 + tol),
        worst_case=worst,
    )
