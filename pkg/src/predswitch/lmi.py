"""Small dense LMI feasibility engine.

Problems are stored in the canonical affine form: each block b evaluates to

    block_b(y) = F0[b] + sum_p y_p * F[p][b]

and feasibility means every block is positive definite.  The engine
maximizes the worst min-eigenvalue over all blocks.  The nonsmooth
objective is handled by exponential (soft-min) smoothing with a shrinking
temperature; gradients are eigenvector outer products, and the smooth
stages are driven by L-BFGS.  Verdicts are never trusted from the
optimizer state: the returned assignment is re-scored by direct
eigenvalue checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import Infeasible, InvalidInput
from .numerics import as_symmetric

FEAS_TOL = 1e-7

# Temperature continuation schedule for the soft-min smoothing.
DEFAULT_TAU_SCHEDULE = (1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)


@dataclass(frozen=True)
class LmiProblem:
    """Affine-in-y positive-definiteness constraints on a list of blocks."""

    F0: tuple  # constant part per block
    F: tuple  # F[p][b]: coefficient of variable p in block b
    block_names: tuple = ()

    def __post_init__(self):
        F0 = tuple(as_symmetric(M, "F0 block") for M in self.F0)
        F = tuple(
            tuple(as_symmetric(M, "coefficient block") for M in per_var)
            for per_var in self.F
        )
        for per_var in F:
            if len(per_var) != len(F0):
                raise InvalidInput("every variable needs one coefficient per block")
            for M0, Mp in zip(F0, per_var):
                if M0.shape != Mp.shape:
                    raise InvalidInput("coefficient block shape mismatch")
        names = self.block_names or tuple(f"block{b}" for b in range(len(F0)))
        if len(names) != len(F0):
            raise InvalidInput("one name per block required")
        object.__setattr__(self, "F0", F0)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "block_names", tuple(names))

    @property
    def num_variables(self) -> int:
        return len(self.F)

    @property
    def num_blocks(self) -> int:
        return len(self.F0)

    @property
    def block_sizes(self) -> tuple:
        return tuple(M.shape[0] for M in self.F0)

    def eval_blocks(self, y):
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != (self.num_variables,):
            raise InvalidInput(
                f"expected {self.num_variables} variables, got {y.shape}"
            )
        blocks = []
        for b in range(self.num_blocks):
            M = self.F0[b].copy()
            for p in range(self.num_variables):
                M += y[p] * self.F[p][b]
            blocks.append(M)
        return blocks

    def min_eigenvalue(self, y) -> float:
        """Worst min-eigenvalue over all blocks; the feasibility margin."""
        return min(float(np.linalg.eigvalsh(M)[0]) for M in self.eval_blocks(y))

    def block_margins(self, y) -> tuple:
        return tuple(float(np.linalg.eigvalsh(M)[0]) for M in self.eval_blocks(y))


@dataclass(frozen=True)
class FeasibilityResult:
    assignment: np.ndarray
    margin: float  # independently re-verified min eigenvalue over all blocks
    feasible: bool
    block_margins: tuple
    iterations: int


@dataclass
class FeasibilityOptions:
    feas_tol: float = FEAS_TOL
    tau_schedule: tuple = DEFAULT_TAU_SCHEDULE
    max_stage_iterations: int = 2000
    initial_assignment: np.ndarray | None = None


def _soft_min_neg(y, prob: LmiProblem, tau: float):
    """Negated smoothed min-eigenvalue and its gradient.

    Soft-min over the pooled eigenvalues of all blocks:
        f_tau(y) = -tau * log sum_j exp(-lambda_j(y) / tau)
    with d lambda / d y_p = v^T F[p][b] v at the eigenvector v.
    """
    lams = []
    grads = []
    blocks = prob.eval_blocks(y)
    m = prob.num_variables
    for b, M in enumerate(blocks):
        w, V = np.linalg.eigh(M)
        for j in range(w.shape[0]):
            v = V[:, j]
            lams.append(w[j])
            grads.append([v @ prob.F[p][b] @ v for p in range(m)])
    lams = np.asarray(lams)
    grads = np.asarray(grads)
    shifted = -(lams - lams.min()) / tau
    weights = np.exp(shifted)
    weights /= weights.sum()
    f = lams.min() - tau * np.log(np.sum(np.exp(shifted)))
    g = weights @ grads
    return -f, -g


def solve_feasibility(
    prob: LmiProblem, options: FeasibilityOptions | None = None
) -> FeasibilityResult:
    """Maximize the worst block min-eigenvalue; feasible iff it exceeds feas_tol.

    Raises Infeasible (carrying the best margin and assignment found) when
    the continuation stalls below the tolerance.
    """
    opts = options or FeasibilityOptions()
    m = prob.num_variables
    if opts.initial_assignment is not None:
        y = np.asarray(opts.initial_assignment, dtype=float).ravel().copy()
        if y.shape != (m,):
            raise InvalidInput("initial assignment has wrong length")
    else:
        y = np.zeros(m)
    best_y = y.copy()
    best_margin = prob.min_eigenvalue(y)
    total_iter = 0
    for tau in opts.tau_schedule:
        res = minimize(
            _soft_min_neg,
            y,
            args=(prob, tau),
            jac=True,
            method="L-BFGS-B",
            options=dict(maxiter=opts.max_stage_iterations, ftol=1e-16, gtol=1e-12),
        )
        y = res.x
        total_iter += res.nit
        margin = prob.min_eigenvalue(y)
        if margin > best_margin:
            best_margin = margin
            best_y = y.copy()
    # independent re-verification of the best point
    block_margins = prob.block_margins(best_y)
    margin = min(block_margins)
    feasible = margin > opts.feas_tol
    if not feasible:
        raise Infeasible(
            f"no strictly feasible point found (best margin {margin:.3g})",
            best_margin=margin,
            assignment=best_y,
        )
    return FeasibilityResult(
        assignment=best_y,
        margin=margin,
        feasible=True,
        block_margins=block_margins,
        iterations=total_iter,
    )
