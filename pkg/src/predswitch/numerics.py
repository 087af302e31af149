"""Dense small-matrix kernels used throughout the package.

Everything here operates on plain numpy arrays at desk scale (n <= ~10):
symmetric eigendecompositions, definiteness tests, spectral radii, the
matrix exponential with its affine-input integral, and the discrete
Lyapunov equation.  All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NotSchurStable

# Default tolerances.  These sit roughly three orders of magnitude below the
# certificate margins seen in practice; callers may override per call.
TOL_EIG = 1e-10
TOL_SYM = 1e-8
TOL_LYAP_RESIDUAL = 1e-9


def as_matrix(M, name="matrix"):
    """Coerce to a 2-D float array and reject non-finite entries."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return A


def as_square(M, name="matrix"):
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {A.shape}")
    return A


def as_symmetric(M, name="matrix", tol=TOL_SYM):
    """Coerce to a symmetric matrix, averaging away round-off asymmetry."""
    A = as_square(M, name)
    scale = max(1.0, np.abs(A).max())
    if np.abs(A - A.T).max() > tol * scale:
        raise InvalidInput(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


def symmetrize(M):
    """0.5 * (M + M^T), no symmetry check."""
    A = as_square(M)
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class EigenReport:
    """Eigenvalues sorted ascending plus the smallest one."""

    eigenvalues: np.ndarray
    min_eig: float


def sym_eigs(M) -> EigenReport:
    """Full symmetric eigendecomposition, eigenvalues ascending."""
    A = as_symmetric(M)
    w = np.linalg.eigvalsh(A)
    return EigenReport(eigenvalues=w, min_eig=float(w[0]))


def sym_eig_pairs(M):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric M."""
    A = as_symmetric(M)
    return np.linalg.eigh(A)


def min_eig(M) -> float:
    return sym_eigs(M).min_eig


def is_positive_definite(M, margin: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of symmetric M exceeds ``margin``."""
    return sym_eigs(M).min_eig > margin


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus of a general square matrix."""
    A = as_square(M)
    if A.size == 0:
        raise InvalidInput("empty matrix")
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def expm_affine(F, g, T: float):
    """Discretize x' = F x + g over a step of length T.

    Returns (Ad, Bd) with Ad = exp(F T) and Bd = integral_0^T exp(F s) g ds,
    both obtained from one exponential of the augmented matrix
    [[F, g], [0, 0]] (scaling-and-squaring with Pade approximant).
    """
    A = as_square(F, "F")
    n = A.shape[0]
    gv = as_matrix(np.reshape(np.asarray(g, dtype=float), (n, -1)), "g")
    if gv.shape != (n, 1):
        raise InvalidInput(f"g must be {n}x1, got shape {np.asarray(g).shape}")
    if not np.isfinite(T) or T <= 0:
        raise InvalidInput(f"T must be positive, got {T}")
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A * T
    aug[:n, n:] = gv * T
    E = scipy.linalg.expm(aug)
    return E[:n, :n].copy(), E[:n, n:].copy()


def solve_discrete_lyapunov(A, W):
    """Solve A^T X A - X = -W for X > 0, requiring A Schur stable and W > 0.

    Small problems only: the vectorized (Kronecker) linear system is solved
    directly.
    """
    Am = as_square(A, "A")
    Wm = as_symmetric(W, "W")
    if Am.shape != Wm.shape:
        raise InvalidInput("A and W must have matching dimensions")
    rho = spectral_radius(Am)
    if rho >= 1.0:
        raise NotSchurStable(f"spectral radius {rho:.6g} >= 1")
    if not is_positive_definite(Wm):
        raise InvalidInput("W must be positive definite")
    # scipy solves A X A^T - X = -W; pass A^T for the A^T X A - X form.
    X = scipy.linalg.solve_discrete_lyapunov(Am.T, Wm)
    return symmetrize(X)


def lyapunov_residual(A, W, X) -> float:
    """Norm of A^T X A - X + W, for checking solve_discrete_lyapunov output."""
    Am = as_square(A)
    return float(np.linalg.norm(Am.T @ X @ Am - X + W, 2))


def weighted_norm_sq(v, M) -> float:
    """v^T M v for a vector v and symmetric weight M."""
    v = np.asarray(v, dtype=float).ravel()
    return float(v @ M @ v)
