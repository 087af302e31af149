"""Uncertain switched affine systems, cycles, and uncertainty sampling.

A system is a family of modes, each a polytope of (A, B) vertex pairs; the
true dynamics at any step are an unknown convex combination of the active
mode's vertices.  A cycle is a periodic mode sequence the controller tries
to track.  Sampling strategies produce deterministic, seed-reproducible
realizations of the per-step convex weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .numerics import as_matrix, as_square, expm_affine

WEIGHT_TOL = 1e-12

STRATEGIES = ("vertex-random", "dirichlet-uniform", "nominal")


@dataclass(frozen=True)
class ModePolytope:
    """One mode's uncertainty polytope: vertices are (A, B) pairs.

    A is n x n, B is n x 1 (stored as a length-n vector).
    """

    vertices: tuple

    def __post_init__(self):
        if len(self.vertices) == 0:
            raise InvalidInput("a mode needs at least one vertex")
        checked = []
        n = None
        for A, B in self.vertices:
            Am = as_square(A, "vertex A")
            Bv = np.asarray(B, dtype=float).ravel()
            if not np.all(np.isfinite(Bv)):
                raise InvalidInput("vertex B contains non-finite entries")
            if n is None:
                n = Am.shape[0]
            if Am.shape != (n, n) or Bv.shape != (n,):
                raise InvalidInput("inconsistent vertex dimensions within mode")
            checked.append((Am, Bv))
        object.__setattr__(self, "vertices", tuple(checked))

    @property
    def n(self) -> int:
        return self.vertices[0][0].shape[0]

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)


def _check_weights(weights, count):
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != (count,):
        raise InvalidInput(f"expected {count} weights, got shape {w.shape}")
    if np.any(w < -WEIGHT_TOL):
        raise InvalidInput("weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InvalidInput(f"weights must sum to 1, got {w.sum()}")
    return np.clip(w, 0.0, None)


def realize(mode: ModePolytope, weights):
    """Convex combination of a mode's vertex pairs."""
    w = _check_weights(weights, mode.num_vertices)
    A = sum(wi * Ai for wi, (Ai, _) in zip(w, mode.vertices))
    B = sum(wi * Bi for wi, (_, Bi) in zip(w, mode.vertices))
    return A, B


@dataclass(frozen=True)
class SwitchedAffineSystem:
    """K >= 2 modes sharing the state dimension n."""

    modes: tuple

    def __post_init__(self):
        modes = tuple(self.modes)
        if len(modes) < 2:
            raise InvalidInput("need at least two modes")
        n = modes[0].n
        if any(m.n != n for m in modes):
            raise InvalidInput("modes disagree on state dimension")
        object.__setattr__(self, "modes", modes)

    @property
    def n(self) -> int:
        return self.modes[0].n

    @property
    def num_modes(self) -> int:
        return len(self.modes)

    def mode(self, j: int) -> ModePolytope:
        """Mode by 1-based index j in 1..K."""
        if not 1 <= j <= self.num_modes:
            raise InvalidInput(f"mode index {j} out of 1..{self.num_modes}")
        return self.modes[j - 1]


@dataclass(frozen=True)
class NominalSelection:
    """Per-mode nominal matrices (Abar_j, Bbar_j) plus the generating weights."""

    weights: tuple
    Abar: tuple
    Bbar: tuple

    @classmethod
    def from_weights(cls, system: SwitchedAffineSystem, weights):
        if len(weights) != system.num_modes:
            raise InvalidInput("one weight vector per mode required")
        ws, As, Bs = [], [], []
        for mode, w in zip(system.modes, weights):
            wv = _check_weights(w, mode.num_vertices)
            A, B = realize(mode, wv)
            ws.append(wv)
            As.append(A)
            Bs.append(B)
        return cls(weights=tuple(ws), Abar=tuple(As), Bbar=tuple(Bs))

    @classmethod
    def midpoint(cls, system: SwitchedAffineSystem):
        """Uniform weights over each mode's vertices."""
        return cls.from_weights(
            system,
            [np.full(m.num_vertices, 1.0 / m.num_vertices) for m in system.modes],
        )

    def matrices(self, j: int):
        """Nominal (Abar, Bbar) of mode j (1-based)."""
        return self.Abar[j - 1], self.Bbar[j - 1]

    @property
    def num_modes(self) -> int:
        return len(self.Abar)


@dataclass(frozen=True)
class Cycle:
    """Periodic mode sequence nu with minimal period N_nu (1-based entries)."""

    nu: tuple
    num_modes: int

    def __post_init__(self):
        nu = tuple(int(v) for v in self.nu)
        if len(nu) == 0:
            raise InvalidInput("cycle must be non-empty")
        if any(not 1 <= v <= self.num_modes for v in nu):
            raise InvalidInput(f"cycle entries must lie in 1..{self.num_modes}")
        N = len(nu)
        for d in range(1, N):
            if N % d == 0 and nu == nu[d:] + nu[:d]:
                raise InvalidInput(
                    f"cycle {nu} is reducible to period {d}; pass the minimal period"
                )
        object.__setattr__(self, "nu", nu)

    @property
    def period(self) -> int:
        return len(self.nu)

    def index(self, i: int) -> int:
        """Wrap a 1-based position i onto 1..N_nu."""
        return mod_index(i, self)

    def mode_at(self, i: int) -> int:
        """Mode nu(i) (1-based) at cycle position i >= 1."""
        return self.nu[self.index(i) - 1]


def mod_index(i: int, cycle: Cycle) -> int:
    """((i - 1) mod N_nu) + 1 for i >= 1."""
    if i < 1:
        raise InvalidInput(f"position must be >= 1, got {i}")
    return (i - 1) % cycle.period + 1


@dataclass(frozen=True)
class UncertaintyRealization:
    """Per-step, per-mode convex weights over each mode's vertices."""

    weights: tuple  # weights[k][j-1] is the weight vector of mode j at step k
    seed: int
    strategy: str

    @property
    def horizon(self) -> int:
        return len(self.weights)

    def step_weights(self, k: int, j: int):
        """Weights of mode j (1-based) at step k (0-based)."""
        return self.weights[k][j - 1]


def sample_uncertainty(
    system: SwitchedAffineSystem,
    horizon: int,
    seed: int,
    strategy: str,
    nominal: NominalSelection | None = None,
) -> UncertaintyRealization:
    """Draw a deterministic uncertainty realization over ``horizon`` steps.

    Strategies: ``vertex-random`` picks one vertex per mode per step,
    ``dirichlet-uniform`` draws uniform weights over the simplex, and
    ``nominal`` replays the weights of ``nominal`` at every step.
    """
    if horizon < 1:
        raise InvalidInput(f"horizon must be >= 1, got {horizon}")
    if strategy not in STRATEGIES:
        raise InvalidInput(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if strategy == "nominal" and nominal is None:
        raise InvalidInput("strategy 'nominal' requires a NominalSelection")
    rng = np.random.default_rng(seed)
    steps = []
    for _ in range(horizon):
        per_mode = []
        for j, mode in enumerate(system.modes):
            nv = mode.num_vertices
            if strategy == "vertex-random":
                w = np.zeros(nv)
                w[rng.integers(nv)] = 1.0
            elif strategy == "dirichlet-uniform":
                w = rng.dirichlet(np.ones(nv))
            else:
                w = np.array(nominal.weights[j], dtype=float)
            per_mode.append(w)
        steps.append(tuple(per_mode))
    return UncertaintyRealization(weights=tuple(steps), seed=seed, strategy=strategy)


# Benchmark system: two unstable continuous-time modes discretized over a
# period T, with interval uncertainty entering one A entry and one B entry
# per mode.  Vertices sit at the interval endpoints.
BENCHMARK_F1 = np.array([[-3.0, -6.0, 3.0], [2.0, 2.0, -3.0], [1.6, 0.0, -2.0]])
BENCHMARK_F2 = np.array([[1.0, 3.0, 3.0], [-0.2, -3.0, -3.0], [0.0, 0.0, -2.0]])
BENCHMARK_G1 = np.array([0.5, 0.0, 0.0])
BENCHMARK_G2 = np.array([0.0, 0.0, 0.5])
BENCHMARK_DELTA1_BOUND = 0.007
BENCHMARK_DELTA2_BOUND = 0.015


def build_example_system(T: float, delta1_bound: float, delta2_bound: float):
    """Discretize the two-mode benchmark and return (system, nominal).

    Mode 1: A1(d1) = exp(F1 T) + d1 * E12, B1(d1) = int exp(F1 s) g1 ds + [0,4d1,0].
    Mode 2: A2(d2) = exp(F2 T) + d2 * E21, B2(d2) = int exp(F2 s) g2 ds + [1.4d2,0,0].
    Each mode gets its two interval-endpoint vertices; the nominal selection
    is the midpoint (d = 0).
    """
    if delta1_bound < 0 or delta2_bound < 0:
        raise InvalidInput("uncertainty bounds must be non-negative")
    A1, B1 = expm_affine(BENCHMARK_F1, BENCHMARK_G1.reshape(3, 1), T)
    A2, B2 = expm_affine(BENCHMARK_F2, BENCHMARK_G2.reshape(3, 1), T)
    B1 = B1.ravel()
    B2 = B2.ravel()
    dA1 = np.zeros((3, 3))
    dA1[0, 1] = 1.0
    dB1 = np.array([0.0, 4.0, 0.0])
    dA2 = np.zeros((3, 3))
    dA2[1, 0] = 1.0
    dB2 = np.array([1.4, 0.0, 0.0])
    mode1 = ModePolytope(
        vertices=(
            (A1 - delta1_bound * dA1, B1 - delta1_bound * dB1),
            (A1 + delta1_bound * dA1, B1 + delta1_bound * dB1),
        )
    )
    mode2 = ModePolytope(
        vertices=(
            (A2 - delta2_bound * dA2, B2 - delta2_bound * dB2),
            (A2 + delta2_bound * dA2, B2 + delta2_bound * dB2),
        )
    )
    system = SwitchedAffineSystem(modes=(mode1, mode2))
    nominal = NominalSelection.midpoint(system)
    return system, nominal
