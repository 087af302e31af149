"""File formats: system descriptions, certificates, traces, LMI export.

All JSON numbers are emitted through Python's shortest-round-trip float
repr, which preserves up to 17 significant digits, so verify-after-write
is bit-stable.  Every artifact carries the config hash of the run that
produced it.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .lmi import LmiProblem
from .model import (
    Cycle,
    ModePolytope,
    NominalSelection,
    SwitchedAffineSystem,
)
from .nominal import LimitCycle, NominalCertificate
from .numerics import expm_affine
from .robust import RobustCertificate


def _mat(x):
    return np.asarray(x, dtype=float).tolist()


def config_hash(obj) -> str:
    """Stable sha256 of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_json(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc


# -- system description -----------------------------------------------------

def system_to_dict(system: SwitchedAffineSystem, nominal: NominalSelection | None = None,
                   cycle: Cycle | None = None) -> dict:
    doc = {
        "n": system.n,
        "modes": [
            {
                "vertices": [
                    {"A": _mat(A), "B": _mat(B)} for A, B in mode.vertices
                ]
            }
            for mode in system.modes
        ],
    }
    if nominal is not None:
        doc["nominal_weights"] = [_mat(w) for w in nominal.weights]
    if cycle is not None:
        doc["cycle"] = list(cycle.nu)
    return doc


def system_from_dict(doc: dict):
    """Parse a system description; returns (system, nominal, cycle).

    nominal defaults to midpoint weights; cycle may be None.  A
    ``continuous`` section triggers discretization of per-mode (F, g) pairs
    over period T, with optional interval uncertainty per mode.
    """
    if "continuous" in doc and "modes" not in doc:
        doc = {**doc, "modes": discretize_continuous(doc["continuous"])["modes"]}
    try:
        modes = tuple(
            ModePolytope(
                vertices=tuple(
                    (np.asarray(v["A"], float), np.asarray(v["B"], float).ravel())
                    for v in m["vertices"]
                )
            )
            for m in doc["modes"]
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed system description: {exc}") from exc
    system = SwitchedAffineSystem(modes=modes)
    if doc.get("n") is not None and int(doc["n"]) != system.n:
        raise ConfigError(
            f"declared n={doc['n']} does not match vertex dimension {system.n}"
        )
    if "nominal_weights" in doc:
        nominal = NominalSelection.from_weights(system, doc["nominal_weights"])
    else:
        nominal = NominalSelection.midpoint(system)
    cycle = None
    if "cycle" in doc:
        cycle = Cycle(nu=tuple(doc["cycle"]), num_modes=system.num_modes)
    return system, nominal, cycle


def discretize_continuous(cont: dict) -> dict:
    """Discretize continuous per-mode (F, g) dynamics into vertex form.

    Expected layout::

        {"T": 1.0,
         "modes": [{"F": [[...]], "g": [...],
                    "uncertainty": {"A_direction": [[...]],
                                    "B_direction": [...],
                                    "bound": 0.007}}, ...]}

    Each mode gets the two interval-endpoint vertices (one duplicate pair
    when the bound is zero or the uncertainty section is absent).
    """
    if "T" not in cont:
        raise ConfigError("continuous section requires the sampling period T")
    T = float(cont["T"])
    if T <= 0:
        raise ConfigError(f"sampling period must be positive, got {T}")
    modes = []
    for m in cont.get("modes", []):
        F = np.asarray(m["F"], dtype=float)
        g = np.asarray(m["g"], dtype=float).reshape(-1, 1)
        Ad, Bd = expm_affine(F, g, T)
        Bd = Bd.ravel()
        unc = m.get("uncertainty")
        if unc is None:
            dA = np.zeros_like(Ad)
            dB = np.zeros_like(Bd)
            bound = 0.0
        else:
            dA = np.asarray(unc.get("A_direction", np.zeros_like(Ad)), float)
            dB = np.asarray(unc.get("B_direction", np.zeros_like(Bd)), float).ravel()
            bound = float(unc.get("bound", 0.0))
        modes.append(
            {
                "vertices": [
                    {"A": _mat(Ad - bound * dA), "B": _mat(Bd - bound * dB)},
                    {"A": _mat(Ad + bound * dA), "B": _mat(Bd + bound * dB)},
                ]
            }
        )
    return {"n": int(np.asarray(cont["modes"][0]["F"]).shape[0]), "modes": modes}


# -- certificates ------------------------------------------------------------

def nominal_certificate_to_dict(lc: LimitCycle, cert: NominalCertificate) -> dict:
    return {
        "rho": [_mat(r) for r in lc.rho],
        "P": [_mat(P) for P in cert.P],
        "mu": cert.mu,
    }


def nominal_certificate_from_dict(doc: dict):
    try:
        lc = LimitCycle(rho=tuple(np.asarray(r, float).ravel() for r in doc["rho"]))
        # externally supplied certificates may carry rounding asymmetry; average it out
        P = tuple(
            0.5 * (np.asarray(P, float) + np.asarray(P, float).T) for P in doc["P"]
        )
        cert = NominalCertificate(P=P, mu=float(doc["mu"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed nominal certificate: {exc}") from exc
    return lc, cert


def robust_certificate_to_dict(cert: RobustCertificate) -> dict:
    return {
        "R": _mat(cert.R),
        "Q": _mat(cert.Q),
        "gamma": cert.gamma,
        "margin": cert.margin,
    }


def robust_certificate_from_dict(doc: dict) -> RobustCertificate:
    try:
        R = np.asarray(doc["R"], float)
        Q = np.asarray(doc["Q"], float)
        return RobustCertificate(
            R=0.5 * (R + R.T),
            Q=0.5 * (Q + Q.T),
            gamma=float(doc["gamma"]),
            margin=float(doc.get("margin", np.nan)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed robust certificate: {exc}") from exc


# -- LMI export --------------------------------------------------------------

def lmi_problem_to_dict(prob: LmiProblem) -> dict:
    """Documented block format for external cross-checking:
    block_b(y) = F0[b] + sum_p y[p] * F[p][b], all blocks required PD."""
    return {
        "num_variables": prob.num_variables,
        "block_names": list(prob.block_names),
        "block_sizes": list(prob.block_sizes),
        "F0": [_mat(M) for M in prob.F0],
        "F": [[_mat(M) for M in per_var] for per_var in prob.F],
    }


# -- traces ------------------------------------------------------------------

def write_trace_csv(path, trace, n: int):
    """Delimited trace: one row per step k = 0..horizon.

    Control, active mode, and realized weights are empty on the final row
    (no step is taken from the terminal state).
    """
    max_nv = trace.active_weights.shape[1]
    header = (
        ["k"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"z{i + 1}" for i in range(n)]
        + ["theta", "vartheta", "u", "V", "in_attractor", "argmin_ok", "active_mode"]
        + [f"w{j + 1}" for j in range(max_nv)]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        H = trace.horizon
        for k in range(H + 1):
            row = [k]
            row += [repr(float(v)) for v in trace.x[k]]
            row += [repr(float(v)) for v in trace.z[k]]
            row += [int(trace.theta[k]), int(trace.vartheta[k])]
            row += [int(trace.u[k]) if k < H else ""]
            row += [
                repr(float(trace.V[k])),
                int(trace.in_attractor[k]),
                int(trace.argmin_ok[k]),
            ]
            row += [int(trace.active_mode[k]) if k < H else ""]
            if k < H:
                row += [
                    "" if np.isnan(v) else repr(float(v))
                    for v in trace.active_weights[k]
                ]
            else:
                row += [""] * max_nv
            w.writerow(row)


def write_v_history_csv(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "V"])
        for k, v in enumerate(trace.V):
            w.writerow([k, repr(float(v))])


def trace_metadata(trace, cfg_hash: str) -> dict:
    return {
        "seed": trace.seed,
        "strategy": trace.strategy,
        "sigma0": trace.sigma0,
        "horizon": trace.horizon,
        "config_hash": cfg_hash,
    }


def ellipsoids_to_dict(ellipsoids, disjoint, cfg_hash: str, cloud_points: int = 256) -> dict:
    return {
        "config_hash": cfg_hash,
        "ellipsoids": [
            {
                "index": i + 1,
                "center": _mat(e.center),
                "shape": _mat(e.shape),
                "boundary_points": _mat(e.boundary_points(cloud_points)),
            }
            for i, e in enumerate(ellipsoids)
        ],
        "pairwise_disjoint": [
            {"i": i, "j": j, "disjoint": bool(v)} for (i, j), v in disjoint.items()
        ],
    }
