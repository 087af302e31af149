"""Command-line pipeline driver.

Subcommands mirror the pipeline order: discretize -> certify -> verify ->
simulate -> project.  Exit codes: 0 success, 2 configuration error,
3 infeasible/invalid certificates, 4 diverged simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import control, io, nominal, plots, robust
from .errors import (
    ConfigError,
    Diverged,
    Infeasible,
    InvalidInput,
    MuInfeasible,
    MuTooLarge,
    NoUniqueLimitCycle,
    NotSchurStable,
    PredswitchError,
)
from .model import Cycle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4


def load_config(path) -> dict:
    cfg = io.read_json(path)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def load_system(cfg: dict, config_dir: Path):
    if "system" in cfg:
        doc = cfg["system"]
    elif "system_file" in cfg:
        doc = io.read_json(config_dir / cfg["system_file"])
    else:
        raise ConfigError("config needs 'system' or 'system_file'")
    system, nominal_sel, cycle = io.system_from_dict(doc)
    if "cycle" in cfg:
        cycle = Cycle(nu=tuple(cfg["cycle"]), num_modes=system.num_modes)
    if cycle is None:
        raise ConfigError("no cycle given (config 'cycle' or system 'cycle')")
    return system, nominal_sel, cycle


def _sim_settings(cfg: dict, args) -> dict:
    sim = dict(cfg.get("simulation", {}))
    if getattr(args, "seed", None) is not None:
        sim["seed"] = args.seed
    if getattr(args, "horizon", None) is not None:
        sim["horizon"] = args.horizon
    if getattr(args, "strategy", None) is not None:
        sim["strategy"] = args.strategy
    sim.setdefault("seed", 0)
    sim.setdefault("horizon", 1000)
    sim.setdefault("strategy", "dirichlet-uniform")
    if "x0" not in sim:
        raise ConfigError("simulation settings need x0")
    return sim


def cmd_discretize(args) -> int:
    cfg = load_config(args.config)
    sysdoc = cfg.get("system", {})
    if "continuous" not in sysdoc:
        raise ConfigError("discretize requires a 'system.continuous' section")
    disc = io.discretize_continuous(sysdoc["continuous"])
    for m in disc["modes"]:
        v = m["vertices"]
        if len(v) == 2 and v[0] == v[1]:
            print("warning: zero uncertainty bound produced duplicate vertices",
                  file=sys.stderr)
    if "cycle" in cfg:
        disc["cycle"] = list(cfg["cycle"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    disc["config_hash"] = io.config_hash(cfg)
    path = out / "system.json"
    io.write_json(path, disc)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    cfg_hash = io.config_hash(cfg)
    system, nominal_sel, cycle = load_system(cfg, Path(args.config).parent)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"config_hash": cfg_hash, "stages": []}

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            value = fn()
        except PredswitchError as exc:
            report["stages"].append(
                {"stage": name, "status": "failed",
                 "error": f"{type(exc).__name__}: {exc}",
                 "seconds": time.perf_counter() - t0}
            )
            io.write_json(out / "report.json", report)
            raise
        report["stages"].append(
            {"stage": name, "status": "ok", "seconds": time.perf_counter() - t0}
        )
        return value

    mono = stage("monodromy", lambda: nominal.monodromy(nominal_sel, cycle))
    report["stages"][-1]["spectral_radius"] = mono.spectral_radius
    if not mono.schur_stable:
        report["stages"][-1]["status"] = "failed"
        io.write_json(out / "report.json", report)
        raise NotSchurStable(
            f"monodromy spectral radius {mono.spectral_radius:.6g} >= 1"
        )
    lc = stage("limit_cycle", lambda: nominal.compute_limit_cycle(nominal_sel, cycle))

    mu = args.mu if args.mu is not None else cfg.get("mu")
    if mu is None:
        mu = 0.5 * nominal.max_mu(nominal_sel, cycle)
    mu = float(mu)
    given = cfg.get("nominal_certificate")
    if isinstance(given, str):
        given = io.read_json(Path(args.config).parent / given)
    if given is not None:
        # a-priori P (e.g. from earlier work); take rho from our own solve
        _, ncert = io.nominal_certificate_from_dict({"rho": [], **given})
        if abs(ncert.mu - mu) > 1e-12 and (args.mu is not None or "mu" in cfg):
            raise ConfigError(
                f"mu={mu} conflicts with the given certificate's mu={ncert.mu}"
            )
        report["stages"].append({"stage": "nominal_certificate", "status": "given"})
    else:
        ncert = stage(
            "nominal_certificate",
            lambda: nominal.synthesize_nominal_certificate(
                nominal_sel, cycle, mu, scale=cfg.get("p_scale")
            ),
        )
    nrep = nominal.verify_nominal_certificate(ncert, nominal_sel, cycle)
    report["stages"][-1]["margins"] = {
        "P": list(nrep.p_margins),
        "decay": list(nrep.decay_margins),
    }
    npath = out / "nominal_certificate.json"
    ndoc = io.nominal_certificate_to_dict(lc, ncert)
    ndoc["config_hash"] = cfg_hash
    io.write_json(npath, ndoc)

    gammas = None
    if args.gamma is not None:
        gammas = [args.gamma]
    elif "gamma" in cfg:
        gammas = [cfg["gamma"]]
    elif "gamma_grid" in cfg:
        gammas = list(cfg["gamma_grid"])
    else:
        gammas = [0.5 * mu]

    if len(gammas) > 1:
        rows = stage(
            "gamma_sweep",
            lambda: robust.gamma_sweep(system, cycle, nominal_sel, lc, ncert, gammas),
        )
        report["stages"][-1]["table"] = [
            {k: row[k] for k in ("gamma", "feasible", "margin")} for row in rows
        ]
        feas = [row for row in rows if row["feasible"]]
        if not feas:
            io.write_json(out / "report.json", report)
            raise Infeasible("no grid point was feasible")
        rcert = max(feas, key=lambda row: row["margin"])["certificate"]
    else:
        rcert = stage(
            "robust_certificate",
            lambda: robust.synthesize_robust_certificate(
                system, cycle, nominal_sel, lc, ncert, float(gammas[0])
            ),
        )
    rrep = robust.verify_robust_certificate(
        system, cycle, nominal_sel, lc, ncert, rcert.R, rcert.Q, rcert.gamma
    )
    report["stages"][-1]["verified_margin"] = rrep.min_margin
    report["valid"] = bool(nrep.valid and rrep.valid)
    rpath = out / "robust_certificate.json"
    rdoc = io.robust_certificate_to_dict(rcert)
    rdoc["config_hash"] = cfg_hash
    io.write_json(rpath, rdoc)
    report["artifacts"] = {
        "nominal_certificate": str(npath),
        "robust_certificate": str(rpath),
    }
    io.write_json(out / "report.json", report)
    print(f"nominal margins: P>={min(nrep.p_margins):.3g} "
          f"decay>={min(nrep.decay_margins):.3g}")
    print(f"robust margin: {rrep.min_margin:.3g} (gamma={rcert.gamma})")
    print(f"wrote {npath}, {rpath}, {out / 'report.json'}")
    return EXIT_OK


def _load_certs(args, cfg_dir: Path):
    npath = Path(args.nominal_cert)
    rpath = Path(args.robust_cert)
    ndoc = io.read_json(npath)
    rdoc = io.read_json(rpath)
    lc, ncert = io.nominal_certificate_from_dict(ndoc)
    rcert = io.robust_certificate_from_dict(rdoc)
    return lc, ncert, rcert


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    system, nominal_sel, cycle = load_system(cfg, Path(args.config).parent)
    lc, ncert, rcert = _load_certs(args, Path(args.config).parent)
    res = nominal.limit_cycle_residual(lc, nominal_sel, cycle)
    nrep = nominal.verify_nominal_certificate(ncert, nominal_sel, cycle)
    rrep = robust.verify_robust_certificate(
        system, cycle, nominal_sel, lc, ncert, rcert.R, rcert.Q, rcert.gamma
    )
    report = {
        "limit_cycle_residual": res,
        "nominal": {
            "P_margins": list(nrep.p_margins),
            "decay_margins": list(nrep.decay_margins),
            "valid": nrep.valid,
        },
        "robust": {
            "block_margins": dict(zip(rrep.block_names, rrep.block_margins)),
            "R_margin": rrep.r_margin,
            "Q_margin": rrep.q_margin,
            "valid": rrep.valid,
        },
    }
    valid = nrep.valid and rrep.valid
    report["valid"] = valid
    print(json.dumps(report, indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / "verify_report.json", report)
    return EXIT_OK if valid else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    cfg_hash = io.config_hash(cfg)
    system, nominal_sel, cycle = load_system(cfg, Path(args.config).parent)
    lc, ncert, rcert = _load_certs(args, Path(args.config).parent)
    sim = _sim_settings(cfg, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = control.simulate(
        system,
        cycle,
        nominal_sel,
        lc,
        ncert,
        rcert,
        x0=np.asarray(sim["x0"], float),
        horizon=int(sim["horizon"]),
        seed=int(sim["seed"]),
        strategy=str(sim["strategy"]),
        sigma0=sim.get("sigma0"),
    )
    io.write_trace_csv(out / "trace.csv", trace, system.n)
    io.write_v_history_csv(out / "v_history.csv", trace)
    io.write_json(out / "trace_meta.json", io.trace_metadata(trace, cfg_hash))
    ellipsoids, disjoint = control.attractor_projection(lc, ncert, rcert)
    io.write_json(
        out / "ellipsoids.json", io.ellipsoids_to_dict(ellipsoids, disjoint, cfg_hash)
    )
    plots.plot_state_trajectory(trace, lc, out / "state_trajectory.png")
    plots.plot_lyapunov(trace, out / "lyapunov.png")
    plots.plot_ellipsoids(ellipsoids, lc, trace, out / "ellipsoids.png")
    entered = np.argmax(trace.in_attractor) if trace.in_attractor.any() else None
    print(f"simulated {trace.horizon} steps (seed={trace.seed}, "
          f"strategy={trace.strategy}, sigma0={trace.sigma0})")
    if entered is not None:
        print(f"entered attractor (V<=1 and argmin) at k={int(entered)}; "
              f"stayed: {bool(trace.in_attractor[int(entered):].all())}")
    print(f"wrote artifacts to {out}")
    return EXIT_OK


def cmd_project(args) -> int:
    cfg = load_config(args.config)
    cfg_hash = io.config_hash(cfg)
    lc, ncert, rcert = _load_certs(args, Path(args.config).parent)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ellipsoids, disjoint = control.attractor_projection(lc, ncert, rcert)
    io.write_json(
        out / "ellipsoids.json", io.ellipsoids_to_dict(ellipsoids, disjoint, cfg_hash)
    )
    plots.plot_ellipsoids(ellipsoids, lc, None, out / "ellipsoids.png")
    for (i, j), v in disjoint.items():
        print(f"E{i} and E{j}: {'disjoint' if v else 'overlapping'}")
    print(f"wrote {out / 'ellipsoids.json'}, {out / 'ellipsoids.png'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="predswitch",
        description="Robust predictive min-switching control toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, certs=False):
        sp.add_argument("--config", required=True, help="run configuration JSON")
        sp.add_argument("--out", default="out", help="output directory")
        if certs:
            sp.add_argument("--nominal-cert", required=True,
                            help="nominal certificate JSON (rho, P, mu)")
            sp.add_argument("--robust-cert", required=True,
                            help="robust certificate JSON (R, Q, gamma)")

    sp = sub.add_parser("discretize", help="continuous modes -> vertex-form system")
    common(sp)
    sp.set_defaults(fn=cmd_discretize)

    sp = sub.add_parser("certify", help="limit cycle + nominal + robust certificates")
    common(sp)
    sp.add_argument("--mu", type=float, help="nominal decay rate in (0,1)")
    sp.add_argument("--gamma", type=float, help="robust tuning parameter in (0,1)")
    sp.set_defaults(fn=cmd_certify)

    sp = sub.add_parser("verify", help="re-verify certificate files (no synthesis)")
    common(sp, certs=True)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("simulate", help="closed-loop run with trace and figures")
    common(sp, certs=True)
    sp.add_argument("--seed", type=int, help="simulation seed")
    sp.add_argument("--horizon", type=int, help="number of steps")
    sp.add_argument("--strategy",
                    choices=("vertex-random", "dirichlet-uniform", "nominal"),
                    help="uncertainty sampling strategy")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("project", help="attractor ellipsoids and disjointness")
    common(sp, certs=True)
    sp.set_defaults(fn=cmd_project)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Infeasible, NotSchurStable, NoUniqueLimitCycle, MuTooLarge,
            MuInfeasible) as exc:
        print(f"infeasible: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Diverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InvalidInput as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
