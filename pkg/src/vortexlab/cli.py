"""Command-line front end: solve, continue, radial, spectrum, check, report.

Configuration is TOML; diagnostics are CSV rows with a '#'-prefixed schema
header; each run writes a JSON manifest (config echo, versions, timings).
Exit codes: 0 ok, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path


def _cap_threads() -> None:
    cap = os.environ.get("VORTEXLAB_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


class ConfigError(Exception):
    pass


def load_config(path) -> dict:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc


def _require(cfg: dict, table: str, key: str, types, default=None):
    sub = cfg.get(table, {})
    if key not in sub:
        if default is not None:
            return default
        raise ConfigError(f"missing config key [{table}] {key}")
    val = sub[key]
    if not isinstance(val, types):
        raise ConfigError(f"config key [{table}] {key} has wrong type {type(val).__name__}")
    return val


def build_model(cfg: dict):
    import numpy as np

    from .geometry import MomentModel

    n = _require(cfg, "model", "n", int)
    weights = _require(cfg, "model", "weights", list)
    level = float(_require(cfg, "model", "level", (int, float)))
    strict = bool(cfg.get("model", {}).get("strict_free", False))
    try:
        return MomentModel(n=n, weights=np.array(weights, dtype=int), level=level, strict_free=strict)
    except ValueError as exc:
        raise ConfigError(f"invalid model: {exc}") from exc


def build_surface(cfg: dict):
    from .grids import RadialDomain, TorusGrid

    kind = _require(cfg, "surface", "kind", str)
    sub = cfg.get("surface", {})
    if kind == "torus":
        sides = sub.get("sides", [6.283185307179586, 6.283185307179586])
        res = sub.get("resolution", [64, 64])
        lam = sub.get("lambda", 1.0)
        if isinstance(lam, str):
            if lam.strip() != "1":
                raise ConfigError("only constant lambda ('1' or a number) is supported")
            lam = 1.0
        try:
            return TorusGrid(
                L_s=float(sides[0]), L_t=float(sides[1]),
                N_s=int(res[0]), N_t=int(res[1]),
                degree=int(sub.get("degree", 0)), lam=float(lam),
            )
        except (ValueError, IndexError, TypeError) as exc:
            raise ConfigError(f"invalid torus surface: {exc}") from exc
    if kind == "radial":
        try:
            return RadialDomain(
                r_max=float(sub.get("r_max", 30.0)),
                N_r=int(sub.get("N_r", 4000)),
                grading=float(sub.get("grading", 2.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid radial domain: {exc}") from exc
    raise ConfigError(f"surface.kind must be 'torus' or 'radial', got {kind!r}")


def build_seed_state(cfg: dict, model, grid, eps: float, snapshot=None):
    import numpy as np

    from . import solvers
    from .elliptic import holomorphic_seed_torus
    from .fields import load_snapshot
    from .sampling import vacuum_state

    if snapshot:
        state = load_snapshot(snapshot)
        return state.with_eps(eps)
    kind = cfg.get("solver", {}).get("seed", "auto")
    rng = np.random.default_rng(int(cfg.get("rng_seed", 0)))
    if kind == "vacuum" or (kind == "auto" and grid.degree == 0):
        return vacuum_state(model, grid, eps)
    if kind == "weierstrass":
        return holomorphic_seed_torus(model, grid, eps)
    if kind in ("theta", "auto"):
        return solvers.theta_vortex_seed(model, grid, eps, rng=rng)
    raise ConfigError(f"unknown solver.seed {kind!r}")


def write_manifest(outdir: Path, cfg: dict, timings: dict) -> None:
    import numpy
    import scipy

    from . import __version__

    manifest = {
        "config": cfg,
        "versions": {
            "vortexlab": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "timings": timings,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _error_json(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def cmd_solve(cfg: dict, outdir: Path, snapshot=None) -> int:
    from . import operators as ops
    from .diagnostics import write_csv
    from .fields import save_snapshot
    from .solvers import descend, diagnostics_record, newton_solve, default_stall_accept

    t0 = time.perf_counter()
    model = build_model(cfg)
    grid = build_surface(cfg)
    solver = cfg.get("solver", {})
    eps = float(solver.get("eps", 0.3))
    tol = float(solver.get("tol", 1e-10))
    state = build_seed_state(cfg, model, grid, eps, snapshot)
    if solver.get("descend_steps", 60):
        state, _ = descend(state, steps=int(solver.get("descend_steps", 60)))
    sol, rep = newton_solve(
        state, tol=tol,
        max_iter=int(solver.get("max_iter", 40)),
        stall_accept=default_stall_accept(state) if solver.get("accept_floor", True) else None,
        cg_adaptive=bool(solver.get("cg_adaptive", True)),
    )
    rec = diagnostics_record(sol, rep)
    if rep.floor_reached:
        rec.note = "discretization floor"
    save_snapshot(outdir / "state.vortx", sol)
    write_csv(outdir / "diagnostics.csv", [rec])
    write_manifest(outdir, cfg, {"total_s": time.perf_counter() - t0})
    print(f"solved: residual {rep.final_residual:.3e} in {rep.iterations} Newton steps; "
          f"E_eps {ops.energy_eps(sol):.6f}, E_top {ops.topological_energy(sol):.6f}")
    return 0


def cmd_continue(cfg: dict, outdir: Path, snapshot=None) -> int:
    from .diagnostics import loglog_slope, write_csv
    from .fields import save_snapshot
    from .solvers import descend, eps_continuation, newton_solve, default_stall_accept

    t0 = time.perf_counter()
    model = build_model(cfg)
    grid = build_surface(cfg)
    solver = cfg.get("solver", {})
    ladder = [float(x) for x in solver.get("ladder", [0.4, 0.28, 0.2, 0.14, 0.1])]
    if not ladder:
        raise ConfigError("solver.ladder must be a nonempty decreasing list")
    from_seed = bool(solver.get("from_seed", False))
    seed = build_seed_state(cfg, model, grid, ladder[0], snapshot)
    if not from_seed and snapshot is None:
        seed, _ = descend(seed, steps=int(solver.get("descend_steps", 80)))
        seed, _ = newton_solve(
            seed, tol=float(solver.get("tol", 1e-10)),
            stall_accept=default_stall_accept(seed), cg_adaptive=True,
        )
    records, states = eps_continuation(
        seed, ladder, from_seed=from_seed,
        tol=float(solver.get("tol", 1e-10)),
        descend_steps=int(solver.get("rung_descend_steps", 60)),
        newton_kwargs={"max_iter": int(solver.get("max_iter", 60))},
    )
    ok = [r for r in records if r.converged]
    summary = []
    if len(ok) >= 2:
        eps_list = [r.eps for r in ok]
        summary = [
            f"slope sup_mu {loglog_slope(eps_list, [r.sup_mu for r in ok]):.4f}",
            f"slope l2_mu {loglog_slope(eps_list, [r.l2_mu for r in ok]):.4f}",
            f"slope correction_norm_2 {loglog_slope(eps_list, [r.correction_norm_2 for r in ok]):.4f}",
        ]
    write_csv(outdir / "ladder.csv", records, summary)
    for i, st in enumerate(states):
        save_snapshot(outdir / f"rung{i}.vortx", st)
    write_manifest(outdir, cfg, {"total_s": time.perf_counter() - t0})
    print(f"ladder: {len(ok)}/{len(records)} rungs converged; " + "; ".join(summary))
    return 0 if len(ok) == len(records) else 1


def cmd_radial(cfg: dict, outdir: Path) -> int:
    import numpy as np

    from .grids import RadialDomain
    from .radial import decay_diagnostic, radial_vortex, vortex_energy

    t0 = time.perf_counter()
    model = build_model(cfg)
    surface = build_surface(cfg)
    if not isinstance(surface, RadialDomain):
        raise ConfigError("cmd radial requires surface.kind = 'radial'")
    d = int(cfg.get("solver", {}).get("vortex_number", 1))
    prof = radial_vortex(model, d, surface)
    E = vortex_energy(prof)
    hbar = np.pi * model.level
    rho, dec = decay_diagnostic(prof)
    lines = [
        f"vortex number {d}",
        f"energy {E:.10f}",
        f"energy/(pi r d) {E / (np.pi * model.level * d):.10f}",
        f"energy/hbar {E / hbar:.10f}",
        f"decay tail monotone {bool(np.all(np.diff(dec) < 0))}",
    ]
    (outdir / "radial.txt").write_text("\n".join(lines) + "\n")
    np.savetxt(
        outdir / "profile.dat",
        np.column_stack([prof.domain.nodes, prof.f, prof.a]),
        header="rho f a",
    )
    write_manifest(outdir, cfg, {"total_s": time.perf_counter() - t0})
    print("; ".join(lines))
    return 0


def cmd_spectrum(cfg: dict, outdir: Path, snapshot=None) -> int:
    import numpy as np

    from .solvers import descend, newton_solve, spectrum_probe, default_stall_accept

    t0 = time.perf_counter()
    model = build_model(cfg)
    grid = build_surface(cfg)
    solver = cfg.get("solver", {})
    eps = float(solver.get("eps", 0.2))
    state = build_seed_state(cfg, model, grid, eps, snapshot)
    if snapshot is None:
        state, _ = descend(state, steps=int(solver.get("descend_steps", 60)))
        state, _ = newton_solve(state, tol=float(solver.get("tol", 1e-10)),
                                stall_accept=default_stall_accept(state), cg_adaptive=True)
    spec = spectrum_probe(state, count=int(solver.get("count", 12)))
    np.savetxt(outdir / "singular_values.dat", spec["singular_values"], header="sigma")
    report = (
        f"nullity {spec['nullity']} (threshold 1e-3 x gap)\n"
        f"gap {spec['gap']:.6e}\n"
        f"cluster split at index {spec['cluster_split']}\n"
    )
    (outdir / "spectrum.txt").write_text(report)
    write_manifest(outdir, cfg, {"total_s": time.perf_counter() - t0})
    print(report.replace("\n", "; "))
    return 0


def cmd_check(cfg: dict, outdir: Path) -> int:
    from .checks import run_all_checks

    results = run_all_checks(rng_seed=int(cfg.get("rng_seed", 0)))
    failed = [r for r in results if not r.passed]
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    (outdir / "check.txt").write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    if failed:
        print(f"{len(failed)} invariant(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_report(cfg: dict, outdir: Path) -> int:
    from .diagnostics import DiagRecord, read_csv

    src = outdir / "ladder.csv"
    if not src.exists():
        raise ConfigError(f"no ladder.csv found in {outdir}; run 'continue' first")
    records = read_csv(src)
    cols = DiagRecord.columns()
    with open(outdir / "ladder.dat", "w") as fh:
        fh.write("# " + " ".join(cols[:12]) + "\n")
        for r in records:
            fh.write(" ".join(str(getattr(r, c)) for c in cols[:12]) + "\n")
    stub = (
        "set logscale xy\n"
        'set xlabel "eps"\n'
        'plot "ladder.dat" using 1:4 with linespoints title "sup |mu|", \\\n'
        '     "ladder.dat" using 1:5 with linespoints title "L2 mu"\n'
    )
    (outdir / "plot.gp").write_text(stub)
    print(f"wrote {outdir / 'ladder.dat'} and gnuplot stub {outdir / 'plot.gp'}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "continue": cmd_continue,
    "radial": cmd_radial,
    "spectrum": cmd_spectrum,
    "check": cmd_check,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortexlab", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="TOML run configuration")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel independent configs")
    p.add_argument("--seed-snapshot", type=Path, default=None, help="warm-start field snapshot")
    return p


def run_one(command: str, cfg: dict, outdir: Path, snapshot) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    fn = COMMANDS[command]
    if command in ("solve", "continue", "spectrum"):
        return fn(cfg, outdir, snapshot)
    return fn(cfg, outdir)


def main(argv=None) -> int:
    _cap_threads()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.command != "report" and args.command != "check" and not cfg:
            raise ConfigError("--config is required for this command")
        return run_one(args.command, cfg, args.out, args.seed_snapshot)
    except ConfigError as exc:
        _error_json("config", str(exc))
        return 2
    except Exception as exc:  # numerical failures
        _error_json("numerical", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
