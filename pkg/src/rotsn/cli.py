"""Command-line entry point.

Subcommands: ground-state, energy, minimize, sweep, trial, fit. Exit code 0
on success, 1 on a numerical failure (unconverged or collapsed run), 2 on a
usage or configuration error. Reports go to ``--out`` when given and to
standard output otherwise; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import asymptotics as asym
from .energy import el_residual, energy_breakdown, multiplier_from_identity
from .groundstate import radial_log_energy, solve_radial_ground_state
from .io import (
    ConfigError,
    FieldFileError,
    RunConfig,
    dumps_json,
    load_config,
    load_field,
    read_csv,
    save_field,
    write_csv,
)
from .logconv import make_plan
from .minimize import align_phase, minimize

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2
FIT_TOLERANCE = 0.10


class UsageError(Exception):
    pass


def parse_mass(text: str, a_star: float) -> float:
    """``'7.5'`` is an absolute mass; ``'0.95a*'`` is a fraction of ``a*``."""
    t = text.strip()
    try:
        if t.endswith("a*"):
            return float(t[:-2]) * a_star
        return float(t)
    except ValueError:
        raise UsageError(f"cannot read mass {text!r}; use a number or a fraction like 0.95a*") from None


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _emit(args, obj, default_path=None) -> None:
    text = dumps_json(obj)
    path = default_path if default_path is not None else args.out
    if path:
        Path(path).write_text(text)
    if not args.quiet or not path:
        sys.stdout.write(text)


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _check_rotation(args, pot) -> None:
    if pot.omega >= pot.omega_star and not args.allow_supercritical:
        raise ConfigError(
            f"omega = {pot.omega} is not below omega* = {pot.omega_star}; "
            "pass --allow-supercritical to run it as a divergence probe"
        )


def _settings(cfg: RunConfig, jobs: int = 1) -> asym.SweepSettings:
    return asym.SweepSettings(
        n=cfg.n, half_width=cfg.half_width, comoving=cfg.comoving, decay_lengths=cfg.decay_lengths,
        singular=cfg.singular, continuation=cfg.continuation, jobs=jobs,
    )


def _sidecar(path, suffix=".json"):
    return None if not path else str(Path(path).with_suffix(suffix))


# ---------------------------------------------------------------------------
# subcommands


def cmd_ground_state(args) -> int:
    t0 = time.perf_counter()
    p = solve_radial_ground_state()
    summary = {
        "a_star": p.a_star,
        "q0": p.q0,
        "tail_coeff": p.tail_coeff,
        "r_match": p.r_match,
        "r_max": p.r_max,
        "identity_residuals": p.identity_residuals(),
        "ode_residual": p.ode_residual(),
        "b0_qq": radial_log_energy(p),
    }
    _log(args, f"ground state solved in {time.perf_counter() - t0:.2f} s")
    if args.out:
        write_csv(args.out, ["r", "q", "dq"], np.column_stack([p.r, p.q, p.dq]).tolist())
        _emit(args, summary, _sidecar(args.out))
    else:
        _emit(args, summary)
    return EXIT_OK


def cmd_energy(args) -> int:
    if not args.input:
        raise UsageError("energy needs --in FIELD.psn")
    cfg = _config(args)
    u, meta = load_field(args.input)
    pot = cfg.potential_spec().with_omega(meta["omega"])
    plan = make_plan(u.grid, cfg.singular)
    br = energy_breakdown(u, pot, plan)
    mu = multiplier_from_identity(br.total, u, plan)
    out = {
        "a": u.grid.integrate(np.abs(u.values) ** 2),
        "omega": pot.omega,
        "energy": br.as_dict(),
        "mu": mu,
        "el_residual": el_residual(u, mu, pot, plan),
        "boundary_mass_fraction": u.boundary_fraction,
    }
    _emit(args, out)
    return EXIT_OK


def cmd_minimize(args) -> int:
    cfg = _config(args)
    pot = cfg.potential_spec()
    _check_rotation(args, pot)
    p = solve_radial_ground_state()
    if args.a is not None:
        a = parse_mass(args.a, p.a_star)
    else:
        masses = cfg.masses(p.a_star)
        if len(masses) != 1:
            raise UsageError("minimize needs --a or exactly one mass in the config")
        a = masses[0]
    if not a > 0:
        raise UsageError("mass must be positive")
    g = asym.sweep_grid(a, p.a_star, _settings(cfg))
    plan = make_plan(g, cfg.singular)
    u, rep = minimize(cfg.minimize_config(), pot, a, plan, profile=p)
    u = align_phase(u)
    _log(args, f"{rep.status} after {rep.iters} iterations, residual {rep.residual:.3e}, {rep.runtime:.1f} s")
    report = rep.as_dict()
    report.pop("runtime")
    report["a_star"] = p.a_star
    report["half_width"] = g.half_width
    report["n"] = g.n
    out = args.out or cfg.out
    if out:
        save_field(out, u, {"a": a, "omega": pot.omega})
        _emit(args, report, _sidecar(out))
    else:
        _emit(args, report)
    return EXIT_OK if rep.converged else EXIT_NUMERICAL


def cmd_sweep(args) -> int:
    cfg = _config(args)
    pot = cfg.potential_spec()
    _check_rotation(args, pot)
    p = solve_radial_ground_state()
    masses = cfg.masses(p.a_star)
    if not masses:
        raise UsageError("sweep needs a_values or a_fractions in the config")
    t0 = time.perf_counter()
    records = asym.sweep(masses, pot, cfg.minimize_config(), p, _settings(cfg, args.jobs))
    _log(args, f"{len(records)} points in {time.perf_counter() - t0:.1f} s")
    text = write_csv(args.out or cfg.out, asym.SWEEP_COLUMNS, asym.sweep_rows(records))
    if not (args.out or cfg.out):
        sys.stdout.write(text)
    bad = [r.a for r in records if not r.converged]
    if bad:
        _log(args, f"unconverged at a = {bad}")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_trial(args) -> int:
    if args.a is None or args.tau is None:
        raise UsageError("trial needs --a and --tau")
    cfg = _config(args)
    pot = cfg.potential_spec()
    p = solve_radial_ground_state()
    a = parse_mass(args.a, p.a_star)
    tau = float(args.tau)
    if not tau > 0:
        raise UsageError("tau must be positive")
    from .grid import Grid2D

    plan = make_plan(Grid2D(cfg.n, cfg.half_width), cfg.singular)
    closed, gridded = asym.trial_upper_bound(a, tau, p, pot, plan, return_grid_value=True)
    _emit(args, {"a": a, "a_star": p.a_star, "tau": tau, "omega": pot.omega, "closed_form": closed, "gridded": gridded})
    return EXIT_OK


def fit_verdicts(records, p) -> list:
    """One verdict per law: blow-up slope, energy constant and drift, multiplier limit."""
    A = p.a_star
    out = []

    def verdict(law, estimate, target):
        rel = abs(estimate - target) / abs(target)
        out.append({"law": law, "estimate": estimate, "target": target, "rel_err": rel,
                    "pass": bool(rel <= FIT_TOLERANCE)})

    verdict("epsilon_slope", asym.fit_epsilon_scaling(records, A), 2.0 / A)
    const, drift = asym.fit_energy_asymptotics(records, A)
    verdict("energy_constant", const, asym.energy_constant(p))
    out.append({"law": "energy_drift", "estimate": drift, "target": 0.0, "rel_err": abs(drift / const),
                "pass": bool(abs(drift) <= FIT_TOLERANCE * abs(const))})
    top = max((r for r in records if r.converged), key=lambda r: r.a)
    verdict("mu_eps2", top.mu_eps2, -1.0 / A)
    return out


def cmd_fit(args) -> int:
    if not args.input:
        raise UsageError("fit needs --in SWEEP.csv")
    header, rows = read_csv(args.input)
    records = asym.records_from_rows(header, rows)
    p = solve_radial_ground_state()
    try:
        verdicts = fit_verdicts(records, p)
    except ValueError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(args, verdicts)
    return EXIT_OK


COMMANDS = {
    "ground-state": cmd_ground_state,
    "energy": cmd_energy,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "trial": cmd_trial,
    "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotsn", description="Rotating Schrodinger-Newton minimisation lab")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output path")
    ap.add_argument("--in", dest="input", help="input file (PSN1 field or sweep CSV)")
    ap.add_argument("--a", help="mass, absolute or as a fraction like 0.95a*")
    ap.add_argument("--tau", type=float, help="trial scale")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps without continuation")
    ap.add_argument("--seed", type=int, help="seed for the random-phase initializer")
    ap.add_argument("--quiet", action="store_true")
    ap.add_argument("--allow-supercritical", action="store_true", help="permit omega >= omega*")
    return ap


def run_command(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, FieldFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, AssertionError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
