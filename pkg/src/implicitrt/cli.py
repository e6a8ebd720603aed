"""Command-line driver: experiment presets, condition-number sweeps,
benchmark timings, and CSV persistence.

Subcommands::

    implicitrt run --config experiment.cfg
    implicitrt preset example1 [--epsilon X] [--tmax T] [--out DIR]
    implicitrt condition --config experiment.cfg
    implicitrt bench --config experiment.cfg

Exit codes: 0 success, 1 solver failure, 2 configuration error, 3 I/O error.
"""

import argparse
import os
import sys
import time

import numpy as np
import scipy.linalg

from . import diagnostics
from .config import (
    PRESET_NAMES,
    build_problem,
    parse_config,
    preset_config,
    sample_sigma_values,
)
from .csvio import write_csv
from .errors import ConfigError, TransportError
from .grids import DensityField
from .operators import CrossSectionModel, SchemeScalars, dense_assemble
from .reference import (
    diffusion_step_1d,
    diffusion_step_2d,
    diffusion_step_aniso,
    explicit_cfl_limit,
    explicit_step,
)
from .stepper import SolverConfig, make_initial_state, run_simulation, step_parity_be

__all__ = ["main", "run_experiment"]


def _solver_config(cfg, epsilon=None):
    return SolverConfig(
        eps=cfg.epsilon if epsilon is None else epsilon,
        dt=cfg.resolved_dt(),
        scheme=cfg.scheme,
        time_order=cfg.time_order,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
    )


def _density_rows(mesh, rho):
    if mesh.dimension == 1:
        x = mesh.centers(0)
        return ["x", "rho"], [(x[i], rho[i]) for i in range(len(x))]
    xg, yg = mesh.center_grid()
    rows = [
        (xg[i, j], yg[i, j], rho[i, j])
        for i in range(mesh.shape[0])
        for j in range(mesh.shape[1])
    ]
    return ["x", "y", "rho"], rows


def _write_density(path, mesh, rho, metadata):
    columns, rows = _density_rows(mesh, rho)
    write_csv(path, columns, rows, metadata)


def _run_explicit_reference(cfg, mesh, quad, sigma_values, f0):
    """March the upwind explicit solver to tmax under its CFL bound."""
    dt_max = explicit_cfl_limit(sigma_values, cfg.epsilon, mesh, quad)
    n_steps = max(1, int(np.ceil(cfg.tmax / dt_max)))
    dt = cfg.tmax / n_steps
    f = f0
    for _ in range(n_steps):
        f = explicit_step(f, sigma_values, cfg.epsilon, dt, mesh, quad)
    return f.density()


def _run_diffusion_reference(cfg, mesh, sigma_values, rho0, dt=None, aniso=False):
    dt = cfg.resolved_dt() if dt is None else dt
    n_steps = max(1, int(np.ceil(cfg.tmax / dt - 1e-12)))
    dt_step = cfg.tmax / n_steps
    rho = DensityField(rho0.copy(), mesh)
    for _ in range(n_steps):
        if aniso:
            rho = diffusion_step_aniso(rho, sigma_values, dt_step, mesh)
        elif mesh.dimension == 1:
            rho = diffusion_step_1d(rho, sigma_values, dt_step, mesh)
        else:
            rho = diffusion_step_2d(rho, sigma_values, dt_step, mesh)
    return rho


def _reference_density(cfg, mesh, quad, sigma, f0):
    """Reference profile: explicit solver in the kinetic regime, the
    matching diffusion limit otherwise."""
    if cfg.epsilon >= 0.1:
        return "explicit", _run_explicit_reference(cfg, mesh, quad, sigma.sigma0, f0)
    sigma_values = sigma.sigma0
    if sigma.kind == "anisotropic":
        return "diffusion", _run_diffusion_reference(
            cfg, mesh, sigma_values, f0.density().values, aniso=True
        )
    # vanishing cross sections make 1/(3 sigma) blow up; floor them for the
    # comparison run (meaningful only away from the vanishing point)
    floored = np.maximum(sigma_values, 1e-6)
    return "diffusion", _run_diffusion_reference(cfg, mesh, floored, f0.density().values)


def _mode_run(cfg):
    mesh, quad, sigma, f0 = build_problem(cfg)
    solver_cfg = _solver_config(cfg)
    monitor = diagnostics.StabilityMonitor()
    monitor.seed(make_initial_state(f0, solver_cfg).solution)
    t0 = time.perf_counter()
    state, reports = run_simulation(
        f0, sigma, solver_cfg, cfg.tmax, mesh, quad, observers=[monitor]
    )
    elapsed = time.perf_counter() - t0
    meta = cfg.echo()
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    _write_density(os.path.join(out, "rho_kinetic.csv"), mesh, state.density().values, meta)

    rows = [
        (rec["step"], rec["t"], rep.iterations, rep.final_residual,
         rec["norm"], rec["mass"])
        for rec, rep in zip(monitor.records, reports)
    ]
    write_csv(
        os.path.join(out, "report.csv"),
        ["step", "t", "iterations", "residual", "norm", "mass"],
        rows,
        meta + [("wall_time_s", f"{elapsed:.6f}"), ("flags", len(monitor.flags))],
    )

    label, rho_ref = _reference_density(cfg, mesh, quad, sigma, f0)
    _write_density(
        os.path.join(out, "rho_reference.csv"), mesh, rho_ref.values,
        meta + [("reference", label)],
    )
    gap = diagnostics.rho_distance(state.density(), rho_ref)
    print(f"run finished: t={state.t:g}, steps={len(reports)}, "
          f"|rho_kinetic - rho_{label}|_2 = {gap:.4e}, flags={len(monitor.flags)}")
    return 0


def _mode_ap_sweep(cfg):
    mesh, quad, sigma, f0 = build_problem(cfg)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    summary = []
    finals = []
    for eps in cfg.ap_epsilons:
        solver_cfg = _solver_config(cfg, epsilon=eps)
        series = []

        def observer(step, t, state, report):
            series.append((t, diagnostics.ap_distance_f_rho(state.solution)))

        state, _ = run_simulation(
            f0, sigma, solver_cfg, cfg.tmax, mesh, quad, observers=[observer]
        )
        meta = cfg.echo() + [("epsilon_run", repr(eps))]
        write_csv(
            os.path.join(out, f"ap_eps{eps:g}.csv"),
            ["t", "ap_distance"], series, meta,
        )
        rho_d = _run_diffusion_reference(cfg, mesh, sigma.sigma0, f0.density().values)
        gap = diagnostics.rho_distance(state.density(), rho_d)
        summary.append((eps, series[-1][1], gap))
        finals.append(series[-1][1])
    write_csv(
        os.path.join(out, "ap_summary.csv"),
        ["epsilon", "final_ap_distance", "rho_distance_vs_diffusion"],
        summary, cfg.echo(),
    )
    ordered = all(a > b for a, b in zip(finals, finals[1:]))
    print(f"ap_sweep finished: final distances {finals} "
          f"({'ordered' if ordered else 'NOT ordered'} in epsilon)")
    return 0


def _mode_condition(cfg):
    """Condition reports over the documented dt calibration sweep at the
    configured grid (the tables never state dt, so every rule is reported)."""
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    rules = diagnostics.DT_SWEEP_RULES
    length = cfg.dx * cfg.nx
    rows = []
    for rule_idx, rule in enumerate(rules):
        dt = diagnostics.resolve_dt_rule(rule, cfg.dx)
        for which_idx, which in enumerate(("A_plus_B", "precond_system")):
            rep = diagnostics.condition_number(
                which, cfg.nx, cfg.nv, cfg.epsilon, dt, domain=(0.0, length)
            )
            rows.append((rule_idx, which_idx, cfg.nx, cfg.nv, rep.eps,
                         rep.dt, rep.lambda_min, rep.lambda_max, rep.kappa))
    write_csv(
        os.path.join(out, "condition.csv"),
        ["rule_index", "operator_index", "nx", "nv", "eps", "dt",
         "lambda_min", "lambda_max", "kappa"],
        rows,
        cfg.echo() + [("dt_rules", ";".join(rules)),
                      ("operators", "A_plus_B;precond_system")],
    )
    print(f"condition sweep finished: {len(rows)} reports")
    return 0


def bench_parity_solve(cfg, repeats=3):
    """Wall-time ratio of dense factor+solve against matrix-free PCG for one
    even-parity solve."""
    mesh, quad, sigma, f0 = build_problem(cfg)
    solver_cfg = _solver_config(cfg)
    state = make_initial_state(f0, solver_cfg)

    t_pcg = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        step_parity_be(state, sigma, solver_cfg, mesh, quad)
        t_pcg = min(t_pcg, time.perf_counter() - t0)

    scalars = SchemeScalars(solver_cfg.eps, solver_cfg.dt)
    n = mesh.shape[0] * quad.n_half
    dense = dense_assemble("A", sigma, scalars, mesh, quad, cap=max(n, 4096))
    dense += dense_assemble("B", sigma, scalars, mesh, quad, parity=True, cap=max(n, 4096))
    rng = np.random.default_rng(0)
    b = rng.standard_normal(n)
    t_dense = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        lu, piv = scipy.linalg.lu_factor(dense)
        scipy.linalg.lu_solve((lu, piv), b)
        t_dense = min(t_dense, time.perf_counter() - t0)
    return t_dense, t_pcg


def _mode_bench(cfg):
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    t_dense, t_pcg = bench_parity_solve(cfg)
    ratio = t_dense / t_pcg
    write_csv(
        os.path.join(out, "bench.csv"),
        ["nx", "nv", "eps", "t_dense", "t_pcg", "ratio"],
        [(cfg.nx, cfg.nv, cfg.epsilon, t_dense, t_pcg, ratio)],
        cfg.echo(),
    )
    print(f"bench finished: t_dense={t_dense:.4e}s t_pcg={t_pcg:.4e}s ratio={ratio:.1f}")
    return 0


def run_experiment(cfg):
    """Dispatch a config to its mode; returns the process exit code."""
    mode = {
        "run": _mode_run,
        "ap_sweep": _mode_ap_sweep,
        "condition": _mode_condition,
        "bench": _mode_bench,
    }[cfg.mode]
    return mode(cfg)


def _load_config(path):
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="implicitrt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True)

    p_preset = sub.add_parser("preset", help="run a named published-example preset")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--epsilon", type=float, default=None)
    p_preset.add_argument("--tmax", type=float, default=None)
    p_preset.add_argument("--out", default=None)
    p_preset.add_argument("--nx", type=int, default=None)
    p_preset.add_argument("--nv", type=int, default=None)

    p_cond = sub.add_parser("condition", help="condition-number sweep")
    p_cond.add_argument("--config", required=True)

    p_bench = sub.add_parser("bench", help="dense-direct vs PCG timing")
    p_bench.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "preset":
            cfg = preset_config(
                args.name, epsilon=args.epsilon, tmax=args.tmax,
                out_dir=args.out, nx=args.nx, nv=args.nv,
            )
        else:
            cfg = _load_config(args.config)
            if args.command == "condition":
                cfg.mode = "condition"
            elif args.command == "bench":
                cfg.mode = "bench"
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except TransportError as exc:
        if "cannot write" in str(exc):
            print(f"i/o error: {exc}", file=sys.stderr)
            return 3
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
