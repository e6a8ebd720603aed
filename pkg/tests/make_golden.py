"""Regenerate the committed regression snapshot for the first slab example.

Run from the repository root:

    python3 tests/make_golden.py

The snapshot is the kinetic density at t = 1 for the vanishing-quartic
cross section at eps = 1 (n_x = 200, n_v = 100, dt = dx/3), cross-checked
against the independent explicit upwind solver before being written.
"""

import os

import numpy as np

from implicitrt.cli import _run_explicit_reference
from implicitrt.config import build_problem, preset_config
from implicitrt.csvio import write_csv
from implicitrt.diagnostics import rho_distance
from implicitrt.stepper import SolverConfig, run_simulation

OUT = os.path.join(os.path.dirname(__file__), "data", "example1_rho_t1.csv")


def golden_config():
    return preset_config("example1", epsilon=1.0, tmax=1.0)


def compute_density():
    cfg = golden_config()
    mesh, quad, sigma, f0 = build_problem(cfg)
    solver_cfg = SolverConfig(
        eps=cfg.epsilon, dt=cfg.resolved_dt(), scheme="parity_cg", tol=cfg.tol
    )
    state, _ = run_simulation(f0, sigma, solver_cfg, cfg.tmax, mesh, quad)
    return mesh, quad, sigma, f0, cfg, state.density()


def main():
    mesh, quad, sigma, f0, cfg, rho = compute_density()
    rho_explicit = _run_explicit_reference(cfg, mesh, quad, sigma.sigma0, f0)
    gap = rho_distance(rho, rho_explicit)
    print(f"kinetic vs explicit gap at t=1: {gap:.4e}")
    assert gap < 0.05, "implicit and explicit references disagree badly"
    x = mesh.centers(0)
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    write_csv(
        OUT,
        ["x", "rho"],
        [(x[i], rho.values[i]) for i in range(len(x))],
        cfg.echo(),
    )
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
