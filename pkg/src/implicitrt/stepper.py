"""Fully implicit time steppers and the simulation driver.

Three solver paths share the collision-shift preconditioner:

* ``parity_cg``      -- symmetric even/odd formulation, PCG (isotropic only);
* ``nonsym_gmres``   -- original full-node system, left-preconditioned GMRES;
* ``aniso_gmres``    -- anisotropic kernel variant of the non-symmetric path.

Each step solves one linear system matrix-free and appends a KrylovReport.
A second-order (two-level) time discretization is available for all paths:
it reuses the backward-Euler machinery with dt replaced by (2/3) dt and the
previous levels combined as (4 f^n - f^{n-1}) / 3, bootstrapped by one
backward-Euler step.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import SolverConvergenceError
from .grids import KineticField
from .krylov import LinearOperatorHandle, cg_self_adjoint_solve, gmres_solve
from .operators import (
    ParityPair,
    SchemeScalars,
    apply_aniso_shift_inverse,
    apply_collision_shift,
    apply_collision_shift_inverse,
    apply_even_elliptic,
    apply_streaming,
    assemble_parity_rhs,
    update_odd,
)

__all__ = [
    "SolverConfig",
    "SimulationState",
    "step_parity_be",
    "step_parity_bdf2",
    "step_nonsym_gmres",
    "step_aniso",
    "run_simulation",
]

SCHEMES = ("parity_cg", "nonsym_gmres", "aniso_gmres")


@dataclass(frozen=True)
class SolverConfig:
    eps: float
    dt: float
    scheme: str = "parity_cg"
    time_order: int = 1
    tol: float = 1e-10
    max_iter: int = 2000
    warm_start: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.time_order not in (1, 2):
            raise ValueError("time_order must be 1 or 2")
        SchemeScalars(self.eps, self.dt)  # validates positivity


@dataclass
class SimulationState:
    """Solution at time t plus what the stepping scheme needs to continue."""

    t: float
    solution: object  # ParityPair or KineticField
    previous: Optional[object] = None  # one level back (second order only)
    reports: list = field(default_factory=list)

    def density(self):
        return self.solution.density()


def _check_scheme(sigma, config):
    if config.scheme == "parity_cg" and sigma.kind != "isotropic":
        raise ValueError("parity_cg requires an isotropic cross section")
    if config.scheme == "aniso_gmres" and sigma.kind != "anisotropic":
        raise ValueError("aniso_gmres requires an anisotropic cross section")


def _solve_parity_even(pair, sigma, config, mesh, quadrature, scalars, x0=None):
    """Solve the symmetric even-parity system for the new even component.

    CG runs on the preconditioned operator B^{-1} A + I in the B-weighted
    inner product, applied elliptic-first so the identity part is never
    polluted by the collision shift's rounding; in the stiff regime this
    keeps the solve accurate where forming (A + B) p first would lose the
    near-null mean modes to cancellation.
    """
    shape = pair.f_even.shape
    n = pair.f_even.size
    w_half = quadrature.half_weights()
    weight = np.broadcast_to(w_half, shape).ravel()

    def t_apply(flat):
        g = flat.reshape(shape)
        out = apply_even_elliptic(g, sigma, scalars, mesh, quadrature)
        out = apply_collision_shift_inverse(out, sigma.sigma0, scalars, quadrature)
        return out.ravel() + flat

    def inner(flat):
        g = flat.reshape(shape)
        return apply_collision_shift(g, sigma.sigma0, scalars, quadrature).ravel()

    b = assemble_parity_rhs(pair, sigma, scalars, mesh, quadrature)
    b_hat = apply_collision_shift_inverse(b, sigma.sigma0, scalars, quadrature).ravel()
    op = LinearOperatorHandle(t_apply, n)
    x, report = cg_self_adjoint_solve(
        op, inner, b_hat, tol=config.tol, max_iter=config.max_iter,
        weight=weight, x0=x0,
    )
    return x.reshape(shape), report


def step_parity_be(state, sigma, config, mesh, quadrature, dt=None):
    """One backward-Euler step of the even/odd parity scheme."""
    _check_scheme(sigma, config)
    pair = state.solution
    scalars = SchemeScalars(config.eps, dt if dt is not None else config.dt)
    x0 = pair.f_even.ravel() if config.warm_start else None
    f_even, report = _solve_parity_even(pair, sigma, config, mesh, quadrature, scalars, x0)
    if not report.converged:
        raise SolverConvergenceError(
            f"parity PCG failed: {report.message}", step=len(state.reports), report=report
        )
    f_odd = update_odd(f_even, pair.f_odd, sigma, scalars, mesh, quadrature)
    new_pair = ParityPair(f_even, f_odd, mesh, quadrature)
    return SimulationState(
        state.t + scalars.dt, new_pair, previous=pair, reports=state.reports + [report]
    )


def step_parity_bdf2(state, sigma, config, mesh, quadrature, dt=None):
    """One two-level second-order step; needs ``state.previous``.

    The combination (4 f^n - f^{n-1}) / 3 plays the role of the old level in
    the backward-Euler algebra with time step (2/3) dt.
    """
    _check_scheme(sigma, config)
    if state.previous is None:
        raise SolverConvergenceError(
            "second-order step needs two levels; bootstrap with step_parity_be",
            step=len(state.reports),
        )
    pair, prev = state.solution, state.previous
    dt_full = dt if dt is not None else config.dt
    scalars = SchemeScalars(config.eps, 2.0 * dt_full / 3.0)
    blend = ParityPair(
        (4.0 * pair.f_even - prev.f_even) / 3.0,
        (4.0 * pair.f_odd - prev.f_odd) / 3.0,
        mesh,
        quadrature,
    )
    x0 = pair.f_even.ravel() if config.warm_start else None
    f_even, report = _solve_parity_even(blend, sigma, config, mesh, quadrature, scalars, x0)
    if not report.converged:
        raise SolverConvergenceError(
            f"parity PCG failed: {report.message}", step=len(state.reports), report=report
        )
    f_odd = update_odd(f_even, blend.f_odd, sigma, scalars, mesh, quadrature)
    new_pair = ParityPair(f_even, f_odd, mesh, quadrature)
    return SimulationState(
        state.t + dt_full, new_pair, previous=pair, reports=state.reports + [report]
    )


def _solve_full_system(field, sigma, config, mesh, quadrature, scalars, aniso):
    """GMRES on the left-preconditioned operator B^{-1} C + I.

    As in the parity path, the streaming term is inverted through the
    collision shift before the identity is added, so the stiff part of the
    system never round-trips through a cancellation.
    """
    shape = field.values.shape
    n = field.values.size

    if aniso:
        shift_inv = lambda g: apply_aniso_shift_inverse(
            g, sigma.sigma0, sigma, scalars, quadrature
        )
    else:
        shift_inv = lambda g: apply_collision_shift_inverse(
            g, sigma.sigma0, scalars, quadrature
        )

    def t_apply(flat):
        g = flat.reshape(shape)
        out = shift_inv(apply_streaming(g, scalars, mesh, quadrature))
        return out.ravel() + flat

    d_hat = scalars.eps2_over_dt * shift_inv(field.values).ravel()
    op = LinearOperatorHandle(t_apply, n)
    x0 = field.values.ravel() if config.warm_start else None
    if x0 is None:
        x, report = gmres_solve(op, None, d_hat, tol=config.tol, max_iter=config.max_iter)
    else:
        # warm starting GMRES solves for the correction
        r = d_hat - op.apply(x0)
        dx, report = gmres_solve(op, None, r, tol=config.tol, max_iter=config.max_iter)
        x = x0 + dx
    return x.reshape(shape), report


def step_nonsym_gmres(state, sigma, config, mesh, quadrature, dt=None):
    """One backward-Euler step of the unsymmetrized full-node scheme."""
    field = state.solution
    scalars = SchemeScalars(config.eps, dt if dt is not None else config.dt)
    values, report = _solve_full_system(field, sigma, config, mesh, quadrature, scalars, False)
    if not report.converged:
        raise SolverConvergenceError(
            f"streaming GMRES failed: {report.message}", step=len(state.reports), report=report
        )
    new_field = KineticField(values, mesh, quadrature)
    return SimulationState(
        state.t + scalars.dt, new_field, previous=field, reports=state.reports + [report]
    )


def step_aniso(state, sigma, config, mesh, quadrature, dt=None):
    """Backward-Euler step with the low-rank anisotropic collision shift."""
    if sigma.kind != "anisotropic":
        raise ValueError("step_aniso needs an anisotropic cross-section model")
    field = state.solution
    scalars = SchemeScalars(config.eps, dt if dt is not None else config.dt)
    values, report = _solve_full_system(field, sigma, config, mesh, quadrature, scalars, True)
    if not report.converged:
        raise SolverConvergenceError(
            f"anisotropic GMRES failed: {report.message}", step=len(state.reports), report=report
        )
    new_field = KineticField(values, mesh, quadrature)
    return SimulationState(
        state.t + scalars.dt, new_field, previous=field, reports=state.reports + [report]
    )


def _step_second_order_full(state, sigma, config, mesh, quadrature, stepper, dt=None):
    """Two-level second-order wrapper for the full-node paths."""
    if state.previous is None:
        raise SolverConvergenceError(
            "second-order step needs two levels; bootstrap with a first-order step",
            step=len(state.reports),
        )
    field, prev = state.solution, state.previous
    dt_full = dt if dt is not None else config.dt
    blend = KineticField(
        (4.0 * field.values - prev.values) / 3.0, mesh, quadrature
    )
    sub = SimulationState(state.t, blend, reports=state.reports)
    cfg = replace(config, dt=2.0 * dt_full / 3.0)
    out = stepper(sub, sigma, cfg, mesh, quadrature)
    return SimulationState(
        state.t + dt_full, out.solution, previous=field, reports=out.reports
    )


def make_initial_state(f0, config):
    """Wrap an initial kinetic field into the state the scheme expects."""
    if config.scheme == "parity_cg":
        solution = f0 if isinstance(f0, ParityPair) else ParityPair.from_full(f0)
    else:
        solution = f0.copy() if isinstance(f0, KineticField) else f0.to_full()
    return SimulationState(0.0, solution)


def run_simulation(f0, sigma, config, t_max, mesh, quadrature, observers=()):
    """Advance from t=0 until t_max, shortening the last step to land on it.

    ``observers`` are callables (step_index, t, state, report) invoked after
    every step with read-only access to the state.  Returns the final state
    and the list of per-step Krylov reports.
    """
    if t_max < 0.0:
        raise ValueError("t_max must be nonnegative")
    state = make_initial_state(f0, config)
    tiny = 1e-12 * max(1.0, abs(t_max))
    step_idx = 0
    while t_max - state.t > tiny:
        dt = min(config.dt, t_max - state.t)
        shortened = dt < config.dt * (1.0 - 1e-12)
        if config.scheme == "parity_cg":
            if config.time_order == 2 and state.previous is not None and not shortened:
                state = step_parity_bdf2(state, sigma, config, mesh, quadrature, dt=dt)
            else:
                # bootstrap and shortened final steps use backward Euler
                state = step_parity_be(state, sigma, config, mesh, quadrature, dt=dt)
        else:
            base = step_aniso if config.scheme == "aniso_gmres" else step_nonsym_gmres
            if config.time_order == 2 and state.previous is not None and not shortened:
                state = _step_second_order_full(
                    state, sigma, config, mesh, quadrature, base, dt=dt
                )
            else:
                state = base(state, sigma, config, mesh, quadrature, dt=dt)
        for obs in observers:
            obs(step_idx, state.t, state, state.reports[-1])
        step_idx += 1
    return state, state.reports
