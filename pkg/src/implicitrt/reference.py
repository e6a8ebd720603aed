"""Independent verification solvers.

An explicit upwind kinetic solver (trustworthy on its own terms, first
order in space) and backward-Euler diffusion-limit solvers:

* 1D isotropic limit   rho_t = d/dx( 1/(3 sigma) d/dx rho )
* 2D isotropic limit   rho_t = 1/2 div( 1/sigma grad rho )
* 1D degree-one anisotropic limit   rho_t = 1/2 d/dx( 1/sigma0 d/dx rho )

The anisotropic limit uses the dissipative sign: inverting the degree-one
collision operator on odd functions gives Q^{-1}(mu g) = -(3/2) mu g, so the
closure carries a minus sign and the reduced equation is a forward heat
equation with coefficient 1/(2 sigma0).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CflError
from .grids import DensityField, KineticField
from .krylov import LinearOperatorHandle, pcg_solve

__all__ = [
    "explicit_step",
    "diffusion_step_1d",
    "diffusion_step_2d",
    "diffusion_step_aniso",
    "explicit_cfl_limit",
]


def _upwind_derivative(values, speeds, dx, axis):
    """First-order upwind d/dx per angular node, periodic.

    ``speeds`` has one entry per node (last axis of ``values``).
    """
    back = (values - np.roll(values, 1, axis=axis)) / dx
    fwd = (np.roll(values, -1, axis=axis) - values) / dx
    return np.where(speeds >= 0.0, back, fwd)


def explicit_cfl_limit(sigma_values, eps, mesh, quadrature):
    """Largest admissible forward-Euler step, with a 0.9 safety factor.

    Streaming and relaxation rates are combined: the update coefficient of
    f_i must stay nonnegative, so dt (rate/eps + sigma/eps^2) <= 1 rather
    than each bound separately (the separate bounds admit steps that are
    unstable when both are near their limits at once).
    """
    dirs = quadrature.directions()
    rate = 0.0
    for axis in range(mesh.dimension):
        rate += np.max(np.abs(dirs[:, axis])) / mesh.spacing[axis]
    sig_max = float(np.max(sigma_values))
    return 0.9 / (rate / eps + sig_max / eps**2)


def explicit_step(field, sigma_values, eps, dt, mesh, quadrature):
    """Forward Euler with upwind transport:

    f^{n+1} = f^n - (dt/eps) Omega.grad_up f^n + (dt sigma/eps^2)(rho^n - f^n)

    Rejects dt above the CFL guard, reporting the admissible step.
    """
    dt_max = explicit_cfl_limit(sigma_values, eps, mesh, quadrature)
    if dt > dt_max:
        raise CflError(dt, dt_max)
    f = field.values
    dirs = quadrature.directions()
    transport = np.zeros_like(f)
    for axis in range(mesh.dimension):
        speeds = dirs[:, axis]
        transport += speeds * _upwind_derivative(f, speeds, mesh.spacing[axis], axis)
    rho = field.density().values[..., None]
    sig = np.asarray(sigma_values, dtype=float)[..., None]
    new = f - (dt / eps) * transport + (dt / eps**2) * sig * (rho - f)
    return KineticField(new, mesh, quadrature)


def _periodic_flux_matrix_1d(coef_cells, dx):
    """Sparse periodic matrix of -d/dx( c(x) d/dx . ), arithmetic face means."""
    n = len(coef_cells)
    c_plus = 0.5 * (coef_cells + np.roll(coef_cells, -1))  # face i+1/2
    c_minus = np.roll(c_plus, 1)
    diag = (c_plus + c_minus) / dx**2
    mat = sp.diags(
        [diag, -c_plus[:-1] / dx**2, -c_plus[:-1] / dx**2],
        [0, 1, -1],
        shape=(n, n),
        format="lil",
    )
    mat[0, n - 1] = -c_minus[0] / dx**2
    mat[n - 1, 0] = -c_plus[n - 1] / dx**2
    return mat.tocsc()


def diffusion_step_1d(rho, sigma_values, dt, mesh, coefficient=None):
    """Backward-Euler step of rho_t = d/dx( c(x) d/dx rho ), flux form.

    ``coefficient`` defaults to 1/(3 sigma); a direct cyclic solve is used.
    """
    sig = np.asarray(sigma_values, dtype=float)
    if coefficient is None:
        if np.any(sig <= 0.0):
            raise ValueError(
                "diffusion coefficient 1/(3 sigma) is singular where sigma = 0"
            )
        coefficient = 1.0 / (3.0 * sig)
    (dx,) = mesh.spacing
    stencil = _periodic_flux_matrix_1d(np.asarray(coefficient, dtype=float), dx)
    n = mesh.shape[0]
    system = sp.identity(n, format="csc") + dt * stencil
    new = spla.spsolve(system, rho.values)
    return DensityField(new, mesh)


def diffusion_step_aniso(rho, sigma0_values, dt, mesh):
    """Backward-Euler step of the reduced degree-one anisotropic limit,
    rho_t = 1/2 d/dx( 1/sigma0 d/dx rho )."""
    sig = np.asarray(sigma0_values, dtype=float)
    if np.any(sig <= 0.0):
        raise ValueError("diffusion coefficient 1/(2 sigma0) is singular where sigma0 = 0")
    return diffusion_step_1d(rho, sig, dt, mesh, coefficient=0.5 / sig)


def diffusion_step_2d(rho, sigma_values, dt, mesh, tol=1e-13):
    """Backward-Euler five-point flux-form step of rho_t = 1/2 div(grad rho / sigma),
    solved by diagonally preconditioned CG."""
    sig = np.asarray(sigma_values, dtype=float)
    if np.any(sig <= 0.0):
        raise ValueError("diffusion coefficient 1/(2 sigma) is singular where sigma = 0")
    coef = 0.5 / sig
    dx, dy = mesh.spacing
    shape = mesh.shape
    cx = 0.5 * (coef + np.roll(coef, -1, axis=0))
    cy = 0.5 * (coef + np.roll(coef, -1, axis=1))

    def stencil(r):
        jx = cx * (np.roll(r, -1, axis=0) - r)
        jy = cy * (np.roll(r, -1, axis=1) - r)
        out = -(jx - np.roll(jx, 1, axis=0)) / dx**2
        out -= (jy - np.roll(jy, 1, axis=1)) / dy**2
        return out

    diag = 1.0 + dt * ((cx + np.roll(cx, 1, axis=0)) / dx**2 + (cy + np.roll(cy, 1, axis=1)) / dy**2)

    def op_apply(flat):
        r = flat.reshape(shape)
        return (r + dt * stencil(r)).ravel()

    op = LinearOperatorHandle(op_apply, rho.values.size)
    precond = LinearOperatorHandle(lambda v: v / diag.ravel(), rho.values.size)
    x, report = pcg_solve(op, precond, rho.values.ravel(), tol=tol, max_iter=10 * rho.values.size)
    if not report.converged:
        raise RuntimeError(f"diffusion CG failed: {report.message}")
    return DensityField(x.reshape(shape), mesh)
