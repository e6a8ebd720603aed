"""Measurement tools: condition numbers, asymptotic-distance metrics,
weighted norms, mass, and a stability monitor observer."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .grids import (
    DensityField,
    KineticField,
    SpatialMesh,
    build_gauss_quadrature,
    build_midpoint_quadrature,
)
from .krylov import LinearOperatorHandle, pcg_solve
from .operators import (
    CrossSectionModel,
    ParityPair,
    SchemeScalars,
    apply_collision_shift,
    apply_even_elliptic,
)

__all__ = [
    "ConditionReport",
    "condition_number",
    "condition_sweep",
    "symmetric_extremes",
    "ap_distance_f_rho",
    "rho_distance",
    "weighted_l2_norm",
    "total_mass",
    "StabilityMonitor",
]

DT_SWEEP_RULES = ("dx_over_3", "dx", "1e-2", "1e-1", "1")


@dataclass
class ConditionReport:
    operator: str
    n_x: int
    n_v: int
    eps: float
    dt: float
    lambda_min: float
    lambda_max: float
    kappa: float
    method: str
    note: str = ""


def symmetric_extremes(apply, n, method="dense", tol=1e-9, sample=None):
    """Extreme eigenvalues of a symmetric operator given by its action.

    ``dense`` applies the operator to every basis vector and calls a dense
    symmetric eigensolver.  ``iterative`` runs Lanczos for the largest
    eigenvalue and Lanczos on the CG-inverted operator for the smallest.
    """
    if method == "dense":
        mat = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            mat[:, j] = apply(e)
            e[j] = 0.0
        mat = 0.5 * (mat + mat.T)
        ev = np.linalg.eigvalsh(mat)
        return float(ev[0]), float(ev[-1])
    if method != "iterative":
        raise ValueError(f"unknown method {method!r}")
    linop = spla.LinearOperator((n, n), matvec=apply)
    v0 = sample if sample is not None else np.ones(n)
    lam_max = float(spla.eigsh(linop, k=1, which="LA", tol=tol, v0=v0,
                               return_eigenvectors=False)[0])

    op = LinearOperatorHandle(apply, n)

    def inv_apply(v):
        x, report = pcg_solve(op, None, v, tol=1e-12, max_iter=50 * n)
        return x

    inv = spla.LinearOperator((n, n), matvec=inv_apply)
    inv_max = float(spla.eigsh(inv, k=1, which="LA", tol=tol, v0=v0,
                               return_eigenvectors=False)[0])
    return 1.0 / inv_max, lam_max


def _parity_system(n_x, n_v, eps, dt, sigma_values, domain, quadrature_kind):
    mesh = SpatialMesh.interval(domain[0], domain[1], n_x)
    build = build_gauss_quadrature if quadrature_kind == "gauss" else build_midpoint_quadrature
    quad = build(n_v)
    if sigma_values is None:
        sigma_values = np.ones(n_x)
    sigma = CrossSectionModel.isotropic(sigma_values)
    scalars = SchemeScalars(eps, dt)
    shape = (n_x, quad.n_half)
    w = np.broadcast_to(quad.half_weights(), shape).ravel()
    sqrt_w = np.sqrt(w)

    def ab_apply(g):
        out = apply_even_elliptic(g, sigma, scalars, mesh, quad)
        out += apply_collision_shift(g, sigma.sigma0, scalars, quad)
        return out

    def ab_sym(flat):
        # W^(1/2) (A+B) W^(-1/2): Euclidean-symmetric version
        g = (flat / sqrt_w).reshape(shape)
        return ab_apply(g).ravel() * sqrt_w

    a = scalars.eps2_over_dt
    sig_cells = sigma.sigma0[:, None]
    w_half = quad.half_weights()

    def b_halfpower(g, power):
        mean = (g @ w_half)[..., None]
        return (a ** power) * mean + ((a + sig_cells) ** power) * (g - mean)

    def precond_sym(flat):
        # W^(1/2) B^(-1/2) (A+B) B^(-1/2) W^(-1/2): shares the spectrum of
        # B^{-1}(A+B) and is Euclidean-symmetric
        g = (flat / sqrt_w).reshape(shape)
        g = b_halfpower(g, -0.5)
        g = ab_apply(g)
        g = b_halfpower(g, -0.5)
        return g.ravel() * sqrt_w

    return ab_sym, precond_sym, shape


def condition_number(which, n_x, n_v, eps, dt, sigma_values=None,
                     domain=(0.0, 2.0), method="dense", cap=4096,
                     quadrature_kind="midpoint"):
    """Condition number of the even-parity system or its preconditioned form.

    ``which`` is 'A_plus_B' or 'precond_system'; the latter measures
    B^{-1} A + I in the inner product where it is symmetric.  The dense
    method assembles the symmetrized operator (refusing above ``cap`` rows);
    the iterative method uses Lanczos extremes with a CG-backed inverse.
    """
    ab_sym, precond_sym, shape = _parity_system(
        n_x, n_v, eps, dt, sigma_values, domain, quadrature_kind
    )
    n = int(np.prod(shape))
    if method == "dense" and n > cap:
        raise ValueError(f"dense condition path needs n <= {cap}, got {n}")
    apply = {"A_plus_B": ab_sym, "precond_system": precond_sym}.get(which)
    if apply is None:
        raise ValueError(f"which must be 'A_plus_B' or 'precond_system', got {which!r}")
    lam_min, lam_max = symmetric_extremes(apply, n, method=method)
    note = ""
    if lam_min <= 1e-14 * lam_max:
        note = "numerically singular: lambda_min below 1e-14 * lambda_max"
        kappa = np.inf
    else:
        kappa = lam_max / lam_min
    return ConditionReport(
        which, n_x, n_v, eps, dt, lam_min, lam_max, float(kappa),
        {"dense": "dense", "iterative": "iterative-extremes"}[method],
        note,
    )


def resolve_dt_rule(rule, dx):
    if rule == "dx_over_3":
        return dx / 3.0
    if rule == "dx":
        return dx
    return float(rule)


def condition_sweep(which, n_x_list, n_v_list, eps, domain=(0.0, 2.0),
                    dt_rules=DT_SWEEP_RULES, method="dense", cap=4096):
    """Condition reports over the documented dt calibration sweep.

    The tables this reproduces omit dt; the sweep covers
    {dx/3, dx, 1e-2, 1e-1, 1} and callers pick the best-matching rule.
    """
    reports = []
    for rule in dt_rules:
        for n_x in n_x_list:
            dx = (domain[1] - domain[0]) / n_x
            dt = resolve_dt_rule(rule, dx)
            for n_v in n_v_list:
                rep = condition_number(
                    which, n_x, n_v, eps, dt, domain=domain, method=method, cap=cap
                )
                reports.append((rule, rep))
    return reports


# ---------------------------------------------------------------------------
# distance metrics, norms, mass

def _as_full_field(obj):
    if isinstance(obj, ParityPair):
        return obj.to_full()
    if isinstance(obj, KineticField):
        return obj
    raise TypeError(f"expected a kinetic field or parity pair, got {type(obj)}")


def ap_distance_f_rho(field):
    """l2 distance between f and its angular mean:

    sqrt( sum_cells sum_nodes |f - rho|^2 * cell_volume * d_angle )

    with d_angle = 2/n_v in slab geometry and 2 pi/n_v on the circle.
    """
    field = _as_full_field(field)
    quad = field.quadrature
    d_angle = (2.0 if quad.dimension == 1 else 2.0 * np.pi) / quad.n_nodes
    rho = field.density().values[..., None]
    gap2 = np.sum((field.values - rho) ** 2)
    return float(np.sqrt(gap2 * field.mesh.cell_volume * d_angle))


def rho_distance(rho_a, rho_b):
    """Weighted l2 distance between two densities on the same mesh."""
    if rho_a.mesh != rho_b.mesh:
        raise ValueError("densities live on different meshes")
    gap2 = np.sum((rho_a.values - rho_b.values) ** 2)
    return float(np.sqrt(gap2 * rho_a.mesh.cell_volume))


def weighted_l2_norm(obj):
    """sqrt( sum_cells sum_nodes w_k f^2 * cell_volume ).

    Parity pairs are measured without reconstructing the full field:
    the even/odd split is orthogonal, so the squared norm is the half-set
    weighted sum of f_even^2 + f_odd^2.
    """
    if isinstance(obj, ParityPair):
        w = obj.quadrature.half_weights()
        total = np.sum((obj.f_even**2 + obj.f_odd**2) @ w)
        return float(np.sqrt(total * obj.mesh.cell_volume))
    if isinstance(obj, KineticField):
        total = np.sum(obj.values**2 @ obj.quadrature.weights)
        return float(np.sqrt(total * obj.mesh.cell_volume))
    raise TypeError(f"expected a kinetic field or parity pair, got {type(obj)}")


def total_mass(obj):
    """Integral of the density over the periodic domain."""
    if isinstance(obj, DensityField):
        return obj.mass()
    if isinstance(obj, (KineticField, ParityPair)):
        return obj.density().mass()
    raise TypeError(f"expected a density, kinetic field or parity pair, got {type(obj)}")


class StabilityMonitor:
    """Observer recording the weighted norm and mass after every step.

    Flags any step whose norm exceeds the previous one by more than the
    allowed relative slack (solver tolerance noise).
    """

    def __init__(self, rtol=1e-12):
        self.rtol = rtol
        self.records = []
        self.flags = []
        self._last_norm = None

    def __call__(self, step, t, state, report):
        norm = weighted_l2_norm(state.solution)
        mass = total_mass(state.solution)
        self.records.append({"step": step, "t": t, "norm": norm, "mass": mass})
        if self._last_norm is not None and norm > self._last_norm * (1.0 + self.rtol):
            self.flags.append(step)
        self._last_norm = norm

    def seed(self, state):
        """Record the initial norm so the first step is checked too."""
        self._last_norm = weighted_l2_norm(state if not hasattr(state, "solution") else state.solution)
        return self
