"""Matrix-free discrete operators for the implicit transport schemes.

Everything here acts on plain numpy arrays shaped (cells..., n_angular).
Parity-path operators live on the positive-direction half of the node set
with the angular mean renormalized over that half; full-set operators are
used by the non-symmetric and anisotropic paths.

All applications are pure: inputs are read-only and outputs are freshly
allocated, so per-cell collision work and per-node stencil rows can be
evaluated concurrently by callers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularOperatorError, StiffLimitError
from .grids import AngularQuadrature, KineticField, SpatialMesh, angular_average

__all__ = [
    "ParityPair",
    "CrossSectionModel",
    "SchemeScalars",
    "apply_even_elliptic",
    "apply_collision_shift",
    "apply_collision_shift_inverse",
    "assemble_parity_rhs",
    "update_odd",
    "apply_streaming",
    "apply_aniso_projector",
    "apply_aniso_shift",
    "apply_aniso_shift_inverse",
    "dense_assemble",
]


@dataclass(frozen=True)
class SchemeScalars:
    """Knudsen number and time step with the derived per-cell coefficients."""

    eps: float
    dt: float

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def eps2_over_dt(self):
        return self.eps**2 / self.dt

    def even_diffusion(self, sigma):
        """eps^2 dt / (eps^2 + sigma dt); finite for sigma >= 0."""
        return self.eps**2 * self.dt / (self.eps**2 + sigma * self.dt)

    def odd_relax(self, sigma):
        """eps^2 / (eps^2 + sigma dt)."""
        return self.eps**2 / (self.eps**2 + sigma * self.dt)

    def odd_rhs_coeff(self, sigma):
        """eps dt / (eps^2 + sigma dt)."""
        return self.eps * self.dt / (self.eps**2 + sigma * self.dt)

    def with_dt(self, dt):
        return SchemeScalars(self.eps, dt)


@dataclass(frozen=True)
class CrossSectionModel:
    """Scattering cross section, either isotropic sigma(x) or an anisotropic
    low-rank kernel sigma0(x) * sigma(mu.mu') given in pre-diagonalized form.

    For the anisotropic kind, ``kernel_eigenvectors`` rows are orthonormal in
    the w-weighted inner product and the first pair is (1, constant vector);
    the kernel applications never touch raw kernel samples.
    """

    kind: str
    sigma0: np.ndarray
    kernel_eigenvalues: np.ndarray = None
    kernel_eigenvectors: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("isotropic", "anisotropic"):
            raise ValueError(f"unknown cross-section kind {self.kind!r}")
        if np.any(self.sigma0 < 0.0):
            raise ValueError("cross-section values must be nonnegative")

    @classmethod
    def isotropic(cls, values):
        return cls("isotropic", np.array(values, dtype=float))

    @classmethod
    def degree_one(cls, quadrature, sigma0):
        """Anisotropic kernel 1 + mu.mu' with spatial prefactor sigma0(x).

        The discrete eigendata are built from the quadrature moments so that
        the low-rank projector reproduces the quadrature sum of the kernel
        integral exactly: xi_2 = <mu^2>_w with eigenvector mu/sqrt(<mu^2>_w).
        """
        if quadrature.dimension != 1:
            raise ValueError("degree-one kernel is defined for slab geometry only")
        mu = quadrature.nodes
        w = quadrature.weights
        mu2 = float(w @ mu**2)
        ones = np.ones_like(mu)
        vectors = np.stack([ones, mu / np.sqrt(mu2)])
        eigenvalues = np.array([1.0, mu2])
        model = cls(
            "anisotropic",
            np.array(sigma0, dtype=float),
            eigenvalues,
            vectors,
        )
        model.validate_kernel(quadrature)
        return model

    def validate_kernel(self, quadrature):
        xi, vecs = self.kernel_eigenvalues, self.kernel_eigenvectors
        w = quadrature.weights
        if xi is None or vecs is None:
            raise ValueError("anisotropic model needs kernel eigenpairs")
        if xi[0] != 1.0 or np.any(np.abs(xi[1:]) >= 1.0):
            raise ValueError("kernel eigenvalues must satisfy xi_1 = 1, |xi_m| < 1")
        gram = (vecs * w) @ vecs.T
        if not np.allclose(gram, np.eye(len(xi)), atol=1e-12):
            raise ValueError("kernel eigenvectors must be w-orthonormal")
        if np.ptp(vecs[0]) != 0.0:
            raise ValueError("leading kernel eigenvector must be constant")
        return self


@dataclass
class ParityPair:
    """Even/odd split of a kinetic field stored on the positive-direction
    half of the quadrature: f = f_even + f_odd on positive directions and
    f = f_even - f_odd on their negations.

    Unlike stiff-splitting formulations, the odd part carries no 1/eps
    factor.
    """

    f_even: np.ndarray
    f_odd: np.ndarray
    mesh: SpatialMesh
    quadrature: AngularQuadrature

    def __post_init__(self):
        expected = self.mesh.shape + (self.quadrature.n_half,)
        if self.f_even.shape != expected or self.f_odd.shape != expected:
            raise ValueError(f"parity components must have shape {expected}")

    @classmethod
    def from_full(cls, field):
        quad = field.quadrature
        pos = quad.positive_half()
        neg = quad.parity_map[pos]
        f_pos = field.values[..., pos]
        f_neg = field.values[..., neg]
        return cls(
            0.5 * (f_pos + f_neg),
            0.5 * (f_pos - f_neg),
            field.mesh,
            quad,
        )

    def to_full(self):
        quad = self.quadrature
        pos = quad.positive_half()
        neg = quad.parity_map[pos]
        values = np.empty(self.mesh.shape + (quad.n_nodes,))
        values[..., pos] = self.f_even + self.f_odd
        values[..., neg] = self.f_even - self.f_odd
        return KineticField(values, self.mesh, quad)

    def density(self):
        from .grids import DensityField

        return DensityField(self.f_even @ self.quadrature.half_weights(), self.mesh)

    def copy(self):
        return ParityPair(self.f_even.copy(), self.f_odd.copy(), self.mesh, self.quadrature)


# ---------------------------------------------------------------------------
# spatial stencil helpers (periodic, uniform)

def _face_average(c, axis=0):
    """Arithmetic mean of adjacent cell values; entry i is the face i+1/2."""
    return 0.5 * (c + np.roll(c, -1, axis=axis))


def _center_diff(g, dx, axis=0):
    """(g_{i+1} - g_{i-1}) / (2 dx), periodic."""
    return (np.roll(g, -1, axis=axis) - np.roll(g, 1, axis=axis)) / (2.0 * dx)


def _flux_div(f, coef, dx, axis=0):
    """Flux-form -d/dx(coef d/dx f) with face-averaged coefficient."""
    cf = _face_average(coef, axis=axis)
    jump = np.roll(f, -1, axis=axis) - f
    flux = cf * jump
    return -(flux - np.roll(flux, 1, axis=axis)) / dx**2


def _resolve_weights(values, quadrature):
    """Full weights or renormalized half weights, by trailing extent."""
    n = values.shape[-1]
    if n == quadrature.n_nodes:
        return quadrature.weights
    if n == quadrature.n_half:
        return quadrature.half_weights()
    raise ValueError(
        f"angular extent {n} matches neither the full ({quadrature.n_nodes}) "
        f"nor the half ({quadrature.n_half}) node set"
    )


def _per_cell(sigma_values, values):
    """Broadcast per-cell sigma against (cells..., n_angular) values."""
    sig = np.asanyarray(sigma_values, dtype=float)
    if sig.ndim == 0:
        return sig
    return sig[..., None]


# ---------------------------------------------------------------------------
# parity-path operators

def apply_even_elliptic(f_even, sigma, scalars, mesh, quadrature):
    """Even-parity elliptic operator on the half node set.

    1D: -d/dx( D(x) mu_k^2 d/dx f ), D = eps^2 dt / (eps^2 + sigma dt),
    in flux form with arithmetic face averages of D.  2D: the analogous
    -Omega.grad( D Omega.grad f ) with flux-form pure second derivatives
    and a symmetric centered discretization of the mixed term that reduces
    to the standard four-corner stencil for constant D.
    """
    if sigma.kind != "isotropic":
        raise ValueError(
            "the even-parity path supports isotropic scattering only; "
            "use the anisotropic non-symmetric path"
        )
    diff = scalars.even_diffusion(sigma.sigma0)
    if mesh.dimension == 1:
        mu = quadrature.nodes[quadrature.positive_half()]
        (dx,) = mesh.spacing
        return mu**2 * _flux_div(f_even, diff[:, None], dx, axis=0)

    dx, dy = mesh.spacing
    omega = quadrature.omega[quadrature.positive_half()]
    xi, eta = omega[:, 0], omega[:, 1]
    d = diff[:, :, None]
    out = xi**2 * _flux_div(f_even, d, dx, axis=0)
    out += eta**2 * _flux_div(f_even, d, dy, axis=1)
    # mixed term: -(D_x(c D_y f) + D_y(c D_x f)) with centered first
    # differences keeps the operator symmetric for variable coefficients
    gx = _center_diff(f_even, dx, axis=0)
    gy = _center_diff(f_even, dy, axis=1)
    mixed = _center_diff(d * gy, dx, axis=0) + _center_diff(d * gx, dy, axis=1)
    out -= xi * eta * mixed
    return out


def apply_collision_shift(values, sigma_values, scalars, quadrature):
    """(eps^2/dt + sigma) g - sigma (P g) 1 with P the weighted angular mean.

    Works on the full node set or on the parity half set (the mean is then
    renormalized over the half).  ``sigma_values`` is a scalar for a single
    cell or a per-cell array matching the leading axes of ``values``.
    """
    if np.any(np.asanyarray(sigma_values) < 0.0):
        raise ValueError("sigma must be nonnegative")
    w = _resolve_weights(values, quadrature)
    sig = _per_cell(sigma_values, values)
    mean = (values @ w)[..., None]
    return (scalars.eps2_over_dt + sig) * values - sig * mean


def apply_collision_shift_inverse(values, sigma_values, scalars, quadrature):
    """Inverse collision shift in O(n_angular) per cell.

    Splits g into its weighted mean and the fluctuation; the mean is divided
    by eps^2/dt and the fluctuation by eps^2/dt + sigma.  One weighted
    reduction plus one axpy pass, no dense matrix.
    """
    if np.any(np.asanyarray(sigma_values) < 0.0):
        raise ValueError("sigma must be nonnegative")
    a = scalars.eps2_over_dt
    if a == 0.0:
        raise StiffLimitError(
            "eps^2/dt underflowed to zero; use the diffusion-limit solver"
        )
    w = _resolve_weights(values, quadrature)
    sig = _per_cell(sigma_values, values)
    mean = (values @ w)[..., None]
    return mean / a + (values - mean) / (a + sig)


def assemble_parity_rhs(pair, sigma, scalars, mesh, quadrature):
    """Right-hand side of the even-parity solve:

    (eps^2/dt) [ f_even^n - Omega.grad( eps dt / (eps^2 + sigma dt) f_odd^n ) ]

    with centered periodic differences.
    """
    coeff = scalars.odd_rhs_coeff(sigma.sigma0)
    if mesh.dimension == 1:
        mu = quadrature.nodes[quadrature.positive_half()]
        (dx,) = mesh.spacing
        grad = mu * _center_diff(coeff[:, None] * pair.f_odd, dx, axis=0)
    else:
        dx, dy = mesh.spacing
        omega = quadrature.omega[quadrature.positive_half()]
        g = coeff[:, :, None] * pair.f_odd
        grad = omega[:, 0] * _center_diff(g, dx, axis=0)
        grad += omega[:, 1] * _center_diff(g, dy, axis=1)
    return scalars.eps2_over_dt * (pair.f_even - grad)


def update_odd(f_even_new, f_odd_old, sigma, scalars, mesh, quadrature):
    """Odd-parity update once the new even part is known:

    f_odd^{n+1} = eps^2/(eps^2 + sigma dt) (f_odd^n - (dt/eps) Omega.grad f_even^{n+1})
    """
    relax = scalars.odd_relax(sigma.sigma0)
    ratio = scalars.dt / scalars.eps
    if mesh.dimension == 1:
        mu = quadrature.nodes[quadrature.positive_half()]
        (dx,) = mesh.spacing
        grad = mu * _center_diff(f_even_new, dx, axis=0)
        return relax[:, None] * (f_odd_old - ratio * grad)
    dx, dy = mesh.spacing
    omega = quadrature.omega[quadrature.positive_half()]
    grad = omega[:, 0] * _center_diff(f_even_new, dx, axis=0)
    grad += omega[:, 1] * _center_diff(f_even_new, dy, axis=1)
    return relax[:, :, None] * (f_odd_old - ratio * grad)


# ---------------------------------------------------------------------------
# full-node-set operators (non-symmetric and anisotropic paths)

def apply_streaming(values, scalars, mesh, quadrature):
    """eps Omega.grad with centered periodic differences, full node set."""
    if mesh.dimension == 1:
        mu = quadrature.nodes
        (dx,) = mesh.spacing
        return scalars.eps * mu * _center_diff(values, dx, axis=0)
    dx, dy = mesh.spacing
    omega = quadrature.omega
    out = omega[:, 0] * _center_diff(values, dx, axis=0)
    out += omega[:, 1] * _center_diff(values, dy, axis=1)
    return scalars.eps * out


def apply_aniso_projector(values, sigma, quadrature):
    """Low-rank kernel projection sum_m xi_m (v_m, g)_w v_m.

    For an isotropic model this is the plain weighted mean embedded as a
    constant sequence.
    """
    if sigma.kind == "isotropic":
        mean = angular_average(values, quadrature)
        return np.broadcast_to(mean[..., None], values.shape).copy()
    w = quadrature.weights
    xi = sigma.kernel_eigenvalues
    vecs = sigma.kernel_eigenvectors
    coeffs = values @ (w * vecs).T
    return (coeffs * xi) @ vecs


def apply_aniso_shift(values, sigma0_values, sigma, scalars, quadrature):
    """(eps^2/dt + sigma0) g - sigma0 P^sigma g."""
    sig = _per_cell(sigma0_values, values)
    proj = apply_aniso_projector(values, sigma, quadrature)
    return (scalars.eps2_over_dt + sig) * values - sig * proj


def apply_aniso_shift_inverse(values, sigma0_values, sigma, scalars, quadrature):
    """Inverse of the anisotropic collision shift via the kernel eigenpairs.

    Components along the kernel eigenvectors are divided by
    eps^2/dt + sigma0 (1 - xi_m); the orthogonal remainder is divided by
    eps^2/dt + sigma0.
    """
    if sigma.kind != "anisotropic":
        return apply_collision_shift_inverse(values, sigma0_values, scalars, quadrature)
    a = scalars.eps2_over_dt
    if a == 0.0:
        raise StiffLimitError(
            "eps^2/dt underflowed to zero; use the diffusion-limit solver"
        )
    w = quadrature.weights
    xi = sigma.kernel_eigenvalues
    vecs = sigma.kernel_eigenvectors
    sig = np.asanyarray(sigma0_values, dtype=float)
    lam = a + np.multiply.outer(sig, 1.0 - xi)  # (cells..., k)
    lam_perp = a + sig
    if np.any(lam == 0.0) or np.any(lam_perp == 0.0):
        raise SingularOperatorError("collision-shift eigenvalue vanished")
    coeffs = values @ (w * vecs).T  # (cells..., k)
    perp = values - coeffs @ vecs
    if sig.ndim == 0:
        return (coeffs / lam) @ vecs + perp / lam_perp
    return (coeffs / lam) @ vecs + perp / lam_perp[..., None]


# ---------------------------------------------------------------------------
# dense assembly (oracle and condition-number tool)

def dense_assemble(which, sigma, scalars, mesh, quadrature, parity=None, cap=4096):
    """Explicit matrix of a matrix-free operator, column by column.

    ``which`` is one of 'A', 'B', 'C', 'B_sigma'.  'A' always lives on the
    parity half set, 'C' and 'B_sigma' on the full set; 'B' defaults to the
    half set ('parity' overrides).  Refuses above ``cap`` rows.
    """
    which = which.upper()
    if which == "A":
        parity = True
    elif which in ("C", "B_SIGMA"):
        parity = False
    elif parity is None:
        parity = True
    n_ang = quadrature.n_half if parity else quadrature.n_nodes
    n = int(np.prod(mesh.shape)) * n_ang
    if n > cap:
        raise ValueError(f"dense assembly of {n} rows exceeds the cap of {cap}")

    shape = mesh.shape + (n_ang,)

    def apply(flat):
        g = flat.reshape(shape)
        if which == "A":
            return apply_even_elliptic(g, sigma, scalars, mesh, quadrature)
        if which == "B":
            return apply_collision_shift(g, sigma.sigma0, scalars, quadrature)
        if which == "C":
            return apply_streaming(g, scalars, mesh, quadrature)
        if which == "B_SIGMA":
            return apply_aniso_shift(g, sigma.sigma0, sigma, scalars, quadrature)
        raise ValueError(f"unknown operator {which!r}")

    mat = np.empty((n, n))
    basis = np.zeros(n)
    for j in range(n):
        basis[j] = 1.0
        mat[:, j] = apply(basis).ravel()
        basis[j] = 0.0
    return mat
