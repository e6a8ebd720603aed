"""Spatial meshes, angular quadratures and grid functions.

Conventions used throughout the suite:

* quadrature weights are normalized to sum to one, so the density is the
  plain weighted sum  rho = sum_k w_k f_k  (the 1/2 and 1/(2pi) factors of
  the continuous angular averages live inside the weights);
* all spatial grids are uniform, cell centered and periodic;
* angular node sets are symmetric under direction reversal, and the parity
  map sends every node to its exact floating-point negation.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import TransportError

__all__ = [
    "AngularQuadrature",
    "SpatialMesh",
    "KineticField",
    "DensityField",
    "build_midpoint_quadrature",
    "build_gauss_quadrature",
    "build_circle_quadrature",
    "angular_average",
]


@dataclass(frozen=True)
class AngularQuadrature:
    """Angular nodes, weights and the direction-reversal pairing.

    ``nodes`` holds mu_k in (-1,1) for slab geometry and the angles
    theta_j in [0,2pi) for the circle; in the latter case ``omega`` holds
    the unit direction vectors, mirrored so that
    ``omega[parity_map[j]] == -omega[j]`` exactly.
    """

    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    parity_map: np.ndarray
    omega: np.ndarray = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_half(self):
        return self.n_nodes // 2

    def positive_half(self):
        """Indices of the positive-direction half set.

        1D: mu_k > 0 in ascending order.  2D: theta_j in [0, pi).
        """
        if self.dimension == 1:
            return np.nonzero(self.nodes > 0.0)[0]
        return np.arange(self.n_half)

    def half_weights(self):
        """Weights of the positive half renormalized to sum to one."""
        w = self.weights[self.positive_half()]
        return w / w.sum()

    def directions(self):
        """Direction components as an (n_nodes, dim) array."""
        if self.dimension == 1:
            return self.nodes[:, None]
        return self.omega

    def validate(self):
        """Check the quadrature invariants; raise TransportError on failure."""
        w = self.weights
        if np.any(w <= 0.0):
            raise TransportError("quadrature weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise TransportError("quadrature weights must sum to one")
        p = self.parity_map
        n = self.n_nodes
        if n % 2 != 0:
            raise TransportError("node count must be even for parity pairing")
        if np.any(p[p] != np.arange(n)) or np.any(p == np.arange(n)):
            raise TransportError("parity map must be a fixed-point-free involution")
        d = self.directions()
        if np.any(d[p] != -d):
            raise TransportError("parity map must send nodes to exact negations")
        if self.dimension == 1 and len(np.unique(self.nodes)) != n:
            raise TransportError("nodes must be distinct")
        return self


def _mirrored(positive):
    """Node array (-rev(positive), positive); negation exact by construction."""
    return np.concatenate([-positive[::-1], positive])


def build_midpoint_quadrature(n_nodes):
    """Midpoint rule on a uniform grid over (-1, 1).

    Nodes mu_k = -1 + (k + 1/2) * (2/n), equal weights 1/n; node k pairs
    with node n-1-k.
    """
    if n_nodes < 2 or n_nodes % 2 != 0:
        raise ValueError(f"midpoint quadrature needs an even node count >= 2, got {n_nodes}")
    half = n_nodes // 2
    positive = (2.0 * np.arange(half) + 1.0) / n_nodes
    nodes = _mirrored(positive)
    weights = np.full(n_nodes, 1.0 / n_nodes)
    parity = np.arange(n_nodes)[::-1].copy()
    return AngularQuadrature(1, nodes, weights, parity, None).validate()


def build_gauss_quadrature(n_nodes):
    """Gauss-Legendre nodes on (-1, 1), weights rescaled to sum to one."""
    if n_nodes < 2 or n_nodes % 2 != 0:
        raise ValueError(f"Gauss quadrature needs an even node count >= 2, got {n_nodes}")
    x, w = leggauss(n_nodes)
    half = n_nodes // 2
    # symmetrize so the negative half is the exact mirror of the positive one
    nodes = _mirrored(x[half:])
    weights = np.concatenate([w[half:][::-1], w[half:]])
    weights = weights / weights.sum()
    parity = np.arange(n_nodes)[::-1].copy()
    return AngularQuadrature(1, nodes, weights, parity, None).validate()


def build_circle_quadrature(n_nodes):
    """Uniform angles theta_j = 2 pi j / n on the unit circle, weights 1/n.

    Node j pairs with j + n/2 (mod n); the antipodal direction vectors are
    exact negations by construction.
    """
    if n_nodes < 4 or n_nodes % 2 != 0:
        raise ValueError(f"circle quadrature needs an even node count >= 4, got {n_nodes}")
    half = n_nodes // 2
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    omega_half = np.stack([np.cos(theta[:half]), np.sin(theta[:half])], axis=1)
    omega = np.concatenate([omega_half, -omega_half], axis=0)
    weights = np.full(n_nodes, 1.0 / n_nodes)
    parity = (np.arange(n_nodes) + half) % n_nodes
    return AngularQuadrature(2, theta, weights, parity, omega).validate()


def angular_average(values, quadrature):
    """Weighted angular mean sum_k w_k g_k over the full node set.

    ``values`` may have extra leading axes (cells); the average is taken
    over the last axis.
    """
    values = np.asanyarray(values)
    if values.shape[-1] != quadrature.n_nodes:
        raise ValueError(
            f"expected {quadrature.n_nodes} angular values, got {values.shape[-1]}"
        )
    return values @ quadrature.weights


@dataclass(frozen=True)
class SpatialMesh:
    """Uniform periodic cell-centered grid in one or two dimensions."""

    bounds: tuple
    shape: tuple

    def __post_init__(self):
        for (a, b), n in zip(self.bounds, self.shape):
            if b <= a or n < 1:
                raise ValueError("mesh needs b > a and at least one cell per axis")

    @classmethod
    def interval(cls, a, b, n_x):
        return cls(((float(a), float(b)),), (int(n_x),))

    @classmethod
    def rectangle(cls, bounds_x, bounds_y, n_x, n_y):
        ax, bx = bounds_x
        ay, by = bounds_y
        return cls(
            ((float(ax), float(bx)), (float(ay), float(by))),
            (int(n_x), int(n_y)),
        )

    @property
    def dimension(self):
        return len(self.shape)

    @property
    def spacing(self):
        return tuple((b - a) / n for (a, b), n in zip(self.bounds, self.shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def centers(self, axis=0):
        (a, _), n, h = self.bounds[axis], self.shape[axis], self.spacing[axis]
        return a + (np.arange(n) + 0.5) * h

    def center_grid(self):
        """Cell-center coordinate arrays, meshgrid-style with ij indexing."""
        axes = [self.centers(axis) for axis in range(self.dimension)]
        if self.dimension == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass
class KineticField:
    """Grid function f(x, direction) on the full angular node set."""

    values: np.ndarray
    mesh: SpatialMesh
    quadrature: AngularQuadrature

    def __post_init__(self):
        expected = self.mesh.shape + (self.quadrature.n_nodes,)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} != {expected}")

    def density(self):
        return DensityField(angular_average(self.values, self.quadrature), self.mesh)

    def copy(self):
        return KineticField(self.values.copy(), self.mesh, self.quadrature)

    @classmethod
    def from_function(cls, fn, mesh, quadrature):
        """Sample f(x..., direction components...) at cell centers and nodes."""
        coords = mesh.center_grid()
        dirs = quadrature.directions()
        args = [c[..., None] for c in coords]
        args += [dirs[:, j] for j in range(dirs.shape[1])]
        values = np.broadcast_to(fn(*args), mesh.shape + (quadrature.n_nodes,))
        return cls(np.array(values, dtype=float), mesh, quadrature)


@dataclass
class DensityField:
    """Per-cell scalar density rho(x)."""

    values: np.ndarray
    mesh: SpatialMesh

    def __post_init__(self):
        if self.values.shape != self.mesh.shape:
            raise ValueError(f"density shape {self.values.shape} != {self.mesh.shape}")

    def mass(self):
        return float(self.values.sum() * self.mesh.cell_volume)

    def copy(self):
        return DensityField(self.values.copy(), self.mesh)
