"""Experiment configuration: sectioned key=value files and named presets.

Config file format::

    # comment
    [grid]
    geometry = slab1d          # or planar2d
    domain = 0,2               # planar2d: xa,xb,ya,yb
    nx = 200
    nv = 100
    [physics]
    epsilon = 1e-3
    sigma = vanishing_quartic  # constant:<c> | striped | blocks2d | aniso_degree1:<sigma0>
    initial = box              # box | gaussian2d | constant:<c>
    [solver]
    scheme = parity_cg         # nonsym_gmres | aniso_gmres
    dt = dx_over_3             # or an explicit positive number
    tmax = 0.1
    tol = 1e-10
    max_iter = 50000
    quadrature = midpoint      # gauss | circle (circle is implied in 2D)
    time_order = 1
    [output]
    mode = run                 # condition | bench | ap_sweep
    out_dir = out

Unknown sections or keys are rejected with their line number and the
closest valid key, so typos never silently fall back to defaults.
"""

import difflib
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .grids import (
    KineticField,
    SpatialMesh,
    build_circle_quadrature,
    build_gauss_quadrature,
    build_midpoint_quadrature,
)
from .operators import CrossSectionModel

__all__ = ["ExperimentConfig", "parse_config", "preset_config", "PRESET_NAMES",
           "build_problem"]

_SECTION_KEYS = {
    "grid": {"geometry", "domain", "nx", "ny", "nv"},
    "physics": {"epsilon", "sigma", "initial"},
    "solver": {"scheme", "dt", "tmax", "tol", "max_iter", "quadrature", "time_order"},
    "output": {"mode", "out_dir", "ap_epsilons"},
}

_DEFAULTS = {
    "geometry": "slab1d",
    "domain": (0.0, 2.0),
    "ny": None,
    "scheme": "parity_cg",
    "dt": "dx_over_3",
    "tol": 1e-10,
    "max_iter": 50000,
    "quadrature": "midpoint",
    "time_order": 1,
    "mode": "run",
    "out_dir": "out",
    "ap_epsilons": (1e-1, 1e-2, 1e-3),
}


@dataclass
class ExperimentConfig:
    geometry: str
    domain: tuple
    nx: int
    nv: int
    epsilon: float
    sigma: str
    initial: str
    tmax: float
    ny: int = None
    scheme: str = "parity_cg"
    dt: object = "dx_over_3"
    tol: float = 1e-10
    max_iter: int = 50000
    quadrature: str = "midpoint"
    time_order: int = 1
    mode: str = "run"
    out_dir: str = "out"
    ap_epsilons: tuple = (1e-1, 1e-2, 1e-3)
    preset: str = ""

    def __post_init__(self):
        if self.geometry not in ("slab1d", "planar2d"):
            raise ConfigError(f"geometry must be slab1d or planar2d, got {self.geometry!r}")
        if self.geometry == "planar2d" and self.ny is None:
            self.ny = self.nx
        if self.mode not in ("run", "condition", "bench", "ap_sweep"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.resolved_dt() <= 0.0:
            raise ConfigError("dt must resolve to a positive value")

    @property
    def dx(self):
        if self.geometry == "slab1d":
            a, b = self.domain
            return (b - a) / self.nx
        (ax, bx), _ = self.domain
        return (bx - ax) / self.nx

    def resolved_dt(self):
        if self.dt == "dx_over_3":
            return self.dx / 3.0
        return float(self.dt)

    def echo(self):
        """Stable (key, value) pairs sufficient to re-run bit-identically."""
        pairs = [("version", "0.1.0")]
        if self.preset:
            pairs.append(("preset", self.preset))
        for f in fields(self):
            if f.name == "preset":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            pairs.append((f.name, value))
        pairs.append(("dt_resolved", repr(self.resolved_dt())))
        return pairs


def _suggest(key, valid):
    close = difflib.get_close_matches(key, sorted(valid), n=1)
    return f"; closest valid key is {close[0]!r}" if close else ""


def parse_config(text):
    """Parse the sectioned key=value format into an ExperimentConfig.

    Raises ConfigError with the offending line number for unknown sections,
    unknown keys, type mismatches and missing required keys.
    """
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTION_KEYS:
                raise ConfigError(
                    f"unknown section [{section}]"
                    f"{_suggest(section, _SECTION_KEYS)}", line=lineno
                )
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _SECTION_KEYS[section]:
            all_keys = set().union(*_SECTION_KEYS.values())
            raise ConfigError(
                f"unknown key {key!r} in [{section}]{_suggest(key, all_keys)}",
                line=lineno,
            )
        values[key] = (value, lineno)

    def take(key, converter, required=False):
        if key in values:
            value, lineno = values.pop(key)
            try:
                return converter(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}", line=lineno) from exc
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return _DEFAULTS[key]

    def parse_domain(value):
        parts = [float(p) for p in value.split(",")]
        if len(parts) == 2:
            return (parts[0], parts[1])
        if len(parts) == 4:
            return ((parts[0], parts[1]), (parts[2], parts[3]))
        raise ValueError("domain needs 2 numbers (1D) or 4 (2D)")

    def parse_dt(value):
        if value == "dx_over_3":
            return value
        return float(value)

    geometry = take("geometry", str)
    domain = take("domain", parse_domain) if "domain" in values else (
        _DEFAULTS["domain"] if geometry == "slab1d" else ((0.0, 1.0), (0.0, 1.0))
    )
    cfg = ExperimentConfig(
        geometry=geometry,
        domain=domain,
        nx=take("nx", int, required=True),
        ny=take("ny", int),
        nv=take("nv", int, required=True),
        epsilon=take("epsilon", float, required=True),
        sigma=take("sigma", str, required=True),
        initial=take("initial", str, required=True),
        tmax=take("tmax", float, required=True),
        scheme=take("scheme", str),
        dt=take("dt", parse_dt),
        tol=take("tol", float),
        max_iter=take("max_iter", int),
        quadrature=take("quadrature", str),
        time_order=take("time_order", int),
        mode=take("mode", str),
        out_dir=take("out_dir", str),
        ap_epsilons=take("ap_epsilons", lambda v: tuple(float(p) for p in v.split(","))),
    )
    return cfg


# ---------------------------------------------------------------------------
# named presets reproducing the published example setups

PRESET_NAMES = ("example1", "example2", "example3", "example5", "example6")


def preset_config(name, epsilon=None, tmax=None, out_dir=None, nx=None, nv=None):
    """Experiment presets; example numbering follows the published labels
    (there is no example4)."""
    if name == "example1":
        cfg = ExperimentConfig(
            geometry="slab1d", domain=(0.0, 2.0), nx=200, nv=100,
            epsilon=1e-3, sigma="vanishing_quartic", initial="box",
            tmax=0.1, scheme="parity_cg", preset=name,
        )
    elif name == "example2":
        cfg = ExperimentConfig(
            geometry="slab1d", domain=(0.0, 2.0), nx=200, nv=100,
            epsilon=1e-3, sigma="striped", initial="box",
            tmax=0.1, scheme="parity_cg", preset=name,
        )
    elif name == "example3":
        cfg = ExperimentConfig(
            geometry="slab1d", domain=(0.0, 2.0), nx=200, nv=100,
            epsilon=1e-3, sigma="aniso_degree1:striped", initial="box",
            tmax=0.1, scheme="aniso_gmres", preset=name,
        )
    elif name == "example5":
        cfg = ExperimentConfig(
            geometry="planar2d", domain=((0.0, 1.0), (0.0, 1.0)), nx=80, nv=16,
            epsilon=1e-2, sigma="constant:1", initial="gaussian2d",
            tmax=0.1, scheme="parity_cg", mode="ap_sweep", preset=name,
        )
    elif name == "example6":
        cfg = ExperimentConfig(
            geometry="planar2d", domain=((0.0, 1.0), (0.0, 1.0)), nx=80, nv=10,
            epsilon=1e-4, sigma="blocks2d", initial="gaussian2d",
            tmax=0.1, scheme="parity_cg", preset=name,
        )
    else:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    if epsilon is not None:
        cfg.epsilon = float(epsilon)
    if tmax is not None:
        cfg.tmax = float(tmax)
    if out_dir is not None:
        cfg.out_dir = out_dir
    if nx is not None:
        cfg.nx = int(nx)
        if cfg.geometry == "planar2d":
            cfg.ny = int(nx)
    if nv is not None:
        cfg.nv = int(nv)
    return cfg


# ---------------------------------------------------------------------------
# samplers turning a config into mesh / quadrature / cross section / data

def build_mesh(cfg):
    if cfg.geometry == "slab1d":
        a, b = cfg.domain
        return SpatialMesh.interval(a, b, cfg.nx)
    (ax, bx), (ay, by) = cfg.domain
    return SpatialMesh.rectangle((ax, bx), (ay, by), cfg.nx, cfg.ny)


def build_quadrature(cfg):
    if cfg.geometry == "planar2d":
        return build_circle_quadrature(cfg.nv)
    if cfg.quadrature == "gauss":
        return build_gauss_quadrature(cfg.nv)
    if cfg.quadrature == "midpoint":
        return build_midpoint_quadrature(cfg.nv)
    raise ConfigError(f"unknown quadrature {cfg.quadrature!r}")


def sample_sigma_values(spec, mesh):
    """Per-cell samples of a named cross-section profile."""
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        return np.full(mesh.shape, float(arg or 1.0))
    if kind == "vanishing_quartic":
        x = mesh.centers(0)
        return 100.0 * (x - 1.0) ** 4
    if kind == "striped":
        x = mesh.centers(0)
        out = np.ones_like(x)
        weak = ((x >= 0.35) & (x <= 0.65)) | ((x >= 1.35) & (x <= 1.65))
        out[weak] = 0.02
        return out
    if kind == "blocks2d":
        xg, yg = mesh.center_grid()
        out = np.ones(mesh.shape)
        block = lambda lo, hi: (xg >= lo) & (xg <= hi) & (yg >= lo) & (yg <= hi)
        out[block(0.25, 0.35) | block(0.65, 0.75)] = 0.02
        return out
    raise ConfigError(f"unknown sigma preset {spec!r}")


def build_sigma(cfg, mesh, quadrature):
    kind, _, arg = cfg.sigma.partition(":")
    if kind == "aniso_degree1":
        sigma0 = sample_sigma_values(arg or "constant:1", mesh)
        return CrossSectionModel.degree_one(quadrature, sigma0)
    return CrossSectionModel.isotropic(sample_sigma_values(cfg.sigma, mesh))


def build_initial(cfg, mesh, quadrature):
    kind, _, arg = cfg.initial.partition(":")
    if kind == "box":
        x = mesh.centers(0)
        rho = np.where((x > 0.8) & (x < 1.2), 2.0, 0.0)
        values = np.broadcast_to(rho[:, None], mesh.shape + (quadrature.n_nodes,))
        return KineticField(np.array(values), mesh, quadrature)
    if kind == "gaussian2d":
        xg, yg = mesh.center_grid()
        rho = 1.0 + np.exp(-40.0 * (xg - 0.5) ** 2 - 40.0 * (yg - 0.5) ** 2)
        values = np.broadcast_to(rho[..., None], mesh.shape + (quadrature.n_nodes,))
        return KineticField(np.array(values), mesh, quadrature)
    if kind == "constant":
        values = np.full(mesh.shape + (quadrature.n_nodes,), float(arg or 1.0))
        return KineticField(values, mesh, quadrature)
    raise ConfigError(f"unknown initial preset {cfg.initial!r}")


def build_problem(cfg):
    """(mesh, quadrature, sigma model, initial field) for a config."""
    mesh = build_mesh(cfg)
    quad = build_quadrature(cfg)
    sigma = build_sigma(cfg, mesh, quad)
    f0 = build_initial(cfg, mesh, quad)
    return mesh, quad, sigma, f0
