"""Matrix-free fully implicit solvers for linear kinetic transport with
diffusive scaling: an even/odd parity PCG path with a spectral collision
preconditioner, non-symmetric and anisotropic GMRES variants, reference
solvers, classical iteration baselines, and measurement tools."""

from .grids import (
    AngularQuadrature,
    DensityField,
    KineticField,
    SpatialMesh,
    angular_average,
    build_circle_quadrature,
    build_gauss_quadrature,
    build_midpoint_quadrature,
)
from .krylov import (
    KrylovReport,
    LinearOperatorHandle,
    cg_self_adjoint_solve,
    gmres_solve,
    pcg_solve,
)
from .operators import (
    CrossSectionModel,
    ParityPair,
    SchemeScalars,
    apply_aniso_projector,
    apply_aniso_shift,
    apply_aniso_shift_inverse,
    apply_collision_shift,
    apply_collision_shift_inverse,
    apply_even_elliptic,
    apply_streaming,
    assemble_parity_rhs,
    dense_assemble,
    update_odd,
)
from .stepper import (
    SimulationState,
    SolverConfig,
    run_simulation,
    step_aniso,
    step_nonsym_gmres,
    step_parity_bdf2,
    step_parity_be,
)

__version__ = "0.1.0"
