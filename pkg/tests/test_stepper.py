import numpy as np
import pytest

from implicitrt.errors import SolverConvergenceError
from implicitrt.grids import (
    KineticField,
    SpatialMesh,
    build_circle_quadrature,
    build_midpoint_quadrature,
)
from implicitrt.operators import (
    CrossSectionModel,
    ParityPair,
    SchemeScalars,
    assemble_parity_rhs,
    dense_assemble,
    update_odd,
)
from implicitrt.stepper import (
    SolverConfig,
    make_initial_state,
    run_simulation,
    step_aniso,
    step_nonsym_gmres,
    step_parity_bdf2,
    step_parity_be,
)
from implicitrt.diagnostics import total_mass, weighted_l2_norm


def setup_1d(nx=10, nv=4, eps=0.7, dt=0.05, seed=0):
    rng = np.random.default_rng(seed)
    mesh = SpatialMesh.interval(0.0, 2.0, nx)
    quad = build_midpoint_quadrature(nv)
    model = CrossSectionModel.isotropic(0.5 + rng.random(nx))
    f0 = KineticField(rng.random((nx, nv)), mesh, quad)
    return mesh, quad, model, f0, rng


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(eps=1.0, dt=0.1, scheme="mystery")
    with pytest.raises(ValueError):
        SolverConfig(eps=1.0, dt=0.1, time_order=3)
    with pytest.raises(ValueError):
        SolverConfig(eps=-1.0, dt=0.1)


def test_scheme_cross_section_compatibility():
    mesh, quad, model, f0, _ = setup_1d()
    aniso = CrossSectionModel.degree_one(quad, model.sigma0)
    cfg = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg")
    state = make_initial_state(f0, cfg)
    with pytest.raises(ValueError):
        step_parity_be(state, aniso, cfg, mesh, quad)
    cfg2 = SolverConfig(eps=0.7, dt=0.05, scheme="aniso_gmres")
    with pytest.raises(ValueError):
        step_aniso(make_initial_state(f0, cfg2), model, cfg2, mesh, quad)


@pytest.mark.parametrize("scheme", ["parity_cg", "nonsym_gmres", "aniso_gmres"])
def test_equilibrium_fixed_point(scheme):
    mesh, quad, model, _, _ = setup_1d()
    if scheme == "aniso_gmres":
        model = CrossSectionModel.degree_one(quad, model.sigma0)
    f0 = KineticField(np.full((10, 4), 1.7), mesh, quad)
    cfg = SolverConfig(eps=0.5, dt=0.2, scheme=scheme, tol=1e-13)
    state, _ = run_simulation(f0, model, cfg, 5 * 0.2, mesh, quad)
    if scheme == "parity_cg":
        values = state.solution.to_full().values
    else:
        values = state.solution.values
    assert np.max(np.abs(values - 1.7)) < 1e-10


def test_parity_be_matches_dense_direct_solve():
    mesh, quad, model, f0, rng = setup_1d()
    cfg = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", tol=1e-13)
    state = step_parity_be(make_initial_state(f0, cfg), model, cfg, mesh, quad)
    scal = SchemeScalars(cfg.eps, cfg.dt)
    A = dense_assemble("A", model, scal, mesh, quad)
    B = dense_assemble("B", model, scal, mesh, quad, parity=True)
    pair0 = ParityPair.from_full(f0)
    b = assemble_parity_rhs(pair0, model, scal, mesh, quad).ravel()
    f_even = np.linalg.solve(A + B, b).reshape(10, quad.n_half)
    f_odd = update_odd(f_even, pair0.f_odd, model, scal, mesh, quad)
    assert np.max(np.abs(f_even - state.solution.f_even)) < 1e-9
    assert np.max(np.abs(f_odd - state.solution.f_odd)) < 1e-9


def test_nonsym_matches_dense_direct_solve():
    mesh, quad, model, f0, _ = setup_1d(nx=8)
    cfg = SolverConfig(eps=0.7, dt=0.05, scheme="nonsym_gmres", tol=1e-13)
    state = step_nonsym_gmres(make_initial_state(f0, cfg), model, cfg, mesh, quad)
    scal = SchemeScalars(cfg.eps, cfg.dt)
    B = dense_assemble("B", model, scal, mesh, quad, parity=False)
    C = dense_assemble("C", model, scal, mesh, quad)
    d = scal.eps2_over_dt * f0.values.ravel()
    want = np.linalg.solve(B + C, d).reshape(8, 4)
    assert np.max(np.abs(want - state.solution.values)) < 1e-9


def test_aniso_matches_dense_direct_solve():
    mesh, quad, model, f0, _ = setup_1d(nx=8, nv=8)
    aniso = CrossSectionModel.degree_one(quad, model.sigma0)
    cfg = SolverConfig(eps=0.7, dt=0.05, scheme="aniso_gmres", tol=1e-13)
    state = step_aniso(make_initial_state(f0, cfg), aniso, cfg, mesh, quad)
    scal = SchemeScalars(cfg.eps, cfg.dt)
    Bs = dense_assemble("B_sigma", aniso, scal, mesh, quad)
    C = dense_assemble("C", aniso, scal, mesh, quad)
    d = scal.eps2_over_dt * f0.values.ravel()
    want = np.linalg.solve(Bs + C, d).reshape(8, 8)
    assert np.max(np.abs(want - state.solution.values)) < 1e-9


@pytest.mark.parametrize("scheme", ["parity_cg", "nonsym_gmres"])
def test_mass_conservation(scheme):
    mesh, quad, model, f0, _ = setup_1d(nx=20, nv=8, seed=3)
    cfg = SolverConfig(eps=0.1, dt=0.02, scheme=scheme, tol=1e-13)
    m0 = total_mass(f0)
    state, _ = run_simulation(f0, model, cfg, 10 * cfg.dt, mesh, quad)
    assert abs(total_mass(state.solution) - m0) < 1e-10 * abs(m0)


def test_mass_conservation_aniso_and_2d():
    mesh, quad, model, f0, _ = setup_1d(nx=16, nv=8, seed=5)
    aniso = CrossSectionModel.degree_one(quad, model.sigma0)
    cfg = SolverConfig(eps=0.1, dt=0.02, scheme="aniso_gmres", tol=1e-13)
    state, _ = run_simulation(f0, aniso, cfg, 5 * cfg.dt, mesh, quad)
    assert abs(total_mass(state.solution) - total_mass(f0)) < 1e-10 * total_mass(f0)

    mesh2 = SpatialMesh.rectangle((0, 1), (0, 1), 8, 8)
    quad2 = build_circle_quadrature(8)
    rng = np.random.default_rng(0)
    f2 = KineticField(1.0 + rng.random((8, 8, 8)), mesh2, quad2)
    sig2 = CrossSectionModel.isotropic(np.ones((8, 8)))
    cfg2 = SolverConfig(eps=1e-2, dt=0.05, scheme="parity_cg", tol=1e-13)
    state2, _ = run_simulation(f2, sig2, cfg2, 5 * cfg2.dt, mesh2, quad2)
    assert abs(total_mass(state2.solution) - total_mass(f2)) < 1e-10 * total_mass(f2)


def test_bdf2_first_step_equals_backward_euler():
    mesh, quad, model, f0, _ = setup_1d()
    cfg2 = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", time_order=2, tol=1e-13)
    cfg1 = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", time_order=1, tol=1e-13)
    s2, _ = run_simulation(f0, model, cfg2, cfg2.dt, mesh, quad)
    s1, _ = run_simulation(f0, model, cfg1, cfg1.dt, mesh, quad)
    assert np.max(np.abs(s2.solution.f_even - s1.solution.f_even)) == 0.0


def test_bdf2_requires_two_levels():
    mesh, quad, model, f0, _ = setup_1d()
    cfg = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", time_order=2)
    state = make_initial_state(f0, cfg)
    with pytest.raises(SolverConvergenceError):
        step_parity_bdf2(state, model, cfg, mesh, quad)


def test_bdf2_second_order_self_convergence():
    nx, nv = 32, 8
    mesh = SpatialMesh.interval(0.0, 2.0, nx)
    quad = build_midpoint_quadrature(nv)
    model = CrossSectionModel.isotropic(np.ones(nx))
    x = mesh.centers(0)
    f0 = KineticField(
        (1.0 + 0.5 * np.sin(np.pi * x))[:, None] * (1.0 + 0.3 * quad.nodes[None, :]),
        mesh, quad,
    )
    sols = []
    for dt in (0.05, 0.025, 0.0125):
        cfg = SolverConfig(eps=1.0, dt=dt, scheme="parity_cg", time_order=2, tol=1e-13)
        st, _ = run_simulation(f0, model, cfg, 0.5, mesh, quad)
        sols.append(st.solution.to_full().values)
    ratio = np.linalg.norm(sols[0] - sols[1]) / np.linalg.norm(sols[1] - sols[2])
    assert 3.5 <= ratio <= 4.5


def test_run_simulation_step_arithmetic():
    mesh, quad, model, f0, _ = setup_1d()
    cfg = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", tol=1e-12)
    state, reports = run_simulation(f0, model, cfg, 0.0, mesh, quad)
    assert state.t == 0.0 and reports == []
    seen = []
    state, reports = run_simulation(
        f0, model, cfg, 3.7 * cfg.dt, mesh, quad,
        observers=[lambda k, t, s, r: seen.append((k, t))],
    )
    assert len(reports) == 4
    assert state.t == pytest.approx(3.7 * cfg.dt, rel=1e-14)
    assert seen[-1][0] == 3
    # last step is the 0.7 dt remainder
    assert seen[-1][1] - seen[-2][1] == pytest.approx(0.7 * cfg.dt, rel=1e-10)


def test_cross_scheme_consistency_under_refinement():
    # the parity elimination uses the compact flux stencil while the full
    # system uses wide centered differences; they are different second-order
    # discretizations of the same implicit equations, so their gap on smooth
    # data shrinks ~4x per spatial refinement at fixed dt
    gaps = []
    for nx in (16, 32, 64):
        mesh = SpatialMesh.interval(0.0, 2.0, nx)
        quad = build_midpoint_quadrature(8)
        model = CrossSectionModel.isotropic(np.ones(nx))
        x = mesh.centers(0)
        f0 = KineticField(
            np.repeat((1.0 + 0.7 * np.sin(np.pi * x))[:, None], 8, axis=1), mesh, quad
        )
        out = {}
        for scheme in ("parity_cg", "nonsym_gmres"):
            cfg = SolverConfig(eps=0.8, dt=0.02, scheme=scheme, tol=1e-13)
            st, _ = run_simulation(f0, model, cfg, 0.1, mesh, quad)
            sol = st.solution.to_full() if scheme == "parity_cg" else st.solution
            out[scheme] = sol.density().values
        gaps.append(np.max(np.abs(out["parity_cg"] - out["nonsym_gmres"])))
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.35)
    assert gaps[1] / gaps[2] == pytest.approx(4.0, rel=0.35)


def test_free_streaming_translation():
    # sigma = 0, eps = 1: the solution translates along characteristics
    errs = []
    for nx, dt in ((100, 0.025), (200, 0.0125)):
        mesh = SpatialMesh.interval(0.0, 2.0, nx)
        quad = build_midpoint_quadrature(4)
        model = CrossSectionModel.isotropic(np.zeros(nx))
        x = mesh.centers(0)
        f0 = KineticField(
            np.repeat((1.0 + np.sin(np.pi * x))[:, None], 4, axis=1), mesh, quad
        )
        cfg = SolverConfig(eps=1.0, dt=dt, scheme="parity_cg", tol=1e-13)
        st, _ = run_simulation(f0, model, cfg, 0.25, mesh, quad)
        got = st.solution.to_full().values
        want = 1.0 + np.sin(np.pi * (x[:, None] - quad.nodes[None, :] * 0.25))
        errs.append(np.max(np.abs(got - want)))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.35)


def test_stability_norm_monotone_quick():
    mesh, quad, model, f0, _ = setup_1d(nx=30, nv=6, seed=8)
    cfg = SolverConfig(eps=1e-2, dt=10 * mesh.spacing[0], scheme="parity_cg", tol=1e-13)
    norms = [weighted_l2_norm(ParityPair.from_full(f0))]
    state, _ = run_simulation(
        f0, model, cfg, 20 * cfg.dt, mesh, quad,
        observers=[lambda k, t, s, r: norms.append(weighted_l2_norm(s.solution))],
    )
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_ap_gap_decreases_with_eps_and_saturates():
    from implicitrt.grids import DensityField
    from implicitrt.reference import diffusion_step_1d
    from implicitrt.diagnostics import rho_distance

    nx, nv = 100, 16
    mesh = SpatialMesh.interval(0.0, 2.0, nx)
    quad = build_midpoint_quadrature(nv)
    x = mesh.centers(0)
    sig = np.where(((x >= 0.35) & (x <= 0.65)) | ((x >= 1.35) & (x <= 1.65)), 0.02, 1.0)
    model = CrossSectionModel.isotropic(sig)
    rho0 = np.where((x > 0.8) & (x < 1.2), 2.0, 0.0)
    f0 = KineticField(np.repeat(rho0[:, None], nv, axis=1), mesh, quad)
    dt = mesh.spacing[0] / 3.0
    t_max = 0.05

    rho_d = DensityField(rho0.copy(), mesh)
    n_steps = int(round(t_max / dt))
    for _ in range(n_steps):
        rho_d = diffusion_step_1d(rho_d, sig, t_max / n_steps, mesh)

    gaps = []
    for eps in (1e-2, 1e-3, 1e-4):
        cfg = SolverConfig(eps=eps, dt=dt, scheme="parity_cg", tol=1e-13)
        st, _ = run_simulation(f0, model, cfg, t_max, mesh, quad)
        gaps.append(rho_distance(st.density(), rho_d))
    assert gaps[0] > gaps[1]
    # saturation at the discretization floor: the last refinement of eps
    # changes the gap by far less than the first
    assert abs(gaps[1] - gaps[2]) < 0.2 * abs(gaps[0] - gaps[1])
    assert gaps[2] > 0.0


def test_warm_start_same_answer():
    mesh, quad, model, f0, _ = setup_1d(seed=4)
    ref_cfg = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", tol=1e-13)
    warm_cfg = SolverConfig(eps=0.7, dt=0.05, scheme="parity_cg", tol=1e-13, warm_start=True)
    s_ref, _ = run_simulation(f0, model, ref_cfg, 5 * 0.05, mesh, quad)
    s_warm, _ = run_simulation(f0, model, warm_cfg, 5 * 0.05, mesh, quad)
    assert np.max(np.abs(s_ref.solution.f_even - s_warm.solution.f_even)) < 1e-9


def test_solver_failure_carries_step_index():
    mesh, quad, model, f0, _ = setup_1d()
    cfg = SolverConfig(eps=1e-5, dt=1.0, scheme="parity_cg", tol=1e-14, max_iter=1)
    with pytest.raises(SolverConvergenceError) as err:
        run_simulation(f0, model, cfg, 3.0, mesh, quad)
    assert "step 0" in str(err.value)
