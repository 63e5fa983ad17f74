"""Galerkin assembly and joint time integration: mass matrix, right-hand
side terms, convergence order, determinism, sweeps."""

from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad as spquad

from epsim.dynamics import (
    ConfigError,
    SimConfig,
    assemble_mass_matrix,
    assemble_rhs,
    build_env,
    initial_state,
    rk4_step,
    simulate,
    sweep_epsilon,
)
from epsim.geometry import Quadrature, build_bases


@pytest.fixture(scope="module")
def setup1():
    quad = Quadrature(1, 13, 10)
    sine, cosine = build_bases(1, 16, quad)
    return quad, sine, cosine


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(eps=-1.0)
    with pytest.raises(ConfigError):
        SimConfig(T=0.0)
    with pytest.raises(ConfigError):
        SimConfig(system="navier_stokes")
    assert SimConfig(eps=0.0).is_reference


def test_mass_matrix_identity(setup1):
    quad, sine, _ = setup1
    M = assemble_mass_matrix(np.ones(quad.n_nodes), sine, quad)
    assert np.abs(M - np.eye(sine.n_modes)).max() <= 1e-12


def test_mass_matrix_entry_oracle(setup1):
    """rho = 1 + 0.1 w_1: M_11 against adaptive quadrature of rho w_1^2
    (closed form 1 + 0.8 sqrt(2) / (3 pi) ~ 1.12004)."""
    quad, sine, _ = setup1
    rho = 1.0 + 0.1 * sine.node_values[0]
    M = assemble_mass_matrix(rho, sine, quad)
    oracle, _ = spquad(
        lambda x: (1.0 + 0.1 * np.sqrt(2) * np.sin(np.pi * x))
        * 2.0 * np.sin(np.pi * x) ** 2, 0.0, 1.0, limit=200)
    assert M[0, 0] == pytest.approx(oracle, abs=1e-12)
    assert M[0, 0] == pytest.approx(1.0 + 0.8 * np.sqrt(2) / (3 * np.pi), abs=1e-12)


def test_mass_matrix_spectrum_bounded_by_density(setup1):
    quad, sine, _ = setup1
    rng = np.random.default_rng(2)
    rho = 1.0 + 0.4 * np.cos(2 * np.pi * quad.nodes[:, 0]) \
        + 0.1 * np.cos(5 * np.pi * quad.nodes[:, 0])
    M = assemble_mass_matrix(rho, sine, quad)
    eigs = np.linalg.eigvalsh(M)
    assert eigs.min() >= rho.min() - 1e-10
    assert eigs.max() <= rho.max() + 1e-10


def test_rest_state_rhs_zero():
    cfg = SimConfig(dim=1, v="none", w="none", psi="none", gamma=1.0,
                    rho0="uniform", u0="zero")
    state, env = initial_state(cfg)
    rhs, _, _, _ = assemble_rhs(state.c, env.quad.nodes, env)
    assert np.abs(rhs).max() <= 1e-12


def test_eps_term_diagonal():
    cfg = SimConfig(dim=1, v="none", w="none", psi="none", gamma=0.0, eps=1e-3,
                    eps_floor=False, poisson_coupling=False, rho0="uniform",
                    u0="modes(1:1.0)", disable_convection=True)
    state, env = initial_state(cfg)
    rhs, _, _, _ = assemble_rhs(state.c, env.quad.nodes, env)
    expected = np.zeros_like(rhs)
    expected[0, 0] = -1e-3 * env.sine.eigenvalues[0]
    assert np.abs(rhs - expected).max() <= 1e-12


def test_convection_term_oracle(setup1):
    """u = w_1, rho = 1: the convection projection int u u' w_i dx against
    adaptive quadrature, each mode."""
    quad, sine, _ = setup1
    cfg = SimConfig(dim=1, v="none", w="none", psi="none", gamma=0.0,
                    poisson_coupling=False, rho0="uniform", u0="zero")
    state, env = initial_state(cfg)
    c = np.zeros((1, sine.n_modes))
    c[0, 0] = 1.0
    rhs, _, _, _ = assemble_rhs(c, env.quad.nodes, env)
    for i in (1, 2, 3, 6):
        def integrand(x, ii=i):
            u = np.sqrt(2) * np.sin(np.pi * x)
            up = np.sqrt(2) * np.pi * np.cos(np.pi * x)
            return -u * up * np.sqrt(2) * np.sin(ii * np.pi * x)
        oracle, _ = spquad(integrand, 0.0, 1.0, limit=200)
        assert rhs[0, i - 1] == pytest.approx(oracle, abs=1e-12)


def test_rest_state_stays_at_rest():
    cfg = SimConfig(dim=1, T=1.0, n_outputs=3, dt_max=0.05, v="none",
                    w="none", psi="none", rho0="uniform", u0="zero")
    traj = simulate(cfg, collect_snapshots=False)
    assert np.abs(traj.final_state.c).max() <= 1e-14
    assert abs(traj.reports[-1].residual) <= 1e-14


def test_steady_balance_forcing_is_steady():
    cfg = SimConfig(dim=1, T=0.5, n_outputs=3, dt_max=0.02,
                    v="quadratic(0.5,0.5)", w="gaussian(0.3,0.5)",
                    rho0="cosine(0.2,2)", u0="zero", forcing="steady_balance")
    traj = simulate(cfg, collect_snapshots=False)
    assert traj.reports[-1].umax <= 1e-12
    assert abs(traj.reports[-1].residual) <= 1e-12


def test_pure_damping_step_closed_form():
    cfg = SimConfig(dim=1, T=0.2, n_outputs=3, dt_max=0.01, v="none",
                    poisson_coupling=False, gamma=2.0, eps=1e-4, eps_floor=False,
                    rho0="uniform", u0="modes(1:0.5,2:0.3)",
                    disable_convection=True, freeze_density=True)
    traj = simulate(cfg, collect_snapshots=False)
    lam = traj.env.sine.eigenvalues
    c0 = np.zeros(16)
    c0[[0, 1]] = [0.5, 0.3]
    expected = c0 * np.exp(-(2.0 + 1e-4 * lam) * 0.2)
    got = traj.final_state.c[0]
    nz = c0 != 0
    assert np.abs((got[nz] - expected[nz]) / expected[nz]).max() <= 1e-9


def test_rk4_global_order():
    """Coefficient error against a fine-dt reference drops ~16x per halving."""
    base = SimConfig(dim=1, T=0.4, n_outputs=2, gamma=1.0,
                     v="quadratic(0.5,0.2)", w="none", psi="none",
                     rho0="cosine(0.15,2)", u0="sine(0.05,1)", dt_max=1e-3)
    ref = simulate(base, collect_snapshots=False).final_state.c

    def err(dt):
        traj = simulate(replace(base, dt_max=dt), collect_snapshots=False)
        return np.abs(traj.final_state.c - ref).max()

    e1, e2 = err(0.02), err(0.01)
    assert e1 / e2 == pytest.approx(16.0, rel=0.20)


def test_cfl_guard_raises():
    from epsim.dynamics import StabilityError

    cfg = SimConfig(dim=1, T=1.0, n_outputs=3, dt_max=0.05, cfl_safety=0.5,
                    v="quadratic(0.5,2.0)", w="none", rho0="cosine(0.2,2)",
                    u0="sine(0.2,1)")
    with pytest.raises(StabilityError):
        simulate(cfg, collect_snapshots=False)


def test_simulate_reports_and_snapshots():
    cfg = SimConfig(dim=1, T=0.3, n_outputs=4, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.1)", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    traj = simulate(cfg)
    assert len(traj.times) == 4 and len(traj.snapshots) == 4
    assert traj.times[-1] == pytest.approx(0.3)
    snap = traj.snapshots[-1]
    assert snap["rho"].shape == (traj.env.quad.n_nodes,)
    assert snap["u"].shape == (1, traj.env.quad.n_nodes)
    e0 = traj.reports[0].total
    assert all(r.residual <= 1e-6 * max(abs(e0), 1.0) for r in traj.reports)


def test_determinism_bitwise():
    cfg = SimConfig(dim=1, T=0.2, n_outputs=3, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.1)", w="quadratic(0.05)",
                    rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    a, b = simulate(cfg), simulate(cfg)
    assert (a.final_state.c == b.final_state.c).all()
    for sa, sb in zip(a.snapshots, b.snapshots):
        assert (sa["rho"] == sb["rho"]).all()
        assert (sa["gradphi"] == sb["gradphi"]).all()


def test_sweep_collects_members_and_failures():
    base = SimConfig(dim=1, T=0.1, n_outputs=2, dt_max=0.01, gamma=1.0,
                     v="none", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    res = sweep_epsilon(base, [0.0])
    assert len(res) == 1 and res[0][2] == "completed"
    # identical eps twice: bitwise identical outputs
    res2 = sweep_epsilon(base, [1e-3, 1e-3])
    ca = res2[0][1].final_state.c
    cb = res2[1][1].final_state.c
    assert (ca == cb).all()
    # a failing member (nonpositive mollified density) is recorded without
    # stopping the sweep
    bad = replace(base, rho0="cosine(1.5,2)")
    res3 = sweep_epsilon(bad, [0.0, 1e-3])
    assert res3[0][2].startswith("failed")
    assert len(res3) == 2


def test_d2_smoke():
    cfg = SimConfig(dim=2, modes=8, panels=7, quad_order=10, T=0.05,
                    n_outputs=2, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.1)", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    traj = simulate(cfg)
    rep = traj.reports[-1]
    m0 = traj.reports[0].mass_field
    assert abs(rep.mass_field - m0) <= 1e-10 * m0
    assert rep.residual <= 1e-8
    assert rep.min_density > 0.0
