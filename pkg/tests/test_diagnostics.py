"""Energy reports, relative energy, Gronwall fits and identification
residuals."""

from dataclasses import replace

import numpy as np
import pytest

from epsim.diagnostics import (
    alignment_discarded_term,
    gronwall_check,
    i1_interaction_bound,
    identification_residuals,
    kinetic_decay_check,
    relative_energy,
    relative_energy_fields,
    residuals_decreasing,
    total_energy,
)
from epsim.dynamics import SimConfig, initial_state, simulate


def test_rest_energy_zero():
    cfg = SimConfig(dim=1, v="none", w="none", psi="none",
                    rho0="uniform", u0="zero")
    state, env = initial_state(cfg)
    env.E0 = 0.0
    rep = total_energy(state, env)
    assert abs(rep.total) <= 1e-30 and abs(rep.residual) <= 1e-30


def test_poisson_energy_value():
    """rho = 1 + cos(2 pi x), u = 0, V = W = 0: E = 1/(16 pi^2)."""
    cfg = SimConfig(dim=1, v="none", w="none", psi="none",
                    rho0="cosine(1.0,2)", u0="zero", floor=1e-6)
    state, env = initial_state(cfg)
    env.E0 = 0.0
    rep = total_energy(state, env)
    assert rep.kinetic == 0.0
    assert rep.poisson == pytest.approx(1.0 / (16 * np.pi**2), rel=1e-10)
    assert rep.total == pytest.approx(1.0 / (16 * np.pi**2), rel=1e-10)


def test_relative_energy_identical_states():
    cfg = SimConfig(dim=1, T=0.2, n_outputs=3, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.1)", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    a = simulate(cfg)
    b = simulate(cfg)
    rel = relative_energy(a.final_state, a.env, b.final_state, b.env)
    assert rel.total <= 1e-28
    # same through the persisted-field path
    rel2 = relative_energy_fields(a.snapshots[-1], b.snapshots[-1],
                                  a.env.quad, a.env.sine, cfg.gamma)
    assert rel2.total <= 1e-28


def test_relative_energy_kinetic_part_orthonormal():
    """u - U = w_1 with rho = 1 gives kinetic part exactly 1/2."""
    cfg = SimConfig(dim=1, v="none", w="none", psi="none",
                    poisson_coupling=False, rho0="uniform", u0="zero")
    sa, env_a = initial_state(cfg)
    sb, env_b = initial_state(cfg)
    sa.c = sa.c.copy()
    sa.c[0, 0] = 1.0
    rel = relative_energy(sa, env_a, sb, env_b)
    assert rel.kinetic_part == pytest.approx(0.5, rel=1e-12)
    assert rel.field_part == 0.0
    assert rel.total == pytest.approx(0.5, rel=1e-12)


def test_relative_energy_field_part_and_trace_bound():
    cfg = SimConfig(dim=1, T=0.3, n_outputs=3, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.05)", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    mv = simulate(replace(cfg, eps=1e-3))
    ref = simulate(cfg)
    rel = relative_energy(mv.final_state, mv.env, ref.final_state, ref.env)
    assert rel.kinetic_part >= 0.0 and rel.field_part >= 0.0
    assert rel.total >= rel.kinetic_part and rel.total >= rel.field_part
    assert rel.trace_bound_ok
    # field part equals the quadrature of the gradient difference
    dg = (mv.final_state.cache.potential.grad_nodes
          - ref.final_state.cache.potential.grad_nodes)
    direct = 0.5 * float(np.dot(mv.env.quad.weights, (dg**2).sum(axis=0)))
    assert rel.field_part == pytest.approx(direct, rel=1e-12)


def test_gronwall_degenerate_and_decay():
    fit = gronwall_check([0.0, 0.5, 1.0], [0.0, 0.0, 0.0], gradU_sup=1.0)
    assert fit.degenerate and fit.passed
    # damping-only: E_rel = e^{-2 gamma t} decays, slope <= 0 <= bound
    t = np.linspace(0, 1, 11)
    fit = gronwall_check(t, np.exp(-2 * t), gradU_sup=0.0)
    assert fit.slope == pytest.approx(-2.0, rel=1e-10)
    assert fit.passed and not fit.degenerate
    # a rate above the admissible constant fails
    fit = gronwall_check(t, np.exp(10 * t), gradU_sup=0.5, c_fit=4.0)
    assert not fit.passed


def test_identification_residuals_zero_for_identity():
    cfg = SimConfig(dim=1, T=0.2, n_outputs=3, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.1)", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    traj = simulate(cfg)
    snap = traj.snapshots[-1]
    rows = identification_residuals([(0.0, snap)], snap, traj.env.quad)
    assert all(v == 0.0 for k, v in rows[0].items() if k != "eps")


def test_residuals_decreasing_helper():
    rows = [{"eps": 1e-2, **{k: 3.0 for k in
                             ("res_rho_l1", "res_momentum_l1", "res_convective_l1",
                              "res_kinetic_l1", "res_gradphi_l2")}},
            {"eps": 1e-3, **{k: 2.0 for k in
                             ("res_rho_l1", "res_momentum_l1", "res_convective_l1",
                              "res_kinetic_l1", "res_gradphi_l2")}}]
    assert residuals_decreasing(rows)
    rows[1]["res_rho_l1"] = 4.0
    assert not residuals_decreasing(rows)


def test_kinetic_decay_on_damped_run():
    cfg = SimConfig(dim=1, T=1.0, n_outputs=6, dt_max=0.01, gamma=1.0,
                    v="none", w="none", psi="none", poisson_coupling=False,
                    rho0="cosine(0.1,2)", u0="sine(0.05,1)")
    traj = simulate(cfg, collect_snapshots=False)
    ok, margins = kinetic_decay_check(traj.times, traj.reports, 1.0,
                                      traj.reports[0].total)
    assert ok and (margins >= 0).all()


def test_i1_interaction_bound_holds():
    base = SimConfig(dim=1, T=0.3, n_outputs=3, dt_max=0.01, gamma=1.0,
                     v="quadratic(0.5,0.05)", w="gaussian(0.3,0.2)",
                     rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    mv = simulate(replace(base, eps=1e-3))
    ref = simulate(base)
    lhs, rhs, c = i1_interaction_bound(mv.final_state, mv.env,
                                       ref.final_state, ref.env)
    assert lhs <= rhs
    assert c > 0.0


def test_alignment_discarded_term_nonnegative():
    base = SimConfig(dim=1, T=0.3, n_outputs=3, dt_max=0.01, gamma=1.0,
                     v="none", w="none", psi="gaussian(0.25,1)",
                     system="euler_alignment",
                     rho0="cosine(0.1,2)", u0="sine(0.04,1)+sine(0.02,2)")
    mv = simulate(replace(base, eps=1e-3))
    ref = simulate(base)
    val = alignment_discarded_term(mv.final_state, mv.env,
                                   ref.final_state, ref.env)
    assert val >= -1e-12
