"""Invariant battery behind `ep-sim selftest`: one pass/fail line per check,
nonzero exit on any failure.  Covers the structural invariants cheaply; the
pytest suite carries the full oracles."""

from __future__ import annotations

import numpy as np


def _check_bases():
    from .geometry import Quadrature, build_bases

    for dim, K, P, q in ((1, 16, 13, 10), (2, 8, 7, 10)):
        quad = Quadrature(dim, P, q)
        sine, cosine = build_bases(dim, K, quad)
        for basis in (sine, cosine):
            G = basis.node_values @ (quad.weights[:, None] * basis.node_values.T)
            err = np.abs(G - np.eye(basis.n_modes)).max()
            assert err <= 1e-12, f"orthonormality {err:.2e} (dim={dim})"


def _check_eigenvalues():
    import itertools

    from .geometry import Quadrature, build_bases

    quad = Quadrature(1, 13, 10)
    sine, _ = build_bases(1, 8, quad)
    for i in range(sine.n_modes):
        acc = 0.0
        for alpha in itertools.product(range(4), repeat=1):
            if sum(alpha) > 3:
                continue
            d = sine.eval_modes_derivative(quad.nodes, alpha)[i]
            acc += float(np.dot(quad.weights, d * d))
        rel = abs(acc - sine.eigenvalues[i]) / sine.eigenvalues[i]
        assert rel <= 1e-8, f"eigenvalue mismatch {rel:.2e} at mode {i + 1}"


def _check_poisson():
    from .geometry import Quadrature, build_bases
    from .poisson import solve_poisson

    quad = Quadrature(1, 13, 10)
    _, cosine = build_bases(1, 16, quad)
    x = quad.nodes[:, 0]
    rho = 1.0 + np.cos(2 * np.pi * x)
    state = solve_poisson(rho, 1.0, cosine, quad)
    phi = state.potential_at(quad.nodes)
    err = np.abs(phi - np.cos(2 * np.pi * x) / (4 * np.pi**2)).max()
    assert err <= 1e-12, f"poisson analytic error {err:.2e}"
    gauge = abs(float(np.dot(quad.weights, phi)))
    assert gauge <= 1e-13, f"gauge violated {gauge:.2e}"


def _check_newform():
    from .geometry import Quadrature, build_bases
    from .poisson import newform_residual, poisson_force_direct, poisson_force_weak, solve_poisson

    quad = Quadrature(1, 13, 10)
    sine, cosine = build_bases(1, 16, quad)
    x = quad.nodes[:, 0]
    rho = 1.0 + 0.3 * np.cos(2 * np.pi * x) + 0.1 * np.cos(3 * np.pi * x)
    r = 1.0 + 0.2 * np.cos(np.pi * x)
    sa = solve_poisson(rho, 1.0, cosine, quad)
    sb = solve_poisson(r, 1.0, cosine, quad)
    gap = np.abs(poisson_force_weak(sa, sine, quad)
                 - poisson_force_direct(sa, rho, sine, quad)).max()
    assert gap <= 1e-8, f"weak/strong force gap {gap:.2e}"
    phi = np.zeros((1, sine.n_modes))
    phi[0, 1] = 0.8
    phi[0, 4] = -0.3
    res = newform_residual(sa, sb, phi, sine, rho_a=rho, rho_b=r, quad=quad)
    assert res <= 1e-7, f"cross identity residual {res:.2e}"


def _check_convolution():
    from .forces import QuadraticKernel, convolve
    from .geometry import Quadrature

    quad = Quadrature(1, 13, 10)
    x = quad.nodes
    out = convolve(QuadraticKernel(), x, x, quad.weights)
    exact = x[:, 0] ** 2 - x[:, 0] + 1.0 / 3.0
    err = np.abs(out - exact).max()
    assert err <= 1e-13, f"convolution closed form {err:.2e}"


def _check_alignment():
    from . import forces as nf
    from .dynamics import SimConfig, simulate
    from .transport import velocity_at

    cfg = SimConfig(dim=1, T=0.2, n_outputs=3, dt_max=0.01, gamma=1.0,
                    v="none", w="quadratic(0.05)", psi="gaussian(0.25,1)",
                    system="euler_alignment", rho0="cosine(0.1,2)",
                    u0="sine(0.05,1)+sine(0.02,2)")
    traj = simulate(cfg, collect_snapshots=False)
    st, env = traj.final_state, traj.env
    pos = st.fwd.clamped_positions()
    u_at = velocity_at(st.c, env.sine, pos)
    D = nf.alignment_dissipation(pos, env.wrho0, u_at, env.kernels.psi)
    F = nf.alignment_force(pos, env.wrho0, u_at, env.kernels, env.sine)
    work = float(np.einsum("ai,ai->", F, st.c))
    tot = np.abs(nf.alignment_total_force(pos, env.wrho0, u_at, env.kernels.psi)).max()
    assert D >= -1e-12, f"dissipation negative: {D:.2e}"
    assert abs(D + work) <= 1e-8, f"dissipation/work gap {abs(D + work):.2e}"
    assert tot <= 1e-10, f"alignment momentum {tot:.2e}"
    # interaction momentum: int rho grad(W * rho) = 0 by antisymmetry
    g = nf.convolve_grad(env.kernels.w, pos, pos, env.wrho0)
    mom = np.abs(np.einsum("an,n->a", g, env.wrho0)).max()
    assert mom <= 1e-10, f"interaction momentum {mom:.2e}"


def _check_run():
    from .dynamics import SimConfig, simulate

    cfg = SimConfig(dim=1, T=0.5, n_outputs=6, dt_max=0.01, gamma=1.0,
                    eps=1e-3, v="quadratic(0.5,0.05)", w="quadratic(0.025)",
                    psi="constant(0.5)", system="euler_alignment",
                    rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    traj = simulate(cfg, collect_snapshots=False)
    m0 = traj.reports[0].mass_field
    e0 = traj.reports[0].total
    for rep in traj.reports:
        assert abs(rep.mass_field - m0) <= 1e-8 * m0, "mass drift"
        assert rep.residual <= 1e-6 * max(abs(e0), 1.0), "energy violated"
        assert rep.min_density > 0.0, "positivity lost"


def _check_damping():
    from .dynamics import SimConfig, simulate

    cfg = SimConfig(dim=1, T=1.0, n_outputs=3, dt_max=0.01, v="none",
                    poisson_coupling=False, gamma=1.0, eps=1e-3, eps_floor=False,
                    rho0="uniform", u0="modes(1:0.7)",
                    disable_convection=True, freeze_density=True)
    traj = simulate(cfg, collect_snapshots=False)
    lam = traj.env.sine.eigenvalues
    expected = 0.7 * np.exp(-(1.0 + 1e-3 * lam[0]))
    rel = abs(traj.final_state.c[0, 0] - expected) / expected
    assert rel <= 1e-6, f"damping closed form off by {rel:.2e}"


def _check_inequalities():
    from .young import inequality_suite

    rep = inequality_suite(2000, 2, seed=7)
    assert rep.all_passed, f"{rep.n_failures} inequality failures"
    assert rep.trace_equality_gap <= 1e-12


def _check_determinism():
    from .dynamics import SimConfig, simulate

    cfg = SimConfig(dim=1, T=0.2, n_outputs=3, dt_max=0.01, gamma=1.0,
                    v="quadratic(0.5,0.1)", rho0="cosine(0.1,2)", u0="sine(0.04,1)")
    a = simulate(cfg)
    b = simulate(cfg)
    assert all((x["rho"] == y["rho"]).all() for x, y in zip(a.snapshots, b.snapshots))
    assert (a.final_state.c == b.final_state.c).all()


CHECKS = [
    ("basis orthonormality", _check_bases),
    ("sobolev eigenvalues", _check_eigenvalues),
    ("poisson analytic/gauge", _check_poisson),
    ("divergence-form identities", _check_newform),
    ("kernel convolution", _check_convolution),
    ("alignment identities", _check_alignment),
    ("mass/energy/positivity run", _check_run),
    ("pure damping closed form", _check_damping),
    ("elementary inequalities", _check_inequalities),
    ("determinism", _check_determinism),
]

FAST_SKIP = {"mass/energy/positivity run"}


def run_selftest(fast: bool = False) -> int:
    failures = 0
    for name, fn in CHECKS:
        if fast and name in FAST_SKIP:
            print(f"SKIP  {name}")
            continue
        try:
            fn()
            print(f"PASS  {name}")
        except Exception as exc:
            failures += 1
            print(f"FAIL  {name}: {exc}")
    print(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return 1 if failures else 0
