"""Poisson solve and divergence-form identities against analytic and
quadrature oracles."""

import numpy as np
import pytest
from scipy.integrate import quad as spquad

from epsim.geometry import Quadrature, build_bases, integrate
from epsim.poisson import (
    PoissonCompatibilityError,
    discrete_curl,
    newform_residual,
    poisson_force_direct,
    poisson_force_weak,
    solve_poisson,
)


@pytest.fixture(scope="module")
def setup1():
    quad = Quadrature(1, 13, 10)
    sine, cosine = build_bases(1, 16, quad)
    return quad, sine, cosine


@pytest.fixture(scope="module")
def setup2():
    quad = Quadrature(2, 7, 10)
    sine, cosine = build_bases(2, 8, quad)
    return quad, sine, cosine


def test_uniform_source_gives_zero(setup1):
    quad, _, cosine = setup1
    state = solve_poisson(np.full(quad.n_nodes, 2.5), 2.5, cosine, quad)
    assert np.abs(state.coeffs).max() <= 1e-14
    assert np.abs(state.grad_nodes).max() <= 1e-12


def test_analytic_cosine_solution(setup1):
    quad, _, cosine = setup1
    x = quad.nodes[:, 0]
    state = solve_poisson(1.0 + np.cos(2 * np.pi * x), 1.0, cosine, quad)
    phi = state.potential_at(quad.nodes)
    grad = state.grad_nodes[0]
    assert np.abs(phi - np.cos(2 * np.pi * x) / (4 * np.pi**2)).max() <= 1e-12
    assert np.abs(grad + np.sin(2 * np.pi * x) / (2 * np.pi)).max() <= 1e-12
    # field energy: int (1/2) sin^2(2 pi x) / (2 pi)^2 = 1 / (16 pi^2)
    assert state.field_energy() == pytest.approx(1.0 / (16 * np.pi**2), rel=1e-13)
    # zero-mean gauge
    assert abs(integrate(phi, quad)) <= 1e-14


def test_compatibility_enforced(setup1):
    quad, _, cosine = setup1
    with pytest.raises(PoissonCompatibilityError, match="mass"):
        solve_poisson(np.ones(quad.n_nodes), 1.5, cosine, quad)


def test_linearity(setup1):
    quad, _, cosine = setup1
    x = quad.nodes[:, 0]
    r1 = 1.0 + 0.4 * np.cos(np.pi * x)
    r2 = 2.0 - 0.3 * np.cos(5 * np.pi * x)
    a, b = 0.7, -1.3
    sa = solve_poisson(r1, 1.0, cosine, quad)
    sb = solve_poisson(r2, 2.0, cosine, quad)
    sc = solve_poisson(a * r1 + b * r2, a * 1.0 + b * 2.0, cosine, quad)
    assert np.abs(sc.coeffs - a * sa.coeffs - b * sb.coeffs).max() <= 1e-12
    assert sa.field_energy() >= 0.0 and sc.field_energy() >= 0.0


def test_weak_equals_direct_force(setup1):
    """Divergence-form assembly equals direct quadrature of -(rho - M) grad
    Phi . w_i - M grad Phi . w_i for band-limited sources."""
    quad, sine, cosine = setup1
    x = quad.nodes[:, 0]
    rng = np.random.default_rng(21)
    for _ in range(3):
        amps = rng.normal(scale=0.2, size=5)
        rho = 1.0 + sum(a * np.cos((k + 1) * np.pi * x) for k, a in enumerate(amps))
        state = solve_poisson(rho, 1.0, cosine, quad)
        gap = np.abs(poisson_force_weak(state, sine, quad)
                     - poisson_force_direct(state, rho, sine, quad)).max()
        assert gap <= 1e-8


def test_tensor_term_d1_closed_form(setup1):
    """In d = 1 the stress degenerates to (1/2)(grad Phi)^2, so the tensor
    part of the weak form equals int (1/2)(grad Phi)^2 w_i' (oracle by
    adaptive quadrature), checked on mode 2."""
    quad, sine, cosine = setup1
    x = quad.nodes[:, 0]
    state = solve_poisson(1.0 + np.cos(2 * np.pi * x), 1.0, cosine, quad)
    # assembled tensor part = -int T : grad w_i with T = (1/2)(grad Phi)^2
    T = 0.5 * state.grad_nodes[0] ** 2
    assembled = -integrate(T * sine.node_grads[0][1], quad)

    def integrand(xx):
        gp = -np.sin(2 * np.pi * xx) / (2 * np.pi)
        wprime = np.sqrt(2.0) * 2 * np.pi * np.cos(2 * np.pi * xx)
        return -0.5 * gp**2 * wprime

    oracle, _ = spquad(integrand, 0.0, 1.0, limit=200)
    assert assembled == pytest.approx(oracle, abs=1e-12)


def test_zero_potential_zero_force(setup1):
    quad, sine, cosine = setup1
    state = solve_poisson(np.ones(quad.n_nodes), 1.0, cosine, quad)
    assert np.abs(poisson_force_weak(state, sine, quad)).max() <= 1e-12


def _random_band_limited(rng, x, kmax=6, scale=0.2):
    return 1.0 + sum(rng.normal(scale=scale / (k + 1)) * np.cos((k + 1) * np.pi * x)
                     for k in range(kmax))


def test_newform_identity_cases(setup1):
    quad, sine, cosine = setup1
    x = quad.nodes[:, 0]
    rng = np.random.default_rng(33)
    phi = np.zeros((1, sine.n_modes))
    phi[0, [0, 2, 5]] = [0.7, -0.4, 0.2]

    # rho = r: the identity degenerates to twice the single-source identity
    rho = _random_band_limited(rng, x)
    sa = solve_poisson(rho, 1.0, cosine, quad)
    assert newform_residual(sa, sa, phi, sine, rho_a=rho, rho_b=rho, quad=quad) <= 1e-8

    # rho = M: one potential vanishes, only the r-terms survive
    su = solve_poisson(np.ones_like(x), 1.0, cosine, quad)
    r = _random_band_limited(rng, x)
    sb = solve_poisson(r, 1.0, cosine, quad)
    assert newform_residual(su, sb, phi, sine, rho_a=np.ones_like(x), rho_b=r,
                            quad=quad) <= 1e-8

    # random band-limited pairs
    for _ in range(4):
        rho = _random_band_limited(rng, x)
        r = _random_band_limited(rng, x)
        sa = solve_poisson(rho, 1.0, cosine, quad)
        sb = solve_poisson(r, 1.0, cosine, quad)
        res = newform_residual(sa, sb, phi, sine, rho_a=rho, rho_b=r, quad=quad)
        assert res <= 1e-7


def test_curl_free_2d(setup2):
    quad, _, cosine = setup2
    x, y = quad.nodes[:, 0], quad.nodes[:, 1]
    rho = 1.0 + 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y) \
        + 0.1 * np.cos(2 * np.pi * x)
    state = solve_poisson(rho, 1.0, cosine, quad)
    assert discrete_curl(state) <= 1e-10


def test_gradient_matches_finite_difference_2d(setup2):
    quad, _, cosine = setup2
    x, y = quad.nodes[:, 0], quad.nodes[:, 1]
    state = solve_poisson(1.0 + 0.4 * np.cos(np.pi * x) * np.cos(np.pi * y),
                          1.0, cosine, quad)
    pts = np.array([[0.3, 0.4], [0.55, 0.2], [0.71, 0.66]])
    h = 1e-4
    for axis in range(2):
        shift = np.zeros(2)
        shift[axis] = h
        fd = (state.potential_at(pts + shift) - state.potential_at(pts - shift)) / (2 * h)
        exact = state.gradient_at(pts)[axis]
        assert np.abs(fd - exact).max() <= 1e-7
