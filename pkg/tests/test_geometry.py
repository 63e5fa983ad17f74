"""Quadrature and spectral-basis contracts: orthonormality, eigenvalues,
projection/synthesis round trips, analytic derivative values."""

import itertools

import numpy as np
import pytest

from epsim.geometry import (
    Domain,
    DomainError,
    Field,
    Quadrature,
    ResolutionError,
    SineBasis,
    VectorField,
    build_bases,
    evaluate,
    integrate,
    project,
)


@pytest.fixture(scope="module")
def quad1():
    return Quadrature(1, 13, 10)


@pytest.fixture(scope="module")
def bases1(quad1):
    return build_bases(1, 16, quad1)


@pytest.fixture(scope="module")
def quad2():
    return Quadrature(2, 7, 10)


@pytest.fixture(scope="module")
def bases2(quad2):
    return build_bases(2, 8, quad2)


def test_domain_unit_measure():
    assert Domain(1).volume == 1.0
    with pytest.raises(ValueError):
        Domain(3)


@pytest.mark.parametrize("dim,panels,order", [(1, 13, 10), (2, 7, 10)])
def test_quadrature_weights(dim, panels, order):
    quad = Quadrature(dim, panels, order)
    assert abs(quad.weights.sum() - 1.0) <= 1e-14
    assert quad.weights.min() > 0.0


def test_resolution_guard():
    quad = Quadrature(1, 2, 4)  # 8 nodes per axis
    with pytest.raises(ResolutionError):
        build_bases(1, 16, quad)


@pytest.mark.parametrize("case", ["d1", "d2"])
def test_orthonormality(case, bases1, quad1, bases2, quad2):
    bases, quad = (bases1, quad1) if case == "d1" else (bases2, quad2)
    for basis in bases:
        G = basis.node_values @ (quad.weights[:, None] * basis.node_values.T)
        assert np.abs(G - np.eye(basis.n_modes)).max() <= 1e-12


def test_mode_counts_d2(bases2):
    sine, cosine = bases2
    assert sine.n_modes == 64
    # counting check at K = 2: 4 sine modes, 8 nonconstant cosine modes
    quad = Quadrature(2, 7, 10)
    s2, c2 = build_bases(2, 2, quad)
    assert s2.n_modes == 4
    nonconstant = (c2.modes.sum(axis=1) > 0).sum()
    assert nonconstant == 8


def test_first_eigenvalue_closed_form(quad1):
    sine, _ = build_bases(1, 1, quad1)
    expected = 1.0 + np.pi**2 + np.pi**4 + np.pi**6
    assert sine.eigenvalues[0] == pytest.approx(expected, rel=1e-14)


def test_eigenvalues_monotone(bases1, bases2):
    lam1 = bases1[0].eigenvalues
    assert (np.diff(lam1) > 0).all()
    sine2 = bases2[0]
    for j, k in enumerate(sine2.modes):
        for a in range(2):
            kk = k.copy()
            kk[a] += 1
            hit = np.flatnonzero((sine2.modes == kk).all(axis=1))
            if hit.size:
                assert sine2.eigenvalues[hit[0]] > sine2.eigenvalues[j]


@pytest.mark.parametrize("dim,K", [(1, 6), (2, 3)])
def test_eigenvalue_vs_quadrature_sobolev_sum(dim, K):
    """Closed-form product eigenvalue against direct quadrature of
    sum_{|alpha|<=3} (D^alpha w, D^alpha w)."""
    quad = Quadrature(dim, 13, 10) if dim == 1 else Quadrature(2, 7, 10)
    sine, _ = build_bases(dim, K, quad)
    alphas = [a for a in itertools.product(range(4), repeat=dim) if sum(a) <= 3]
    for i in range(sine.n_modes):
        acc = 0.0
        for alpha in alphas:
            d = sine.eval_modes_derivative(quad.nodes, alpha)[i]
            acc += float(np.dot(quad.weights, d * d))
        assert acc == pytest.approx(sine.eigenvalues[i], rel=1e-8)


def test_project_unit_vector(bases1, quad1):
    sine, _ = bases1
    c = project(sine.node_values[2], sine, quad1)
    expected = np.zeros(sine.n_modes)
    expected[2] = 1.0
    assert np.abs(c - expected).max() <= 1e-12
    assert np.abs(project(np.zeros(quad1.n_nodes), sine, quad1)).max() == 0.0


def test_project_parabola(bases1, quad1):
    """x(1-x) has sine coefficients 4 sqrt(2) / (k pi)^3 for odd k."""
    sine, _ = bases1
    x = quad1.nodes[:, 0]
    c = project(x * (1 - x), sine, quad1)
    ks = np.arange(1, 17)
    expected = np.where(ks % 2 == 1, 4 * np.sqrt(2) / (ks * np.pi) ** 3, 0.0)
    assert np.abs(c - expected).max() <= 1e-13


def test_evaluate_values_and_derivatives(bases1):
    sine, _ = bases1
    e1 = np.zeros(sine.n_modes)
    e1[0] = 1.0
    assert evaluate(e1, sine, [[0.5]])[0] == pytest.approx(np.sqrt(2.0), abs=1e-15)
    # Dirichlet: any coefficient vector vanishes on the boundary
    rng = np.random.default_rng(3)
    c = rng.normal(size=sine.n_modes)
    assert abs(evaluate(c, sine, [[0.0]])[0]) <= 1e-12 * np.abs(c).sum()
    assert abs(evaluate(c, sine, [[1.0]])[0]) <= 1e-12 * np.abs(c).sum()
    d = evaluate(e1, sine, [[0.0]], deriv_axis=0)[0]
    assert d == pytest.approx(np.sqrt(2.0) * np.pi, rel=1e-14)


def test_evaluate_rejects_outside(bases1):
    sine, _ = bases1
    with pytest.raises(DomainError):
        evaluate(np.zeros(sine.n_modes), sine, [[1.0 + 1e-6]])


def test_integrate_closed_forms(quad1, bases1):
    sine, _ = bases1
    x = quad1.nodes[:, 0]
    assert integrate(np.ones_like(x), quad1) == pytest.approx(1.0, abs=1e-15)
    assert integrate(np.sin(np.pi * x) ** 2, quad1) == pytest.approx(0.5, abs=1e-14)
    prod = sine.node_values[0] * sine.node_values[1]
    assert abs(integrate(prod, quad1)) <= 1e-12


def test_synthesis_projection_round_trip(bases1, quad1, bases2, quad2):
    for (sine, cosine), quad in ((bases1, quad1), (bases2, quad2)):
        rng = np.random.default_rng(11)
        for basis in (sine, cosine):
            c = rng.normal(size=basis.n_modes)
            vals = basis.synthesize(c)
            back = project(vals, basis, quad)
            assert np.abs(back - c).max() <= 1e-12 * max(1.0, np.abs(c).max())
            again = basis.synthesize(back)
            assert np.abs(again - vals).max() <= 1e-12


def test_field_wrappers(bases1, quad1):
    sine, _ = bases1
    rng = np.random.default_rng(5)
    c = rng.normal(size=sine.n_modes)
    f = Field(data=sine.synthesize(c), rep="nodes", basis=sine)
    assert np.abs(f.coefficients(sine, quad1) - c).max() <= 1e-12
    g = Field(data=c, rep="coeffs", basis=sine)
    assert np.abs(g.node_values() - f.data).max() <= 1e-14

    cv = rng.normal(size=(1, sine.n_modes))
    vf = VectorField(data=cv, rep="coeffs", basis=sine)
    back = VectorField(data=vf.node_values(), rep="nodes",
                       basis=sine).coefficients(sine, quad1)
    assert np.abs(back - cv).max() <= 1e-12
