"""Neumann Poisson coupling -Lap(Phi) = rho - M in the cosine basis.

The solve is diagonal: Phi_k = rho_k / (pi^2 |k|^2) for k != 0, and the k = 0
coefficient is pinned to zero (zero-mean gauge), which makes Phi unique and
the field energy reproducible.  The gradient is synthesized analytically, so
the stored grad is exactly the gradient of the stored potential (curl-free by
construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CosineBasis, Quadrature, SineBasis, as_node_values, integrate

COMPAT_TOL = 1e-10


class PoissonCompatibilityError(ValueError):
    """Source does not integrate to the stated mass."""


@dataclass
class PotentialState:
    """Zero-mean potential in cosine coefficients plus its gradient on the
    quadrature grid and the mass used as source offset."""

    coeffs: np.ndarray          # cosine coefficients of Phi (constant mode zero)
    grad_nodes: np.ndarray      # (dim, n_nodes)
    mass: float
    basis: CosineBasis

    def gradient_at(self, pts) -> np.ndarray:
        return self.basis.gradient(self.coeffs, pts=np.atleast_2d(pts))

    def potential_at(self, pts) -> np.ndarray:
        return self.basis.synthesize(self.coeffs, pts=np.atleast_2d(pts))

    def field_energy(self) -> float:
        """(1/2) int |grad Phi|^2 via Parseval: (1/2) sum pi^2|k|^2 Phi_k^2."""
        return 0.5 * float(np.dot(self.basis.laplace_eigenvalues, self.coeffs**2))


def solve_poisson(rho, mass: float, basis: CosineBasis,
                  quad: Quadrature | None = None,
                  rho_coeffs: np.ndarray | None = None) -> PotentialState:
    """Solve -Lap(Phi) = rho - M with Neumann walls and zero-mean gauge.

    `rho` is a Field or node-value array; alternatively pass precomputed
    cosine coefficients of rho via `rho_coeffs` (the constant coefficient must
    equal the integral of rho).  The compatibility |int rho - M| <= 1e-10 is
    enforced, not silently projected away.
    """
    quad = quad or basis.quad
    if rho_coeffs is None:
        values = as_node_values(rho, basis, quad)
        rho_coeffs = basis.node_values @ (quad.weights * values)
        total = integrate(values, quad)
    else:
        rho_coeffs = np.asarray(rho_coeffs, dtype=float)
        total = float(rho_coeffs[0])  # constant cosine mode is identically 1

    defect = total - mass
    if abs(defect) > COMPAT_TOL * max(1.0, abs(mass)):
        raise PoissonCompatibilityError(
            f"source/mass mismatch: int rho - M = {defect:.3e} exceeds {COMPAT_TOL:.0e}"
        )

    lam = basis.laplace_eigenvalues
    coeffs = np.zeros_like(rho_coeffs)
    nz = lam > 0.0
    coeffs[nz] = rho_coeffs[nz] / lam[nz]
    grad = basis.gradient(coeffs)
    return PotentialState(coeffs=coeffs, grad_nodes=grad, mass=float(mass), basis=basis)


def stress_tensor_nodes(state: PotentialState) -> np.ndarray:
    """T = grad Phi (x) grad Phi - (1/2)|grad Phi|^2 I on the grid,
    shape (dim, dim, n_nodes)."""
    g = state.grad_nodes
    dim = g.shape[0]
    T = np.einsum("an,bn->abn", g, g)
    half_sq = 0.5 * np.einsum("an,an->n", g, g)
    for a in range(dim):
        T[a, a] -= half_sq
    return T


def poisson_force_weak(state: PotentialState, sine: SineBasis,
                       quad: Quadrature | None = None) -> np.ndarray:
    """Momentum contribution of the nonlocal term against every velocity mode.

    Assembled in divergence form: for the test function w_i e_c,

        G[c, i] = -int T : grad(w_i e_c) dx - M int (grad Phi)_c w_i dx,

    which equals -int rho grad Phi . (w_i e_c) dx for exact solves.  Dirichlet
    test modes make the integration by parts boundary-term free.
    """
    quad = quad or sine.quad
    T = stress_tensor_nodes(state)
    w = quad.weights
    # -sum_a int T[c,a] d_a(w_i)
    out = -np.einsum("can,ain,n->ci", T, sine.node_grads, w)
    out -= state.mass * np.einsum("cn,in,n->ci", state.grad_nodes, sine.node_values, w)
    return out


def poisson_force_direct(state: PotentialState, rho_values: np.ndarray,
                         sine: SineBasis, quad: Quadrature | None = None) -> np.ndarray:
    """Reference assembly -int rho grad Phi . (w_i e_c) dx by plain quadrature;
    agrees with the weak form for band-limited sources."""
    quad = quad or sine.quad
    w = quad.weights
    return -np.einsum("cn,in,n->ci", state.grad_nodes, sine.node_values,
                      w * np.asarray(rho_values, dtype=float))


def newform_residual(state_a: PotentialState, state_b: PotentialState,
                     phi_coeffs: np.ndarray, sine: SineBasis,
                     rho_a=None, rho_b=None,
                     quad: Quadrature | None = None) -> float:
    """Residual of the mixed divergence-form identity between two potentials.

    With sources a, b and potentials Phi_a, Phi_b it checks

      int (b - M_b) grad Phi_a . phi + int (a - M_a) grad Phi_b . phi
        = -int grad Phi_a . grad Phi_b div phi
          + int [grad Phi_a (x) grad Phi_b + grad Phi_b (x) grad Phi_a] : grad phi

    for a Dirichlet test field phi given by sine coefficients (dim, n_modes).
    When node values of the sources are not supplied, the band-limited
    syntheses -Lap(Phi) + M are used, for which the identity is exact up to
    quadrature.
    """
    quad = quad or sine.quad
    w = quad.weights
    basis_a = state_a.basis

    def source_values(state, given):
        if given is not None:
            return as_node_values(given)
        lam = state.basis.laplace_eigenvalues
        return state.basis.synthesize(lam * state.coeffs) + state.mass

    a_vals = source_values(state_a, rho_a)
    b_vals = source_values(state_b, rho_b)

    phi_nodes = np.stack([sine.synthesize(c) for c in phi_coeffs])
    grad_phi = np.stack([sine.gradient(c) for c in phi_coeffs])  # (comp, axis, n)
    div_phi = np.einsum("ccn->n", grad_phi) if phi_coeffs.shape[0] > 1 else grad_phi[0, 0]

    ga, gb = state_a.grad_nodes, state_b.grad_nodes
    lhs = np.dot(w, np.einsum("cn,cn->n", ga, phi_nodes) * (b_vals - state_b.mass))
    lhs += np.dot(w, np.einsum("cn,cn->n", gb, phi_nodes) * (a_vals - state_a.mass))

    rhs = -np.dot(w, np.einsum("cn,cn->n", ga, gb) * div_phi)
    rhs += np.dot(w, np.einsum("an,bn,abn->n", ga, gb, grad_phi))
    rhs += np.dot(w, np.einsum("an,bn,abn->n", gb, ga, grad_phi))
    return abs(lhs - rhs)


def discrete_curl(state: PotentialState, h: float = 1e-3) -> float:
    """Max |d1 g2 - d2 g1| over interior grid points (d=2), with the partial
    derivatives of the stored gradient taken by fourth-order central
    differences of `gradient_at`.  Measures that the stored gradient really is
    a gradient; the spectral construction keeps this at roundoff/FD-floor
    level for band-limited potentials."""
    if state.basis.dim != 2:
        return 0.0
    pts = state.basis.quad.nodes
    interior = pts[(pts.min(axis=1) > 2 * h) & (pts.max(axis=1) < 1 - 2 * h)]

    def partial(comp, axis):
        acc = np.zeros(len(interior))
        for c, m in ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)):
            shifted = interior.copy()
            shifted[:, axis] += c * h
            acc += m * state.gradient_at(shifted)[comp]
        return acc / (12.0 * h)

    return float(np.abs(partial(1, 0) - partial(0, 1)).max())
