"""Density transport along characteristics of the Galerkin velocity.

Two flow representations are kept:

* `ForwardFlow` carries quadrature nodes forward with the velocity together
  with the accumulated divergence along each path.  It is part of the joint
  ODE state of the dynamics and makes every density-weighted integral an exact
  change of variables back to the initial grid (mass is conserved to roundoff
  by construction).

* `FlowState` is the backward map B(t,x) ~ X(0;t,x) sampled at the quadrature
  nodes, advanced once per completed step by composing with the one-step
  backward characteristic map.  It reconstructs the density as a grid field,
  rho(t,x) = rho0(B(t,x)) exp(-J(t,x)), for output, Young-measure and
  identification purposes.  Off-node reads use tensor-product Lagrange
  interpolation, by default over the full Gauss panel (order = quadrature
  order), optionally over a sliding 4-point stencil ("cubic").
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import Quadrature, SineBasis

ESCAPE_TOL = 1e-12


class CharacteristicEscapeError(RuntimeError):
    """A backward characteristic left the closed box by more than tolerance;
    cannot happen for exactly Dirichlet velocities, so signals instability."""


class DensityPositivityError(RuntimeError):
    """Reconstructed density lost positivity (interpolation overshoot)."""


# ----------------------------------------------------------------------------
# velocity evaluation helpers


def velocity_at(coeffs: np.ndarray, basis: SineBasis, pts=None) -> np.ndarray:
    """u(x) for component-wise sine coefficients (dim, n_modes) -> (dim, n)."""
    return np.stack([basis.synthesize(c, pts=pts) for c in coeffs])


def velocity_gradient_at(coeffs: np.ndarray, basis: SineBasis, pts=None) -> np.ndarray:
    """d_b u_a -> shape (a, b, n)."""
    dim = coeffs.shape[0]
    return np.stack(
        [np.stack([basis.synthesize(coeffs[a], pts=pts, deriv_axis=b)
                   for b in range(dim)]) for a in range(dim)]
    )


def divergence_at(coeffs: np.ndarray, basis: SineBasis, pts=None) -> np.ndarray:
    dim = coeffs.shape[0]
    out = basis.synthesize(coeffs[0], pts=pts, deriv_axis=0)
    for a in range(1, dim):
        out = out + basis.synthesize(coeffs[a], pts=pts, deriv_axis=a)
    return out


@dataclass
class StepVelocity:
    """Velocity field over one step: coefficient sets at the three RK stage
    times t0, t0 + dt/2, t0 + dt (all shaped (dim, n_modes)).

    The integrator supplies the midpoint set through a stiff-safe
    reconstruction, so the backward characteristic map sees bounded
    velocities even when the regularization makes high modes stiff.
    """

    basis: SineBasis
    t0: float
    dt: float
    c_start: np.ndarray
    c_mid: np.ndarray
    c_end: np.ndarray

    def coeffs_at(self, tau: float) -> np.ndarray:
        th = (tau - self.t0) / self.dt
        for target, coeffs in ((0.0, self.c_start), (0.5, self.c_mid),
                               (1.0, self.c_end)):
            if abs(th - target) < 1e-9:
                return coeffs
        raise ValueError(f"stage velocities only known at t0, t0+dt/2, t0+dt; "
                         f"asked for t0+{th:.6f}*dt")

    def velocity(self, tau, pts):
        return velocity_at(self.coeffs_at(tau), self.basis, pts)

    def divergence(self, tau, pts):
        return divergence_at(self.coeffs_at(tau), self.basis, pts)


# ----------------------------------------------------------------------------
# tensor-product interpolation on the quadrature grid


def _axis_weights(quad: Quadrature, x: np.ndarray, stencil: str):
    """Per-axis interpolation stencil: index array (m, s) and weights (m, s)."""
    if stencil == "panel":
        P, q = quad.panels, quad.order
        panel = np.minimum((x * P).astype(int), P - 1)
        xi = x * P - panel  # local coordinate in [0, 1]
        diff = xi[:, None] - quad.panel_ref[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff = np.where(exact, 1.0, diff)
        w = quad.panel_bary[None, :] / diff
        w = np.where(exact.any(axis=1)[:, None], exact.astype(float), w)
        w /= w.sum(axis=1)[:, None]
        idx = panel[:, None] * q + np.arange(q)[None, :]
        return idx, w
    if stencil == "cubic":
        nodes = quad.nodes_1d
        n = nodes.size
        j = np.searchsorted(nodes, x)
        lo = np.clip(j - 2, 0, n - 4)
        idx = lo[:, None] + np.arange(4)[None, :]
        pts = nodes[idx]  # (m, 4)
        w = np.ones((x.size, 4))
        for i in range(4):
            for k in range(4):
                if k != i:
                    w[:, i] *= (x - pts[:, k]) / (pts[:, i] - pts[:, k])
        return idx, w
    raise ValueError(f"unknown interpolation stencil {stencil!r}")


def grid_interpolate(values: np.ndarray, pts: np.ndarray, quad: Quadrature,
                     stencil: str = "panel") -> np.ndarray:
    """Interpolate flat grid values (n_nodes,) at points (m, dim)."""
    pts = np.clip(np.atleast_2d(pts), 0.0, 1.0)
    if quad.dim == 1:
        idx, w = _axis_weights(quad, pts[:, 0], stencil)
        return np.einsum("ms,ms->m", values[idx], w)
    vx, wx = _axis_weights(quad, pts[:, 0], stencil)
    vy, wy = _axis_weights(quad, pts[:, 1], stencil)
    grid = values.reshape(quad.grid_shape())
    gathered = grid[vx[:, :, None], vy[:, None, :]]  # (m, s, s)
    return np.einsum("mij,mi,mj->m", gathered, wx, wy)


# ----------------------------------------------------------------------------
# forward flow (joint ODE component of the dynamics)


@dataclass
class ForwardFlow:
    """Particle positions started at the quadrature nodes plus the divergence
    integral along each path; rho(t, pos) = rho0(node) * exp(-divint)."""

    positions: np.ndarray  # (n_nodes, dim)
    divint: np.ndarray     # (n_nodes,)

    @classmethod
    def initial(cls, quad: Quadrature) -> "ForwardFlow":
        return cls(positions=quad.nodes.copy(), divint=np.zeros(quad.n_nodes))

    def clamped_positions(self) -> np.ndarray:
        over = max(-self.positions.min(initial=0.0),
                   self.positions.max(initial=1.0) - 1.0)
        if over > ESCAPE_TOL:
            raise CharacteristicEscapeError(
                f"forward characteristic exits the box by {over:.3e}")
        return np.clip(self.positions, 0.0, 1.0)


# ----------------------------------------------------------------------------
# backward flow map


@dataclass
class FlowState:
    """Backward flow map and divergence accumulator on the quadrature grid."""

    quad: Quadrature
    B: np.ndarray        # (n_nodes, dim), values in the closed box
    J: np.ndarray        # (n_nodes,)
    stencil: str = "panel"

    @classmethod
    def initial(cls, quad: Quadrature, stencil: str = "panel") -> "FlowState":
        return cls(quad=quad, B=quad.nodes.copy(), J=np.zeros(quad.n_nodes),
                   stencil=stencil)


def one_step_backward_map(vel: StepVelocity, pts: np.ndarray):
    """RK4 for the one-step backward characteristic through each arrival
    point, with the divergence integral along the same trajectory (same
    stages).

    Returns (phi, dJ): the foot phi(x) of the characteristic arriving at x at
    t0+dt, and int_{t0}^{t0+dt} div u(tau, X(tau)) dtau.
    """
    dt = vel.dt
    t0, tm, t1 = vel.t0, vel.t0 + dt / 2.0, vel.t0 + dt
    x = pts
    cl = lambda p: np.clip(p, 0.0, 1.0)

    p1 = vel.velocity(t1, x).T
    g1 = vel.divergence(t1, x)
    y2 = cl(x - 0.5 * dt * p1)
    p2 = vel.velocity(tm, y2).T
    g2 = vel.divergence(tm, y2)
    y3 = cl(x - 0.5 * dt * p2)
    p3 = vel.velocity(tm, y3).T
    g3 = vel.divergence(tm, y3)
    y4 = cl(x - dt * p3)
    p4 = vel.velocity(t0, y4).T
    g4 = vel.divergence(t0, y4)

    phi = x - dt / 6.0 * (p1 + 2 * p2 + 2 * p3 + p4)
    dJ = dt / 6.0 * (g1 + 2 * g2 + 2 * g3 + g4)
    return phi, dJ


def _checked_clip(phi: np.ndarray) -> np.ndarray:
    over = max(-phi.min(initial=0.0), phi.max(initial=1.0) - 1.0)
    if over > ESCAPE_TOL:
        raise CharacteristicEscapeError(
            f"backward characteristic exits the box by {over:.3e}")
    return np.clip(phi, 0.0, 1.0)


def _compose(flow: FlowState, feet: np.ndarray, dJ: np.ndarray) -> FlowState:
    Bnew = np.column_stack(
        [grid_interpolate(flow.B[:, a], feet, flow.quad, flow.stencil)
         for a in range(flow.quad.dim)]
    )
    Bnew = np.clip(Bnew, 0.0, 1.0)
    Jnew = grid_interpolate(flow.J, feet, flow.quad, flow.stencil) + dJ
    return replace(flow, B=Bnew, J=Jnew)


def step_backward_flow(flow: FlowState, vel: StepVelocity, dt: float) -> FlowState:
    """Compose the backward map with the one-step characteristic map.

    B_{m+1}(x) = B_m(phi(x)), J_{m+1}(x) = J_m(phi(x)) + dJ(x), with off-node
    reads of B_m and J_m by tensor Lagrange interpolation.
    """
    if abs(dt - vel.dt) > 1e-14 * max(1.0, abs(dt)):
        raise ValueError("dt disagrees with the stage-velocity interval")
    phi, dJ = one_step_backward_map(vel, flow.quad.nodes)
    return _compose(flow, _checked_clip(phi), dJ)


def advance_backward_flow(flow: FlowState, vels: list) -> FlowState:
    """Compose the backward map with the characteristic map over a whole run
    of steps at once.

    The characteristics are integrated backward through every step by the
    same RK4 stage velocities, entirely by spectral synthesis, and the stored
    map is interpolated a single time at the end.  Interpolating once per
    composition window (instead of once per step) keeps the repeated
    map-of-map reads from amplifying grid-frequency noise over long runs.
    """
    if not vels:
        return flow
    pts = flow.quad.nodes
    dJ = np.zeros(flow.quad.n_nodes)
    for vel in reversed(vels):
        phi, dj = one_step_backward_map(vel, pts)
        pts = _checked_clip(phi)
        dJ += dj
    return _compose(flow, pts, dJ)


def density(flow: FlowState, rho0_eval) -> np.ndarray:
    """Grid density rho(t,x) = rho0(B(t,x)) exp(-J(t,x)); strictly positive."""
    vals = rho0_eval(flow.B) * np.exp(-flow.J)
    if vals.min() <= 0.0:
        raise DensityPositivityError(
            f"density lost positivity (min {vals.min():.3e}); interpolation "
            "overshoot or unstable run")
    return vals


def total_mass(rho, quad: Quadrature) -> float:
    """Quadrature integral of a density field (conservation reporting and
    Poisson compatibility)."""
    from .geometry import as_node_values, integrate

    return integrate(as_node_values(rho), quad)
