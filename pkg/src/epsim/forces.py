"""Confinement, attraction-repulsion and alignment force terms.

Convolutions over the bounded box, (W * rho)(x) = int_Omega W(x-y) rho(y) dy,
are evaluated by direct double quadrature against a set of mass points
(positions carrying weight * density), blocked over fixed-size chunks so the
accumulation order is deterministic.  Kernels are restricted to smooth,
symmetric presets; anything else is rejected when parsing a spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Quadrature, SineBasis, as_node_values

_BLOCK = 512  # fixed target-chunk size keeps pairwise buffers small and sums ordered


class KernelError(ValueError):
    """Unknown or inadmissible kernel preset."""


@dataclass(frozen=True)
class QuadraticWell:
    """Confinement V(x) = (strength/2)|x - center|^2 (at positions)."""

    center: float = 0.0
    strength: float = 1.0

    def eval(self, pts):
        return 0.5 * self.strength * ((pts - self.center) ** 2).sum(axis=1)

    def grad(self, pts):
        return self.strength * (pts - self.center).T


@dataclass(frozen=True)
class QuadraticKernel:
    """Interaction W(z) = amp |z|^2 (even, smooth; attraction toward the
    center of mass)."""

    amp: float = 1.0

    def eval(self, disp):
        return self.amp * (disp**2).sum(axis=-1)

    def grad(self, disp):
        return np.moveaxis(2.0 * self.amp * disp, -1, 0)

    def hess(self, disp):
        dim = disp.shape[-1]
        out = np.zeros((dim, dim) + disp.shape[:-1])
        for a in range(dim):
            out[a, a] = 2.0 * self.amp
        return out


@dataclass(frozen=True)
class GaussianKernel:
    """amp * exp(-|z|^2 / (2 sigma^2)), even, smooth, nonnegative."""

    sigma: float
    amp: float = 1.0

    def eval(self, disp):
        return self.amp * np.exp(-(disp**2).sum(axis=-1) / (2.0 * self.sigma**2))

    def grad(self, disp):
        return np.moveaxis(disp, -1, 0) * (-self.eval(disp) / self.sigma**2)

    def hess(self, disp):
        dim = disp.shape[-1]
        val = self.eval(disp)
        z = np.moveaxis(disp, -1, 0)
        out = np.einsum("a...,b...->ab...", z, z) * (val / self.sigma**4)
        for a in range(dim):
            out[a, a] -= val / self.sigma**2
        return out


@dataclass(frozen=True)
class ConstantKernel:
    """psi(z) = c >= 0 (all-to-all alignment)."""

    value: float = 1.0

    def eval(self, disp):
        return np.full(disp.shape[:-1], self.value)

    def grad(self, disp):
        return np.zeros((disp.shape[-1],) + disp.shape[:-1])


def parse_kernel(role: str, text: str):
    """Parse a preset like 'gaussian(0.25)', 'quadratic', 'constant(0.5)',
    'none'.  Singular or unknown kernels are rejected here."""
    text = text.strip().lower()
    name, args = text, []
    if "(" in text:
        if not text.endswith(")"):
            raise KernelError(f"malformed kernel spec {text!r}")
        name, argstr = text[: text.index("(")], text[text.index("(") + 1 : -1]
        args = [float(a) for a in argstr.split(",") if a.strip()]
    if name in ("none", "zero", "off"):
        return None
    if role == "v":
        if name == "quadratic":
            return QuadraticWell(center=args[0] if args else 0.0,
                                 strength=args[1] if len(args) > 1 else 1.0)
    elif role == "w":
        if name == "quadratic":
            return QuadraticKernel(amp=args[0] if args else 1.0)
        if name == "gaussian":
            if not args or args[0] <= 0:
                raise KernelError("gaussian interaction kernel needs sigma > 0")
            return GaussianKernel(sigma=args[0],
                                  amp=args[1] if len(args) > 1 else 1.0)
    elif role == "psi":
        if name == "constant":
            c = args[0] if args else 1.0
            if c < 0:
                raise KernelError("alignment strength must be >= 0")
            return ConstantKernel(value=c)
        if name == "gaussian":
            if not args or args[0] <= 0:
                raise KernelError("gaussian alignment kernel needs sigma > 0")
            return GaussianKernel(sigma=args[0],
                                  amp=args[1] if len(args) > 1 else 1.0)
    raise KernelError(f"unknown {role} kernel preset {text!r}")


@dataclass
class KernelSpec:
    """Force configuration: confinement V, interaction W, alignment psi and
    friction gamma >= 0.  W and psi presets are even by construction; this is
    still spot-checked on sampled pairs at build time."""

    v: object | None = None
    w: object | None = None
    psi: object | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise KernelError("friction gamma must be >= 0")
        rng = np.random.default_rng(0)
        z = rng.uniform(-1.0, 1.0, size=(64, 2))
        for k, label in ((self.w, "W"), (self.psi, "psi")):
            if k is None:
                continue
            asym = np.abs(k.eval(z) - k.eval(-z)).max()
            if asym > 1e-14:
                raise KernelError(f"{label} kernel is not even (asymmetry {asym:.1e})")
        if self.psi is not None and self.psi.eval(z).min() < 0:
            raise KernelError("psi kernel must be nonnegative")

    @classmethod
    def from_presets(cls, v="quadratic", w="none", psi="none", gamma=1.0):
        return cls(v=parse_kernel("v", v), w=parse_kernel("w", w),
                   psi=parse_kernel("psi", psi), gamma=gamma)


def mass_points_from_field(rho, quad: Quadrature):
    """(positions, weight*density) pairs representing a grid density field."""
    values = as_node_values(rho)
    return quad.nodes, quad.weights * values


def convolve(kernel, targets: np.ndarray, sources: np.ndarray,
             source_weights: np.ndarray) -> np.ndarray:
    """(k * mu)(x_i) = sum_j w_j k(x_i - y_j) for a weighted point measure.

    `source_weights` may be (n,) or (c, n) for component-wise products such as
    psi * (rho u); output is (m,) or (c, m) accordingly.
    """
    targets = np.atleast_2d(targets)
    sw = np.asarray(source_weights, dtype=float)
    vec = sw.ndim == 2
    out = np.zeros((sw.shape[0], len(targets)) if vec else len(targets))
    for lo in range(0, len(targets), _BLOCK):
        hi = min(lo + _BLOCK, len(targets))
        disp = targets[lo:hi, None, :] - sources[None, :, :]
        kv = kernel.eval(disp)  # (blk, n_src)
        if vec:
            out[:, lo:hi] = sw @ kv.T
        else:
            out[lo:hi] = kv @ sw
    return out


def convolve_field(kernel, f, quad: Quadrature) -> np.ndarray:
    """(k * f)(x) over the box for a grid field: the double-quadrature
    convolution evaluated at every node."""
    values = as_node_values(f)
    return convolve(kernel, quad.nodes, quad.nodes, quad.weights * values)


def convolve_grad(kernel, targets: np.ndarray, sources: np.ndarray,
                  source_weights: np.ndarray) -> np.ndarray:
    """grad(k * mu)(x_i) = sum_j w_j (grad k)(x_i - y_j), shape (dim, m)."""
    targets = np.atleast_2d(targets)
    dim = targets.shape[1]
    sw = np.asarray(source_weights, dtype=float)
    out = np.zeros((dim, len(targets)))
    for lo in range(0, len(targets), _BLOCK):
        hi = min(lo + _BLOCK, len(targets))
        disp = targets[lo:hi, None, :] - sources[None, :, :]
        gk = kernel.grad(disp)  # (dim, blk, n_src)
        out[:, lo:hi] = np.einsum("abn,n->ab", gk, sw)
    return out


def interaction_confinement_force(positions: np.ndarray, wrho: np.ndarray,
                                  spec: KernelSpec, sine: SineBasis) -> np.ndarray:
    """Galerkin projection of -rho (grad V + grad(W * rho)), shape (dim, n_modes)."""
    dim = positions.shape[1]
    drive = np.zeros((dim, len(positions)))
    if spec.v is not None:
        drive += spec.v.grad(positions)
    if spec.w is not None:
        drive += convolve_grad(spec.w, positions, positions, wrho)
    if not drive.any():
        return np.zeros((dim, sine.n_modes))
    modes = sine.eval_modes(positions)
    return -np.einsum("an,in,n->ai", drive, modes, wrho)


def alignment_velocity_average(positions, wrho, u_at, psi, targets=None):
    """Pointwise alignment drive (psi*(rho u))(x) - (psi*rho)(x) u(x)."""
    targets = positions if targets is None else targets
    psi_rho = convolve(psi, targets, positions, wrho)
    psi_mom = convolve(psi, targets, positions, wrho * u_at)
    return psi_mom - psi_rho * u_at


def alignment_force(positions: np.ndarray, wrho: np.ndarray, u_at: np.ndarray,
                    spec: KernelSpec, sine: SineBasis) -> np.ndarray:
    """Galerkin projection of rho(x) int psi(x-y) rho(y) (u(y) - u(x)) dy."""
    if spec.psi is None:
        return np.zeros((u_at.shape[0], sine.n_modes))
    drive = alignment_velocity_average(positions, wrho, u_at, spec.psi)
    modes = sine.eval_modes(positions)
    return np.einsum("an,in,n->ai", drive, modes, wrho)


def alignment_total_force(positions, wrho, u_at, psi) -> np.ndarray:
    """int (alignment force density) dx; vanishes by x <-> y antisymmetry."""
    drive = alignment_velocity_average(positions, wrho, u_at, psi)
    return np.einsum("an,n->a", drive, wrho)


def alignment_dissipation(positions: np.ndarray, wrho: np.ndarray,
                          u_at: np.ndarray, psi) -> float:
    """(1/2) int int psi(x-y) rho(x) rho(y) |u(y)-u(x)|^2 dy dx.

    Computed from the manifestly nonnegative symmetrized double sum.
    """
    if psi is None:
        return 0.0
    total = 0.0
    n = len(positions)
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        disp = positions[lo:hi, None, :] - positions[None, :, :]
        kv = psi.eval(disp)  # (blk, n)
        du2 = ((u_at[:, lo:hi, None] - u_at[:, None, :]) ** 2).sum(axis=0)
        total += float(np.einsum("bn,bn,b,n->", kv, du2, wrho[lo:hi], wrho))
    return 0.5 * total


def interaction_energy(positions: np.ndarray, wrho: np.ndarray, w_kernel) -> float:
    """(1/2) int rho (W * rho) dx by double quadrature."""
    if w_kernel is None:
        return 0.0
    return 0.5 * float(np.dot(convolve(w_kernel, positions, positions, wrho), wrho))


def confinement_energy(positions: np.ndarray, wrho: np.ndarray, v_kernel) -> float:
    """int rho V dx."""
    if v_kernel is None:
        return 0.0
    return float(np.dot(v_kernel.eval(positions), wrho))
