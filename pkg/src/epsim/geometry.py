"""Unit-box domain, panel Gauss-Legendre quadrature and the two spectral bases.

Velocity components live in a tensorized sine basis (homogeneous Dirichlet,
orthonormal in L2, diagonal in the W^{3,2} inner product), potentials in a
tensorized cosine basis (Neumann compatible).  All fields are represented
either by coefficients in one of these bases or by values on the quadrature
grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)

# Tolerance for points nominally inside the closed box but off by roundoff.
_BOUNDS_SLACK = 1e-12


class ResolutionError(ValueError):
    """Quadrature grid cannot resolve the requested spectral band."""


class DomainError(ValueError):
    """Evaluation point lies outside the closed unit box."""


@dataclass(frozen=True)
class Domain:
    """The unit box [0,1]^d, d in {1,2}.  |Omega| = 1, so the total mass of a
    density equals its space average."""

    dim: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")

    @property
    def volume(self) -> float:
        return 1.0


class Quadrature:
    """Tensor-product panel Gauss-Legendre rule on [0,1]^d.

    Per axis the interval is split into `panels` equal panels carrying a
    Gauss-Legendre rule of `order` points, so trigonometric integrands are
    integrated to near machine precision once the panel width resolves the
    wavelength.  Weights are positive and sum to |Omega| = 1.
    """

    def __init__(self, dim: int, panels: int, order: int):
        if dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {dim}")
        if panels < 1 or order < 2:
            raise ValueError("need panels >= 1 and order >= 2")
        self.dim = dim
        self.panels = panels
        self.order = order

        xg, wg = np.polynomial.legendre.leggauss(order)
        h = 1.0 / panels
        starts = np.arange(panels) * h
        self.nodes_1d = (starts[:, None] + h * (xg + 1.0) / 2.0).ravel()
        self.weights_1d = np.tile(wg * h / 2.0, panels)
        self.n_axis = panels * order
        # Reference panel nodes in [0,1] and their barycentric weights, shared
        # by every panel (affine images); used by panel-local interpolation.
        self.panel_ref = (xg + 1.0) / 2.0
        diffs = self.panel_ref[:, None] - self.panel_ref[None, :]
        np.fill_diagonal(diffs, 1.0)
        self.panel_bary = 1.0 / np.prod(diffs, axis=1)

        if dim == 1:
            self.nodes = self.nodes_1d[:, None]
            self.weights = self.weights_1d.copy()
        else:
            X, Y = np.meshgrid(self.nodes_1d, self.nodes_1d, indexing="ij")
            self.nodes = np.column_stack([X.ravel(), Y.ravel()])
            self.weights = np.outer(self.weights_1d, self.weights_1d).ravel()
        self.n_nodes = self.weights.size

    def grid_shape(self):
        return (self.n_axis,) * self.dim


def _axis_trig(kind: str, kmax: int, x: np.ndarray, deriv: int = 0) -> np.ndarray:
    """Table of d^a/dx^a trig(k pi x) for k = 1..kmax (sine) or 0..kmax (cosine).

    Uses trig(k pi x + a pi/2) * (k pi)^a so any derivative order shares one
    code path.  Returns shape (n_k, len(x)).
    """
    if kind == "sin":
        ks = np.arange(1, kmax + 1, dtype=float)
        base = np.sin
    else:
        ks = np.arange(0, kmax + 1, dtype=float)
        base = np.cos
    arg = np.outer(ks * np.pi, x) + deriv * np.pi / 2.0
    return (ks * np.pi)[:, None] ** deriv * base(arg)


def _check_points(pts: np.ndarray, dim: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {dim}")
    if pts.min() < -_BOUNDS_SLACK or pts.max() > 1.0 + _BOUNDS_SLACK:
        worst = float(max(-pts.min(), pts.max() - 1.0))
        raise DomainError(f"evaluation point outside closed unit box by {worst:.3e}")
    return np.clip(pts, 0.0, 1.0)


class _TensorBasis:
    """Shared machinery of the sine and cosine bases."""

    kind = ""  # "sin" or "cos"

    def __init__(self, dim: int, kmax: int, quad: Quadrature):
        self.dim = dim
        self.kmax = kmax
        self.quad = quad
        self.modes = self._make_modes()
        self.n_modes = len(self.modes)
        self.norms = self._norm_factors()
        # Cached tables on the quadrature grid.
        self.node_values = self.eval_modes(quad.nodes)
        self.node_grads = np.stack(
            [self.eval_modes(quad.nodes, deriv_axis=a) for a in range(dim)]
        )

    def _make_modes(self) -> np.ndarray:
        raise NotImplementedError

    def _norm_factors(self) -> np.ndarray:
        raise NotImplementedError

    def _axis_tables(self, x_axis: list, deriv_axis=None):
        tables = []
        for a in range(self.dim):
            d = 1 if deriv_axis == a else 0
            tables.append(_axis_trig(self.kind, self.kmax, x_axis[a], deriv=d))
        return tables

    def _mode_rows(self, tables) -> np.ndarray:
        offset = 1 if self.kind == "sin" else 0
        out = self.norms[:, None] * tables[0][self.modes[:, 0] - offset]
        for a in range(1, self.dim):
            out = out * tables[a][self.modes[:, a] - offset]
        return out

    def eval_modes(self, pts: np.ndarray, deriv_axis=None) -> np.ndarray:
        """Values (or one first derivative) of every mode at arbitrary points.

        Returns shape (n_modes, n_points).
        """
        pts = _check_points(pts, self.dim)
        tables = self._axis_tables([pts[:, a] for a in range(self.dim)], deriv_axis)
        return self._mode_rows(tables)

    def eval_modes_derivative(self, pts: np.ndarray, alpha) -> np.ndarray:
        """D^alpha of every mode for a multi-index alpha (one entry per axis)."""
        pts = _check_points(pts, self.dim)
        offset = 1 if self.kind == "sin" else 0
        out = None
        for a in range(self.dim):
            tab = _axis_trig(self.kind, self.kmax, pts[:, a], deriv=int(alpha[a]))
            rows = tab[self.modes[:, a] - offset]
            out = rows if out is None else out * rows
        return self.norms[:, None] * out

    def synthesize(self, coeffs: np.ndarray, pts=None, deriv_axis=None) -> np.ndarray:
        """Spectral synthesis sum_k c_k w_k(x); uses cached grid tables when
        pts is None."""
        coeffs = np.asarray(coeffs, dtype=float)
        if pts is None:
            table = self.node_values if deriv_axis is None else self.node_grads[deriv_axis]
        else:
            table = self.eval_modes(pts, deriv_axis=deriv_axis)
        return coeffs @ table

    def gradient(self, coeffs: np.ndarray, pts=None) -> np.ndarray:
        """Gradient synthesis, shape (dim, n_points)."""
        return np.stack(
            [self.synthesize(coeffs, pts, deriv_axis=a) for a in range(self.dim)]
        )


class SineBasis(_TensorBasis):
    """Tensorized sine modes prod_j sqrt(2) sin(k_j pi x_j), 1 <= k_j <= kmax.

    Vanish on the boundary, L2-orthonormal, and diagonalize the (unweighted)
    inner product sum_{|alpha|<=3} (D^alpha u, D^alpha v); `eigenvalues` holds
    the diagonal."""

    kind = "sin"

    def _make_modes(self):
        rng = range(1, self.kmax + 1)
        return np.array(list(itertools.product(rng, repeat=self.dim)), dtype=int)

    def _norm_factors(self):
        return np.full(self.n_modes if hasattr(self, "n_modes") else len(self.modes),
                       SQRT2 ** self.dim)

    def __init__(self, dim, kmax, quad):
        super().__init__(dim, kmax, quad)
        self.eigenvalues = self._sobolev_eigenvalues()

    def _sobolev_eigenvalues(self) -> np.ndarray:
        lams = np.zeros(self.n_modes)
        alphas = [
            a for a in itertools.product(range(4), repeat=self.dim) if sum(a) <= 3
        ]
        ksq = (self.modes * np.pi) ** 2
        for alpha in alphas:
            term = np.ones(self.n_modes)
            for a in range(self.dim):
                term = term * ksq[:, a] ** alpha[a]
            lams += term
        return lams


class CosineBasis(_TensorBasis):
    """Tensorized cosine modes with k_j >= 0 (the constant mode included, but
    skipped by the Poisson solve).  Neumann compatible; -Laplacian eigenvalue
    pi^2 |k|^2 stored in `laplace_eigenvalues`."""

    kind = "cos"

    def _make_modes(self):
        rng = range(0, self.kmax + 1)
        return np.array(list(itertools.product(rng, repeat=self.dim)), dtype=int)

    def _norm_factors(self):
        return np.where(self.modes == 0, 1.0, SQRT2).prod(axis=1)

    def __init__(self, dim, kmax, quad):
        super().__init__(dim, kmax, quad)
        self.laplace_eigenvalues = np.pi**2 * (self.modes**2).sum(axis=1).astype(float)


def build_bases(dim: int, kmax: int, quad: Quadrature):
    """Construct the velocity (sine) and potential (cosine) bases on `quad`.

    Requires the grid to resolve the band: order*panels >= 2*kmax + 2 per axis.
    """
    if dim not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {dim}")
    if kmax < 1:
        raise ValueError("need at least one mode per axis")
    if quad.dim != dim:
        raise ValueError("quadrature dimension mismatch")
    if quad.n_axis < 2 * kmax + 2:
        raise ResolutionError(
            f"{quad.n_axis} nodes per axis underresolve {kmax} modes "
            f"(need >= {2 * kmax + 2})"
        )
    return SineBasis(dim, kmax, quad), CosineBasis(dim, kmax, quad)


def project(values: np.ndarray, basis: _TensorBasis, quad: Quadrature | None = None) -> np.ndarray:
    """L2 projection by quadrature: c_i = sum_nodes w * f * w_i."""
    quad = quad or basis.quad
    return basis.node_values @ (quad.weights * np.asarray(values, dtype=float))


def evaluate(coeffs: np.ndarray, basis: _TensorBasis, pts, deriv_axis=None) -> np.ndarray:
    """Pointwise synthesis of a coefficient vector at arbitrary points."""
    return basis.synthesize(coeffs, pts=np.atleast_2d(pts), deriv_axis=deriv_axis)


def integrate(values: np.ndarray, quad: Quadrature) -> float:
    """Quadrature integral with deterministic (fixed-order) summation."""
    return float(np.dot(quad.weights, np.asarray(values, dtype=float)))


@dataclass
class Field:
    """Scalar field held either as node values or as basis coefficients.

    `rep` records which representation `data` is in ("nodes" or "coeffs")."""

    data: np.ndarray
    rep: str = "nodes"
    basis: object | None = None

    def node_values(self, quad: Quadrature | None = None) -> np.ndarray:
        if self.rep == "nodes":
            return self.data
        return self.basis.synthesize(self.data)

    def coefficients(self, basis=None, quad=None) -> np.ndarray:
        if self.rep == "coeffs":
            return self.data
        basis = basis or self.basis
        return project(self.data, basis, quad)


@dataclass
class VectorField:
    """Vector field; leading axis of `data` is the component index."""

    data: np.ndarray
    rep: str = "nodes"
    basis: object | None = None

    def node_values(self, quad=None) -> np.ndarray:
        if self.rep == "nodes":
            return self.data
        return np.stack([self.basis.synthesize(c) for c in self.data])

    def coefficients(self, basis=None, quad=None) -> np.ndarray:
        if self.rep == "coeffs":
            return self.data
        basis = basis or self.basis
        return np.stack([project(c, basis, quad) for c in self.data])


def as_node_values(field, basis=None, quad=None) -> np.ndarray:
    """Accept a Field/VectorField or a plain array of node values."""
    if isinstance(field, (Field, VectorField)):
        return field.node_values(quad)
    return np.asarray(field, dtype=float)
