"""Empirical Young measures, concentration defects and the inequality suite.

The parameterized measure of an approximating family is surrogated by
cell-averaged histograms of the state samples z = (rho, u, grad Phi) of the
finest member: each spatial cell carries a sub-probability histogram over the
state space with an overflow bin beyond a truncation radius (the numerical
stand-in for tightness failure).  Concentration defects compare exact cell
averages of a nonlinearity against the truncated histogram moment, per cell,
so escaping mass shows up as a localized defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Quadrature

DEFAULT_LADDER = (1, 2, 4, 8, 16)
DEFAULT_BINS = 32


class BinningError(ValueError):
    pass


@dataclass(frozen=True)
class TruncationLadder:
    """Piecewise-linear cutoffs theta^k: 1 on [0,k], 0 beyond k+1, used to
    realize moments of unbounded nonlinearities as monotone limits."""

    levels: tuple = DEFAULT_LADDER

    def __post_init__(self):
        if list(self.levels) != sorted(self.levels) or self.levels[0] < 1:
            raise ValueError("ladder levels must be increasing and >= 1")

    def theta(self, radius: np.ndarray, k: int) -> np.ndarray:
        r = np.asarray(radius, dtype=float)
        return np.clip(k + 1.0 - r, 0.0, 1.0)

    @property
    def top(self) -> int:
        return self.levels[-1]


# ----------------------------------------------------------------------------
# tagged nonlinearities f(s, v, F); v and F are (d, m) arrays, s is (m,)


def _f_rho(s, v, F):
    return s


def _f_rho_u(s, v, F):
    return s * v


def _f_rho_u_tensor(s, v, F):
    return s * np.einsum("am,bm->abm", v, v)


def _f_rho_usq(s, v, F):
    return s * (v**2).sum(axis=0)


def _f_rho_absu(s, v, F):
    return s * np.sqrt((v**2).sum(axis=0))


def _f_gradphi_tensor(s, v, F):
    return np.einsum("am,bm->abm", F, F)


def _f_gradphi_sq(s, v, F):
    return (F**2).sum(axis=0)


FUNCTION_TAGS = {
    "rho": _f_rho,
    "rho_u": _f_rho_u,
    "rho_u_tensor": _f_rho_u_tensor,
    "rho_usq": _f_rho_usq,
    "rho_absu": _f_rho_absu,
    "gradphi_tensor": _f_gradphi_tensor,
    "gradphi_sq": _f_gradphi_sq,
}


def _resolve_tag(f):
    if callable(f):
        return f
    try:
        return FUNCTION_TAGS[f]
    except KeyError:
        raise KeyError(f"unknown function tag {f!r}; known: {sorted(FUNCTION_TAGS)}")


def _state_samples(snapshot: dict) -> np.ndarray:
    """Stack (rho, u..., gradphi...) into one (state_dim, n_nodes) array."""
    rho = np.asarray(snapshot["rho"], dtype=float)
    u = np.atleast_2d(snapshot["u"])
    g = np.atleast_2d(snapshot["gradphi"])
    return np.vstack([rho[None, :], u, g])


def _split_state(z: np.ndarray, dim: int):
    return z[0], z[1 : 1 + dim], z[1 + dim : 1 + 2 * dim]


@dataclass
class EmpiricalYoungMeasure:
    """Cell-binned sub-probability histograms over (s, v, F)."""

    dim: int                    # spatial dimension d
    cells_per_axis: int
    radius: float
    edges: list                 # per state coordinate, shared by all cells
    hist: list                  # per cell: dict {bin index tuple: weight}
    overflow: np.ndarray        # per cell: weight beyond the truncation radius
    cell_totals: np.ndarray     # quadrature weight per cell (normalization)

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.cells_per_axis ** (-self.dim)

    def midpoints(self, cell: int) -> tuple[np.ndarray, np.ndarray]:
        """(state_dim, n_occupied) midpoint coordinates and their weights."""
        entries = self.hist[cell]
        if not entries:
            sd = 1 + 2 * self.dim
            return np.zeros((sd, 0)), np.zeros(0)
        keys = np.array(list(entries.keys()), dtype=int)      # (m, state_dim)
        weights = np.array(list(entries.values()), dtype=float)
        mids = np.stack(
            [0.5 * (self.edges[c][keys[:, c]] + self.edges[c][keys[:, c] + 1])
             for c in range(keys.shape[1])]
        )
        return mids, weights

    def total_weights(self) -> np.ndarray:
        """Finite-bin weight + overflow per cell; equals one by construction."""
        fin = np.array([sum(h.values()) for h in self.hist])
        return fin + self.overflow


def _cell_ids(quad: Quadrature, cells_per_axis: int) -> np.ndarray:
    idx = np.minimum((quad.nodes * cells_per_axis).astype(int), cells_per_axis - 1)
    flat = idx[:, 0]
    for a in range(1, quad.dim):
        flat = flat * cells_per_axis + idx[:, a]
    return flat


def coordinate_ranges(snapshot: dict, pad: float = 1.0) -> list:
    """Per-coordinate bin ranges from a member's samples: [0, smax] for the
    density coordinate, symmetric for velocity and field coordinates."""
    z = _state_samples(snapshot)
    ranges = [(0.0, pad * max(float(z[0].max()), 1e-12))]
    for c in range(1, z.shape[0]):
        m = pad * max(float(np.abs(z[c]).max()), 1e-12)
        ranges.append((-m, m))
    return ranges


def build_empirical_measure(snapshot: dict, quad: Quadrature, cells_per_axis: int,
                            bins: int = DEFAULT_BINS,
                            radius: float | None = None,
                            ranges: list | None = None) -> EmpiricalYoungMeasure:
    """Bin one member's state samples into per-cell histograms.

    Bin edges are per coordinate (density, velocity components, field
    components each use their own range).  Samples whose state vector leaves
    the truncation ball |z| > radius, or any coordinate range, land in the
    overflow bin; finite weight plus overflow is exactly one per cell.
    """
    dim = quad.dim
    if cells_per_axis > quad.n_axis:
        raise BinningError(
            f"{cells_per_axis} cells per axis finer than the {quad.n_axis}-node grid")
    z = _state_samples(snapshot)
    state_dim = z.shape[0]
    if radius is None:
        radius = 10.0 * float(np.abs(z).max())
    radius = max(radius, 1e-12)
    if ranges is None:
        ranges = coordinate_ranges(snapshot)

    # Extend each range by half a bin so samples sitting exactly on a range
    # endpoint (zero density, zero velocity) bin at a midpoint equal to that
    # value instead of being offset by half a bin width.
    edges = []
    for lo, hi in ranges:
        lo, hi = max(lo, -radius), min(hi, radius)
        width = (hi - lo) / max(bins - 1, 1)
        if width <= 0.0:
            width = max(abs(hi), 1e-12)
        edges.append(np.linspace(lo - width / 2.0, hi + width / 2.0, bins + 1))

    cell_of = _cell_ids(quad, cells_per_axis)
    n_cells = cells_per_axis**dim

    cell_totals = np.zeros(n_cells)
    np.add.at(cell_totals, cell_of, quad.weights)

    # Per-coordinate bin index; out-of-range or |z| > radius goes to overflow.
    binned = np.empty((state_dim, quad.n_nodes), dtype=int)
    inside = np.sqrt((z**2).sum(axis=0)) <= radius
    for c in range(state_dim):
        lo, hi = edges[c][0], edges[c][-1]
        width = (hi - lo) / bins
        ix = np.floor((z[c] - lo) / width).astype(int)
        inside &= (z[c] >= lo) & (z[c] <= hi)
        binned[c] = np.clip(ix, 0, bins - 1)

    hist = [dict() for _ in range(n_cells)]
    overflow = np.zeros(n_cells)
    for n in range(quad.n_nodes):
        cell = cell_of[n]
        wt = quad.weights[n] / cell_totals[cell]
        if inside[n]:
            key = tuple(binned[:, n])
            hist[cell][key] = hist[cell].get(key, 0.0) + wt
        else:
            overflow[cell] += wt

    return EmpiricalYoungMeasure(dim=dim, cells_per_axis=cells_per_axis,
                                 radius=radius, edges=edges, hist=hist,
                                 overflow=overflow, cell_totals=cell_totals)


def moment(measure: EmpiricalYoungMeasure, f,
           ladder: TruncationLadder | None = None):
    """Truncated moments <nu; theta^k f> per cell and ladder level.

    Returns {level: array (n_cells, *value_shape)} plus key 'limit' holding
    the top level (the monotone-limit estimate).  Finite bins are evaluated at
    their midpoints; the overflow bin is beyond every cutoff and contributes
    nothing.
    """
    ladder = ladder or TruncationLadder()
    func = _resolve_tag(f)
    per_level = {}
    sample_cell = None
    for cell in range(measure.n_cells):
        mids, wts = measure.midpoints(cell)
        s, v, F = _split_state(mids, measure.dim)
        vals = np.asarray(func(s, v, F), dtype=float)
        radius = np.sqrt((mids**2).sum(axis=0))
        if sample_cell is None:
            sample_cell = vals.shape[:-1] if vals.ndim else ()
        for k in ladder.levels:
            acc = per_level.setdefault(k, [])
            theta = ladder.theta(radius, k)
            acc.append((vals * theta * wts).sum(axis=-1) if vals.size
                       else np.zeros(sample_cell))
    out = {k: np.stack(vs) for k, vs in per_level.items()}
    out["limit"] = out[ladder.top]
    return out


@dataclass
class ConcentrationDefect:
    """Per-cell defect of one nonlinearity: exact cell average minus truncated
    histogram moment (signed for vector/tensor tags)."""

    tag: str
    values: np.ndarray        # (n_cells, *value_shape), defect density
    mass: np.ndarray          # values * cell volume
    per_level: dict           # ladder-level sensitivity of the moment
    cells_per_axis: int
    radius: float


def cell_average(snapshot: dict, quad: Quadrature, cells_per_axis: int, f):
    """Exact per-cell averages of f(z) from the samples (no binning)."""
    func = _resolve_tag(f)
    z = _state_samples(snapshot)
    s, v, F = _split_state(z, quad.dim)
    vals = np.asarray(func(s, v, F), dtype=float)   # (*value_shape, n_nodes)
    cell_of = _cell_ids(quad, cells_per_axis)
    n_cells = cells_per_axis**quad.dim
    totals = np.zeros(n_cells)
    np.add.at(totals, cell_of, quad.weights)
    shape = vals.shape[:-1]
    flat = vals.reshape(-1, quad.n_nodes)
    out = np.zeros((flat.shape[0], n_cells))
    for r in range(flat.shape[0]):
        np.add.at(out[r], cell_of, quad.weights * flat[r])
    out /= totals
    return np.moveaxis(out, -1, 0).reshape((n_cells,) + shape)


def concentration_defect(members, quad: Quadrature, f, cells_per_axis: int,
                         bins: int = DEFAULT_BINS,
                         ladder: TruncationLadder | None = None,
                         radius: float | None = None) -> ConcentrationDefect:
    """Defect of a family: finest-member cell average of f(z) minus the
    truncated moment of the empirical measure built from the finest member.

    `members` is ordered coarsest to finest; the default truncation radius is
    ten times the coarsest member's sample magnitude, so genuinely
    concentrating families escape every ladder level.
    """
    if len(members) < 2:
        raise BinningError("need at least two family members")
    ladder = ladder or TruncationLadder()
    coarsest, finest = members[0], members[-1]
    if radius is None:
        radius = 10.0 * float(np.abs(_state_samples(coarsest)).max())
    ranges = coordinate_ranges(coarsest)

    tag = f if isinstance(f, str) else getattr(f, "__name__", "custom")
    measure = build_empirical_measure(finest, quad, cells_per_axis, bins, radius,
                                      ranges=ranges)
    moments = moment(measure, f, ladder)
    avg = cell_average(finest, quad, cells_per_axis, f)
    values = avg - moments["limit"]
    return ConcentrationDefect(tag=tag, values=values,
                               mass=values * measure.cell_volume,
                               per_level={k: avg - moments[k] for k in ladder.levels},
                               cells_per_axis=cells_per_axis, radius=radius)


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_violation: float
    detail: str = ""


def domination_check(defects: dict, dim: int, tol: float | None = None):
    """Per-cell domination relations between concentration defects:
    |m^{rho u (x) u}|_1 <= d m^{rho|u|^2}, |m^{F (x) F}|_1 <= d m^{|F|^2},
    |m^{rho|u|}| <= m^rho + m^{rho|u|^2}.

    The default tolerance is two percent of the magnitudes involved (the
    binning resolution of the defect estimator); pass an absolute one to
    tighten."""
    reports = []

    def run(name, lhs, rhs):
        slack = tol if tol is not None else (
            0.02 * max(np.abs(lhs).max(initial=0.0),
                       np.abs(rhs).max(initial=0.0)) + 1e-12)
        viol = float((lhs - rhs - slack).max(initial=0.0))
        reports.append(CheckReport(name=name, passed=bool(viol <= 0.0),
                                   max_violation=max(viol, 0.0),
                                   detail=f"slack={slack:.3e}"))

    if "rho_u_tensor" in defects and "rho_usq" in defects:
        lhs = np.abs(defects["rho_u_tensor"].values).sum(axis=(1, 2))
        run("tensor<=d*kinetic", lhs, dim * defects["rho_usq"].values)
    if "gradphi_tensor" in defects and "gradphi_sq" in defects:
        lhs = np.abs(defects["gradphi_tensor"].values).sum(axis=(1, 2))
        run("field-tensor<=d*field", lhs, dim * defects["gradphi_sq"].values)
    if "rho_absu" in defects and "rho" in defects and "rho_usq" in defects:
        lhs = np.abs(defects["rho_absu"].values)
        run("|m^(rho|u|)|<=m^rho+m^(rho|u|^2)",
            lhs, defects["rho"].values + defects["rho_usq"].values)
    return reports


def projection_consistency(members, quad: Quadrature, alphas,
                           cells_per_axis: int, bins: int = DEFAULT_BINS,
                           radius: float | None = None):
    """Compare the density marginal of the joint histogram (restricted to bins
    with midpoint s > alpha) against the histogram of the density samples
    restricted to s > alpha, per cell.  Mismatch is confined to the bins
    straddling alpha, so it is bounded by the binning resolution; the returned
    rows carry the L1 distance per alpha for trend inspection."""
    finest = members[-1]
    z = _state_samples(finest)
    if radius is None:
        radius = 10.0 * float(np.abs(_state_samples(members[0])).max())
    measure = build_empirical_measure(finest, quad, cells_per_axis, bins, radius,
                                      ranges=coordinate_ranges(members[0]))
    s_edges = measure.edges[0]
    nb = len(s_edges) - 1
    width = s_edges[1] - s_edges[0]
    cell_of = _cell_ids(quad, cells_per_axis)
    n_cells = measure.n_cells

    rows = []
    for alpha in alphas:
        # (a) marginal of the joint histogram over bins with s-midpoint > alpha
        marg = np.zeros((n_cells, nb))
        for cell in range(n_cells):
            for key, wt in measure.hist[cell].items():
                smid = 0.5 * (s_edges[key[0]] + s_edges[key[0] + 1])
                if smid > alpha:
                    marg[cell, key[0]] += wt
        # (b) histogram of the density samples restricted by sample value
        direct = np.zeros((n_cells, nb))
        s = z[0]
        keep = (s > alpha) & (s <= s_edges[-1]) & (np.sqrt((z**2).sum(axis=0)) <= radius)
        ix = np.clip(np.floor((s - s_edges[0]) / width).astype(int), 0, nb - 1)
        for n in np.flatnonzero(keep):
            cell = cell_of[n]
            direct[cell, ix[n]] += quad.weights[n] / measure.cell_totals[cell]
        dist = np.abs(marg - direct).sum(axis=1)
        rows.append({"alpha": float(alpha), "l1_distance": float(dist.max()),
                     "mean_distance": float(dist.mean())})
    return rows


# ----------------------------------------------------------------------------
# sampled verification of the two elementary inequalities


@dataclass
class InequalitySuiteReport:
    n_samples: int
    n_checks: int
    n_failures: int
    max_margin_violation: float
    trace_equality_gap: float

    @property
    def all_passed(self) -> bool:
        return self.n_failures == 0


def _pairwise_bound_constant(ui, uj, Ui, Uj, delta, u_norm_inf, grid):
    """C_delta for one (i, j) sample in the intermediate regime, evaluated by
    bounded search of sup |v_i v_j + U_j v_i + U_i v_j| over the unit square
    (the search set includes the sample itself, matching the proof's sup)."""
    vi, vj = ui - Ui, uj - Uj
    p_grid = np.abs(grid[0] * grid[1] + Uj * grid[0] + Ui * grid[1]).max()
    p_self = abs(vi * vj + Uj * vi + Ui * vj)
    return max(p_grid, p_self) / delta**2


def inequality_suite(n_samples: int, dim: int, seed: int = 0,
                     box: float = 10.0) -> InequalitySuiteReport:
    """Seeded verification of the pairwise product bound

        |u_i u_j - U_i U_j| <= c delta + C_delta (|u_i-U_i|^2 + |u_j-U_j|^2)

    with c = 2||U||_inf + 1 and the piecewise constants of its proof, plus the
    trace bound sum |a_ij| <= d tr(A) for A = v (x) v including the tight
    all-ones equality case."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-box, box, size=(n_samples, dim))
    U = rng.uniform(-box, box, size=(n_samples, dim))
    deltas = rng.uniform(1e-3, 1.0 - 1e-3, size=n_samples)

    ax = np.linspace(-1.0, 1.0, 41)
    grid = np.stack(np.meshgrid(ax, ax, indexing="ij")).reshape(2, -1)

    n_checks = 0
    n_fail = 0
    worst = 0.0
    for n in range(n_samples):
        Un_inf = np.abs(U[n]).max()
        c = 2.0 * Un_inf + 1.0
        delta = deltas[n]
        v = u[n] - U[n]
        for i in range(dim):
            for j in range(dim):
                lhs = abs(u[n, i] * u[n, j] - U[n, i] * U[n, j])
                vi, vj = abs(v[i]), abs(v[j])
                if min(vi, vj) > 1.0:
                    C = 1.0 + Un_inf
                elif max(vi, vj) > 1.0:
                    C = 1.0 + 2.0 * Un_inf
                elif max(vi, vj) <= delta:
                    C = 0.0
                else:
                    C = _pairwise_bound_constant(u[n, i], u[n, j], U[n, i],
                                                 U[n, j], delta, Un_inf, grid)
                rhs = c * delta + C * (v[i] ** 2 + v[j] ** 2)
                n_checks += 1
                if lhs > rhs:
                    n_fail += 1
                    worst = max(worst, lhs - rhs)
        # norm variant by summing the diagonal inequalities
        lhs = abs((u[n] ** 2).sum() - (U[n] ** 2).sum())
        rhs = dim * c * delta
        for i in range(dim):
            vi = abs(v[i])
            if vi > 1.0:
                C = 1.0 + 2.0 * Un_inf
            elif vi <= delta:
                C = 0.0
            else:
                C = _pairwise_bound_constant(u[n, i], u[n, i], U[n, i], U[n, i],
                                             delta, Un_inf, grid)
            rhs += 2.0 * C * v[i] ** 2
        n_checks += 1
        if lhs > rhs:
            n_fail += 1
            worst = max(worst, lhs - rhs)
        # trace bound for A = v (x) v
        A = np.abs(np.outer(u[n], u[n])).sum()
        tr = dim * (u[n] ** 2).sum()
        n_checks += 1
        if A > tr + 1e-12 * max(tr, 1.0):
            n_fail += 1
            worst = max(worst, A - tr)

    ones = np.ones(dim)
    gap = abs(np.abs(np.outer(ones, ones)).sum() - dim * (ones**2).sum())
    return InequalitySuiteReport(n_samples=n_samples, n_checks=n_checks,
                                 n_failures=n_fail, max_margin_violation=worst,
                                 trace_equality_gap=float(gap))
