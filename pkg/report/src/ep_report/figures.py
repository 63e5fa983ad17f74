"""Figure rendering: deterministic static files from persisted CSV tables.

Every figure draws the CSV values untouched (the arrays handed to matplotlib
are the parsed columns); whatever is fitted or derived for annotation is
drawn as separate overlay series.  Sizes, style and output bytes are fixed:
re-rendering the same inputs reproduces identical files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import (
    ReportError,
    energy_members,
    read_csv_columns,
    read_manifest,
    read_sweep_index,
    require_columns,
)

FIGSIZE = (7.0, 4.2)
DPI = 110
ENERGY_PARTS = ("kinetic", "poisson", "confinement", "interaction", "total")
RESIDUAL_KEYS = ("res_rho_l1", "res_momentum_l1", "res_convective_l1",
                 "res_kinetic_l1", "res_gradphi_l2")

ALL_FIGURES = ("energy_decomposition", "admissibility_residual",
               "relative_energy", "identifications", "defect_heatmap",
               "young_histograms")


@dataclass
class ReportSpec:
    """What to render: an input run/sweep directory, an output directory and
    the figure list (None selects every figure whose inputs exist)."""

    run_dir: str
    out_dir: str
    figures: tuple | None = None
    max_hist_cells: int = 4


@dataclass
class FigureRecord:
    """One rendered figure: the output file plus the exact arrays plotted."""

    name: str
    filename: str
    data: dict = field(default_factory=dict)


def _save(fig, spec, name):
    path = os.path.join(spec.out_dir, f"{name}.png")
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def _fig():
    return plt.figure(figsize=FIGSIZE)


def _render_energy(spec, members):
    rec = FigureRecord("energy_decomposition", "energy_decomposition.png")
    fig = _fig()
    ax = fig.add_subplot(111)
    for label, cols in members:
        require_columns(cols, ("t",) + ENERGY_PARTS, "energy.csv")
        for part in ENERGY_PARTS:
            style = "-" if part == "total" else "--"
            ax.plot(cols["t"], cols[part], style, lw=1.2,
                    label=f"{label}:{part}" if len(members) > 1 else part)
            rec.data[f"{label}:{part}"] = cols[part]
        rec.data[f"{label}:t"] = cols["t"]
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(fontsize=7, ncol=2)
    ax.set_title("energy decomposition")
    _save(fig, spec, "energy_decomposition")
    return rec


def _render_residual(spec, members):
    rec = FigureRecord("admissibility_residual", "admissibility_residual.png")
    fig = _fig()
    ax = fig.add_subplot(111)
    for label, cols in members:
        require_columns(cols, ("t", "residual"), "energy.csv")
        ax.plot(cols["t"], cols["residual"], marker="o", ms=3, lw=1.0,
                label=label)
        rec.data[f"{label}:t"] = cols["t"]
        rec.data[f"{label}:residual"] = cols["residual"]
    ax.set_xlabel("t")
    ax.set_ylabel("E(t) + dissipation - E(0)")
    ax.legend(fontsize=8)
    ax.set_title("admissibility residual")
    _save(fig, spec, "admissibility_residual")
    return rec


def _render_relative_energy(spec):
    path = os.path.join(spec.run_dir, "relative_energy.csv")
    if not os.path.exists(path):
        raise ReportError(f"relative_energy figure needs {path}")
    cols = read_csv_columns(path)
    require_columns(cols, ("t", "total"), path)
    t, total = cols["t"], cols["total"]
    rec = FigureRecord("relative_energy", "relative_energy.png",
                       data={"t": t, "total": total})
    mask = total > 0
    if mask.sum() < 2:
        return rec, "relative_energy: series identically zero, figure skipped"
    fig = _fig()
    ax = fig.add_subplot(111)
    ax.semilogy(t, np.where(total > 0, total, np.nan), marker="o", ms=3,
                lw=1.0, label="E_rel(t)")
    slope, intercept = np.polyfit(t[mask], np.log(total[mask]), 1)
    ax.semilogy(t[mask], np.exp(intercept + slope * t[mask]), "--", lw=1.0,
                label=f"fit rate {slope:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("relative energy")
    ax.legend(fontsize=8)
    ax.set_title("relative energy and fitted rate")
    _save(fig, spec, "relative_energy")
    return rec, None


def _render_identifications(spec):
    path = os.path.join(spec.run_dir, "identifications.csv")
    if not os.path.exists(path):
        raise ReportError(f"identifications figure needs {path}")
    cols = read_csv_columns(path)
    require_columns(cols, ("eps",) + RESIDUAL_KEYS, path)
    rec = FigureRecord("identifications", "identifications.png",
                       data={k: cols[k] for k in ("eps",) + RESIDUAL_KEYS})
    if len(cols["eps"]) == 0:
        return rec, "identifications: empty table, figure skipped"
    fig = _fig()
    ax = fig.add_subplot(111)
    for key in RESIDUAL_KEYS:
        ax.loglog(cols["eps"], cols[key], marker="o", ms=4, lw=1.0, label=key)
    ax.set_xlabel("eps")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    ax.set_title("identification residuals across the family")
    _save(fig, spec, "identifications")
    return rec, None


def _render_defects(spec):
    path = os.path.join(spec.run_dir, "defects.csv")
    if not os.path.exists(path):
        raise ReportError(f"defect_heatmap figure needs {path}")
    cols = read_csv_columns(path)
    require_columns(cols, ("cell",), path)
    tags = [k for k in cols if k != "cell"]
    rec = FigureRecord("defect_heatmap", "defect_heatmap.png",
                       data={k: cols[k] for k in cols})
    if not tags or len(cols["cell"]) == 0:
        return rec, "defect_heatmap: empty table, figure skipped"
    matrix = np.vstack([cols[t] for t in tags])
    fig = _fig()
    ax = fig.add_subplot(111)
    im = ax.imshow(matrix, aspect="auto", cmap="coolwarm",
                   vmin=-np.abs(matrix).max() or -1, vmax=np.abs(matrix).max() or 1)
    ax.set_yticks(range(len(tags)), tags, fontsize=7)
    ax.set_xlabel("spatial cell")
    ax.set_title("concentration defect mass per cell")
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, spec, "defect_heatmap")
    return rec, None


def _render_young_hist(spec):
    path = os.path.join(spec.run_dir, "young_hist.csv")
    if not os.path.exists(path):
        raise ReportError(f"young_histograms figure needs {path}")
    cols = read_csv_columns(path)
    require_columns(cols, ("cell", "z0", "weight"), path)
    rec = FigureRecord("young_histograms", "young_histograms.png",
                       data={k: cols[k] for k in ("cell", "z0", "weight")})
    if len(cols["cell"]) == 0:
        return rec, "young_histograms: empty table, figure skipped"
    cells = np.unique(cols["cell"].astype(int))[: spec.max_hist_cells]
    fig = plt.figure(figsize=(7.0, 2.2 * max(1, len(cells))))
    for i, cell in enumerate(cells):
        ax = fig.add_subplot(len(cells), 1, i + 1)
        sel = cols["cell"].astype(int) == cell
        # density-coordinate marginal of the cell histogram
        svals = cols["z0"][sel]
        wts = cols["weight"][sel]
        uniq = np.unique(svals)
        marg = np.array([wts[svals == s].sum() for s in uniq])
        width = 0.8 * ((np.ptp(uniq) / max(len(uniq) - 1, 1)) or 1.0)
        ax.bar(uniq, marg, width=width)
        ax.set_ylabel(f"cell {cell}", fontsize=8)
    fig.suptitle("density-coordinate histogram per cell")
    fig.supxlabel("s")
    _save(fig, spec, "young_histograms")
    return rec, None


def available_figures(run_dir) -> tuple:
    """Figures whose input files exist under run_dir."""
    out = []
    if energy_members(run_dir):
        out += ["energy_decomposition", "admissibility_residual"]
    for name, fname in (("relative_energy", "relative_energy.csv"),
                        ("identifications", "identifications.csv"),
                        ("defect_heatmap", "defects.csv"),
                        ("young_histograms", "young_hist.csv")):
        if os.path.exists(os.path.join(run_dir, fname)):
            out.append(name)
    return tuple(out)


def render(spec: ReportSpec):
    """Render the requested figures and the index page.

    Returns (records, warnings).  Missing inputs for an explicitly requested
    figure raise ReportError before anything is written; empty series are
    skipped with a warning collected into the index.
    """
    if not os.path.isdir(spec.run_dir):
        raise ReportError(f"{spec.run_dir} is not a directory")
    wanted = spec.figures if spec.figures is not None else available_figures(spec.run_dir)
    if not wanted:
        raise ReportError(f"{spec.run_dir} holds no renderable tables")
    unknown = [f for f in wanted if f not in ALL_FIGURES]
    if unknown:
        raise ReportError(f"unknown figure(s): {', '.join(unknown)}")

    members = energy_members(spec.run_dir)
    if not members and any(f in wanted for f in
                           ("energy_decomposition", "admissibility_residual")):
        raise ReportError(f"no energy.csv found under {spec.run_dir}")

    # validate inputs for every requested figure before rendering anything
    for name in wanted:
        if name == "relative_energy" and not os.path.exists(
                os.path.join(spec.run_dir, "relative_energy.csv")):
            raise ReportError("relative_energy figure requested but "
                              "relative_energy.csv is missing")
        if name == "identifications" and not os.path.exists(
                os.path.join(spec.run_dir, "identifications.csv")):
            raise ReportError("identifications figure requested but "
                              "identifications.csv is missing")
        if name == "defect_heatmap" and not os.path.exists(
                os.path.join(spec.run_dir, "defects.csv")):
            raise ReportError("defect_heatmap figure requested but "
                              "defects.csv is missing")
        if name == "young_histograms" and not os.path.exists(
                os.path.join(spec.run_dir, "young_hist.csv")):
            raise ReportError("young_histograms figure requested but "
                              "young_hist.csv is missing")

    os.makedirs(spec.out_dir, exist_ok=True)
    records, warnings = [], []

    def keep(result):
        if isinstance(result, tuple):
            rec, warning = result
            if warning:
                warnings.append(warning)
            records.append(rec)
        else:
            records.append(result)

    for name in wanted:
        if name == "energy_decomposition":
            keep(_render_energy(spec, members))
        elif name == "admissibility_residual":
            keep(_render_residual(spec, members))
        elif name == "relative_energy":
            keep(_render_relative_energy(spec))
        elif name == "identifications":
            keep(_render_identifications(spec))
        elif name == "defect_heatmap":
            keep(_render_defects(spec))
        elif name == "young_histograms":
            keep(_render_young_hist(spec))

    from .html import write_index

    manifest = read_manifest(spec.run_dir)
    sweep = read_sweep_index(spec.run_dir)
    write_index(spec, records, warnings, manifest, sweep)
    return records, warnings
