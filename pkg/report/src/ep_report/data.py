"""Readers for the persisted run formats: commented CSV, manifests, sweep
indexes.  This package never imports or executes the solver; everything is
reconstructed from the documented on-disk formats."""

from __future__ import annotations

import json
import os

import numpy as np


class ReportError(ValueError):
    """A requested figure has no input file or column to draw from."""


def read_csv_columns(path):
    """CSV with '#' comment lines, a header row and float cells, as
    {column: array}."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    if not lines:
        raise ReportError(f"{path}: no header row")
    header = lines[0].split(",")
    rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:] if ln]
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def require_columns(columns: dict, names, path) -> None:
    missing = [n for n in names if n not in columns]
    if missing:
        raise ReportError(f"{path}: missing column(s) {', '.join(missing)}")


def read_manifest(run_dir):
    path = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def read_sweep_index(run_dir):
    path = os.path.join(run_dir, "sweep.json")
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def energy_members(run_dir):
    """(label, energy columns) pairs for a run directory.

    A sweep directory yields one entry per completed member ordered by
    decreasing eps; a plain run directory yields itself.
    """
    index = read_sweep_index(run_dir)
    out = []
    if index is not None:
        for m in sorted(index["members"], key=lambda m: -m["eps"]):
            if m["status"] != "completed":
                continue
            path = os.path.join(run_dir, m["dir"], "energy.csv")
            if os.path.exists(path):
                out.append((f"eps={m['eps']:.0e}", read_csv_columns(path)))
        return out
    path = os.path.join(run_dir, "energy.csv")
    if os.path.exists(path):
        out.append(("run", read_csv_columns(path)))
    return out
