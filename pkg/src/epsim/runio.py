"""Run persistence: energy CSV, binary field snapshots, manifests, sweeps.

Time series go to CSV with a commented header defining every column; field
snapshots go to a little-endian binary format with a one-line JSON text
header (shape, dtype, grid spec).  Identical configs produce byte-identical
CSV and snapshot files; the manifest carries wall times and is the only
non-reproducible artifact.  A manifest is written even when a run aborts.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import config_to_text
from .dynamics import SimConfig, Trajectory, simulate

SNAPSHOT_MAGIC = "EPSIM-SNAPSHOT 1"

ENERGY_COLUMNS = [
    ("t", "output time"),
    ("kinetic", "int rho |u|^2 / 2"),
    ("poisson", "int |grad Phi|^2 / 2"),
    ("confinement", "int rho V"),
    ("interaction", "int rho (W*rho) / 2"),
    ("total", "sum of the four energies"),
    ("diss_friction", "accumulated gamma int rho |u|^2 dt"),
    ("diss_eps", "accumulated eps ((u,u)) dt"),
    ("diss_align", "accumulated alignment dissipation dt"),
    ("residual", "total + dissipations - total(0); admissible when <= slack"),
    ("mass_particles", "transported-measure mass (conserved by construction)"),
    ("mass_field", "quadrature mass of the reconstructed density field"),
    ("min_density", "minimum of the reconstructed density field"),
    ("umax", "max |u| on the grid"),
]


def config_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(config_to_text(cfg).encode()).hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


import contextlib


@contextlib.contextmanager
def _atomic_write(path, mode="w", **kw):
    """Write to a temporary sibling and rename on success, so interrupted
    writes never leave partial files behind."""
    tmp = f"{path}.tmp"
    try:
        with open(tmp, mode, **kw) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_energy_csv(path, times, reports):
    with _atomic_write(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, desc in ENERGY_COLUMNS:
            fh.write(f"# {name}: {desc}\n")
        fh.write(",".join(name for name, _ in ENERGY_COLUMNS) + "\n")
        for t, rep in zip(times, reports):
            row = [t, rep.kinetic, rep.poisson, rep.confinement,
                   rep.interaction, rep.total, rep.diss_friction, rep.diss_eps,
                   rep.diss_align, rep.residual, rep.mass_particles,
                   rep.mass_field, rep.min_density, rep.umax]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv_columns(path):
    """Read any of this package's CSVs into {column: float array}."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_csv(path, columns: dict, comments: dict | None = None):
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    with _atomic_write(path, "w", encoding="utf-8", newline="\n") as fh:
        for n in names:
            fh.write(f"# {n}: {(comments or {}).get(n, '')}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_snapshot(path, snap: dict, cfg: SimConfig):
    arrays = {
        "rho": np.ascontiguousarray(snap["rho"], dtype="<f8"),
        "u": np.ascontiguousarray(snap["u"], dtype="<f8"),
        "gradphi": np.ascontiguousarray(snap["gradphi"], dtype="<f8"),
        "coeffs": np.ascontiguousarray(snap["coeffs"], dtype="<f8"),
    }
    header = {
        "time": float(snap["t"]),
        "dim": cfg.dim,
        "panels": cfg.panels,
        "quad_order": cfg.quad_order,
        "modes": cfg.modes,
        "arrays": [{"name": k, "shape": list(v.shape), "dtype": "<f8"}
                   for k, v in arrays.items()],
    }
    with _atomic_write(path, "wb") as fh:
        fh.write((SNAPSHOT_MAGIC + "\n").encode())
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for v in arrays.values():
            fh.write(v.tobytes(order="C"))


def read_snapshot(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.readline().decode().strip()
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a field snapshot (header {magic!r})")
        header = json.loads(fh.readline().decode())
        out = {"t": header["time"], "header": header}
        for spec in header["arrays"]:
            count = int(np.prod(spec["shape"]))
            buf = fh.read(count * 8)
            out[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(spec["shape"]).copy()
    return out


def persist_run(traj: Trajectory, run_dir, started: float, finished: float,
                status: str = "completed"):
    os.makedirs(run_dir, exist_ok=True)
    inventory = []

    cfg_path = os.path.join(run_dir, "config.ini")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(traj.config))
    inventory.append("config.ini")

    write_energy_csv(os.path.join(run_dir, "energy.csv"), traj.times, traj.reports)
    inventory.append("energy.csv")

    if traj.snapshots:
        fields_dir = os.path.join(run_dir, "fields")
        os.makedirs(fields_dir, exist_ok=True)
        for i, snap in enumerate(traj.snapshots):
            name = f"fields/snap_{i:04d}.bin"
            write_snapshot(os.path.join(run_dir, name), snap, traj.config)
            inventory.append(name)

    first = traj.reports[0] if traj.reports else None
    last = traj.reports[-1] if traj.reports else None
    manifest = {
        "config_hash": config_hash(traj.config),
        "version": __version__,
        "status": status,
        "started": started,
        "finished": finished,
        "files": inventory,
        "scalars": {
            "E0": first.total if first else None,
            "M0": first.mass_field if first else None,
            "final_time": traj.times[-1] if traj.times else None,
            "final_residual": last.residual if last else None,
            "final_mass": last.mass_field if last else None,
            "final_min_density": last.min_density if last else None,
        },
    }
    with open(os.path.join(run_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return inventory


def run_and_persist(cfg: SimConfig, run_dir) -> str:
    """simulate + persist; on failure a manifest recording the error is still
    written, then the exception re-raised.  Returns the run directory."""
    started = time.time()
    try:
        traj = simulate(cfg)
    except Exception as exc:
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, "config.ini"), "w", encoding="utf-8") as fh:
            fh.write(config_to_text(cfg))
        manifest = {
            "config_hash": config_hash(cfg),
            "version": __version__,
            "status": f"failed: {exc}",
            "started": started,
            "finished": time.time(),
            "files": ["config.ini"],
            "scalars": {},
        }
        with open(os.path.join(run_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
        raise
    persist_run(traj, run_dir, started, time.time())
    return run_dir


def load_run(run_dir):
    """Config, energy columns and snapshots of a persisted run."""
    from .config import parse_config

    cfg = parse_config(os.path.join(run_dir, "config.ini"))
    energy = read_csv_columns(os.path.join(run_dir, "energy.csv"))
    snaps = []
    fields_dir = os.path.join(run_dir, "fields")
    if os.path.isdir(fields_dir):
        for name in sorted(os.listdir(fields_dir)):
            if name.endswith(".bin"):
                snaps.append(read_snapshot(os.path.join(fields_dir, name)))
    return cfg, energy, snaps


def _sweep_member(args):
    cfg, member_dir = args
    return run_and_persist(cfg, member_dir)


def run_sweep(cfg: SimConfig, eps_list, sweep_dir, workers: int = 1):
    """Run one configuration across an eps family, one subdirectory per
    member.  Failures are recorded in the index and do not stop the sweep.
    Worker processes only affect scheduling, never the numbers."""
    from dataclasses import replace

    os.makedirs(sweep_dir, exist_ok=True)
    jobs = []
    for eps in eps_list:
        member = replace(cfg, eps=float(eps), label=f"eps={float(eps):.3e}")
        jobs.append((member, os.path.join(sweep_dir, f"eps_{float(eps):.3e}")))

    status = {}
    if workers > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_sweep_member, job): job for job in jobs}
            for fut in cf.as_completed(futs):
                member, member_dir = futs[fut]
                try:
                    fut.result()
                    status[member_dir] = "completed"
                except Exception as exc:
                    status[member_dir] = f"failed: {exc}"
    else:
        for job in jobs:
            member, member_dir = job
            try:
                _sweep_member(job)
                status[member_dir] = "completed"
            except Exception as exc:
                status[member_dir] = f"failed: {exc}"

    index = {
        "eps": [float(e) for e in eps_list],
        "members": [{"eps": float(e), "dir": os.path.basename(d),
                     "status": status[d]}
                    for e, (m, d) in zip(eps_list, jobs)],
        "config_hash": config_hash(cfg),
    }
    with open(os.path.join(sweep_dir, "sweep.json"), "w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return index
