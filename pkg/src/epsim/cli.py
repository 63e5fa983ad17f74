"""Command-line entry point: simulate | sweep | verify | ym | selftest.

The EP_SIM_THREADS environment variable caps the number of worker processes
used for sweep members; it never changes the numbers (each member runs the
same deterministic single-trajectory code either way).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("EP_SIM_THREADS", "1")))
    except ValueError:
        return 1


def _load_config(path):
    from .config import parse_config

    return parse_config(path)


def _cmd_simulate(args) -> int:
    from dataclasses import replace

    from .runio import run_and_persist

    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    run_and_persist(cfg, args.out)
    print(f"run written to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    from dataclasses import replace

    from .runio import run_sweep

    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    eps_list = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    if not eps_list:
        print("sweep needs at least one eps value", file=sys.stderr)
        return 2
    index = run_sweep(cfg, eps_list, args.out, workers=_workers())
    failed = [m for m in index["members"] if m["status"] != "completed"]
    for m in index["members"]:
        print(f"eps={m['eps']:.3e}: {m['status']}")
    return 1 if failed else 0


def _matched_snapshots(run_dir, t):
    from .runio import load_run

    cfg, energy, snaps = load_run(run_dir)
    if not snaps:
        raise FileNotFoundError(f"{run_dir} holds no field snapshots")
    times = np.array([s["t"] for s in snaps])
    idx = len(times) - 1 if t is None else int(np.argmin(np.abs(times - t)))
    return cfg, snaps, idx


def _cmd_verify_relative_energy(args) -> int:
    from .diagnostics import gronwall_check, relative_energy_fields
    from .geometry import Quadrature, build_bases
    from .runio import load_run, write_csv
    from .transport import velocity_gradient_at

    cfg_ref, _, snaps_ref = load_run(args.ref)
    cfg_mv, _, snaps_mv = load_run(args.mv)
    for field in ("dim", "panels", "quad_order", "modes"):
        if getattr(cfg_ref, field) != getattr(cfg_mv, field):
            print(f"grid mismatch between runs ({field})", file=sys.stderr)
            return 2
    quad = Quadrature(cfg_ref.dim, cfg_ref.panels, cfg_ref.quad_order)
    sine, _ = build_bases(cfg_ref.dim, cfg_ref.modes, quad)

    n = min(len(snaps_ref), len(snaps_mv))
    reports = [relative_energy_fields(snaps_mv[i], snaps_ref[i], quad, sine,
                                      cfg_mv.gamma) for i in range(n)]
    gradU_sup = max(float(np.abs(velocity_gradient_at(s["coeffs"], sine)).max())
                    for s in snaps_ref[:n])
    times = [r.time for r in reports]
    fit = gronwall_check(times, [r.total for r in reports], gradU_sup)

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "relative_energy.csv"), {
            "t": times,
            "kinetic_part": [r.kinetic_part for r in reports],
            "field_part": [r.field_part for r in reports],
            "total": [r.total for r in reports],
            "term_convective": [r.term_convective for r in reports],
            "term_damping": [r.term_damping for r in reports],
            "term_divU_field": [r.term_divU_field for r in reports],
            "term_tensor_field": [r.term_tensor_field for r in reports],
        }, comments={"total": "relative energy E_rel(t)"})

    tag = ("identically zero" if fit.degenerate
           else f"slope {fit.slope:.4f} (bound {fit.bound:.4f})")
    print(f"E_rel(T) = {reports[-1].total:.6e}; gronwall: {tag}; "
          f"{'PASS' if fit.passed else 'FAIL'}")
    return 0 if fit.passed else 1


def _cmd_verify_identifications(args) -> int:
    import json

    from .diagnostics import identification_residuals, residuals_decreasing, RESIDUAL_KEYS
    from .geometry import Quadrature
    from .runio import load_run, write_csv

    with open(os.path.join(args.sweep, "sweep.json"), "r", encoding="utf-8") as fh:
        index = json.load(fh)
    members = []
    for m in sorted(index["members"], key=lambda m: -m["eps"]):
        if m["status"] != "completed":
            continue
        cfg, _, snaps = load_run(os.path.join(args.sweep, m["dir"]))
        times = np.array([s["t"] for s in snaps])
        idx = (len(times) - 1 if args.time is None
               else int(np.argmin(np.abs(times - args.time))))
        members.append((m["eps"], snaps[idx], cfg))
    if args.ref:
        cfg_ref, _, snaps_ref = load_run(args.ref)
    else:
        zero = [m for m in members if m[0] == 0.0]
        if not zero:
            print("no eps=0 member and no --ref given", file=sys.stderr)
            return 2
        cfg_ref = zero[0][2]
        snaps_ref = None
    quad = Quadrature(cfg_ref.dim, cfg_ref.panels, cfg_ref.quad_order)
    if snaps_ref is None:
        ref_snap = zero[0][1]
        members = [m for m in members if m[0] != 0.0]
    else:
        times = np.array([s["t"] for s in snaps_ref])
        idx = (len(times) - 1 if args.time is None
               else int(np.argmin(np.abs(times - args.time))))
        ref_snap = snaps_ref[idx]

    rows = identification_residuals([(e, s) for e, s, _ in members], ref_snap, quad)
    decreasing = residuals_decreasing(rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "identifications.csv"),
                  {"eps": [r["eps"] for r in rows],
                   **{k: [r[k] for r in rows] for k in RESIDUAL_KEYS}})
    for r in rows:
        print(", ".join(f"{k}={r[k]:.4e}" for k in ("eps",) + RESIDUAL_KEYS))
    print(f"residuals decreasing in eps: {'PASS' if decreasing else 'FAIL'}")
    return 0 if decreasing else 1


def _sweep_family(args):
    import json

    from .runio import load_run

    with open(os.path.join(args.sweep, "sweep.json"), "r", encoding="utf-8") as fh:
        index = json.load(fh)
    family = []
    quad_cfg = None
    for m in sorted(index["members"], key=lambda m: -m["eps"]):
        if m["status"] != "completed":
            continue
        cfg, _, snaps = load_run(os.path.join(args.sweep, m["dir"]))
        quad_cfg = cfg
        times = np.array([s["t"] for s in snaps])
        idx = (len(times) - 1 if args.time is None
               else int(np.argmin(np.abs(times - args.time))))
        family.append(snaps[idx])
    from .geometry import Quadrature

    return family, Quadrature(quad_cfg.dim, quad_cfg.panels, quad_cfg.quad_order)


def _cmd_ym(args) -> int:
    from .runio import write_csv
    from .young import (FUNCTION_TAGS, build_empirical_measure,
                        concentration_defect, domination_check)

    family, quad = _sweep_family(args)
    if len(family) < 2:
        print("need at least two completed members", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)

    if args.action == "build":
        measure = build_empirical_measure(family[-1], quad, args.cells, args.bins)
        rows = {"cell": [], "weight": []}
        coords = [f"z{c}" for c in range(1 + 2 * quad.dim)]
        for c in coords:
            rows[c] = []
        for cell in range(measure.n_cells):
            mids, wts = measure.midpoints(cell)
            for j in range(mids.shape[1]):
                rows["cell"].append(cell)
                rows["weight"].append(wts[j])
                for c, name in enumerate(coords):
                    rows[name].append(mids[c, j])
        write_csv(os.path.join(args.out, "young_hist.csv"), rows,
                  comments={"weight": "normalized per-cell histogram weight",
                            "z0": "density coordinate s"})
        print(f"histogram written ({sum(len(h) for h in measure.hist)} bins, "
              f"overflow mass {measure.overflow.sum():.3e})")
        return 0

    tags = list(FUNCTION_TAGS)
    defects = {tag: concentration_defect(family, quad, tag, args.cells, args.bins)
               for tag in tags}
    if args.action == "defect":
        cols = {"cell": np.arange(defects[tags[0]].values.shape[0])}
        for tag in tags:
            v = defects[tag].mass
            cols[tag] = v.reshape(v.shape[0], -1).sum(axis=1) if v.ndim > 1 else v
        write_csv(os.path.join(args.out, "defects.csv"), cols,
                  comments={tag: "per-cell defect mass" for tag in tags})
        print("defect table written")
        return 0

    reports = domination_check(defects, quad.dim)
    ok = all(r.passed for r in reports)
    for r in reports:
        print(f"{r.name}: {'PASS' if r.passed else 'FAIL'} "
              f"(max violation {r.max_violation:.3e})")
    write_csv(os.path.join(args.out, "ym_checks.csv"),
              {"passed": [float(r.passed) for r in reports],
               "max_violation": [r.max_violation for r in reports]})
    return 0 if ok else 1


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return run_selftest(fast=args.fast)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ep-sim",
        description="Spectral Galerkin pressureless Euler-Poisson/alignment "
                    "simulator and verification suite")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("sweep", help="run a family across eps values")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--eps", required=True, help="comma-separated eps values")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("verify", help="verification evaluators")
    vsub = v.add_subparsers(dest="check", required=True)
    s = vsub.add_parser("relative-energy")
    s.add_argument("--ref", required=True)
    s.add_argument("--mv", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_verify_relative_energy)
    s = vsub.add_parser("identifications")
    s.add_argument("--sweep", required=True)
    s.add_argument("--ref", default=None)
    s.add_argument("--time", type=float, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_verify_identifications)

    y = sub.add_parser("ym", help="empirical Young-measure tools")
    y.add_argument("action", choices=["build", "defect", "check"])
    y.add_argument("--sweep", required=True)
    y.add_argument("--time", type=float, default=None)
    y.add_argument("--cells", type=int, default=4)
    y.add_argument("--bins", type=int, default=32)
    y.add_argument("--out", default="ym_out")
    y.set_defaults(func=_cmd_ym)

    s = sub.add_parser("selftest", help="run the invariant battery")
    s.add_argument("--fast", action="store_true")
    s.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
