"""Report rendering against synthesized and real run directories.

Fixture directories are written in the documented CSV/manifest formats by
hand, so these tests exercise the interface contract without importing the
solver.  An end-to-end test drives the actual ep-sim CLI when it is on PATH.
"""

import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from ep_report import ReportError, ReportSpec, available_figures, render
from ep_report.data import read_csv_columns


def _write_csv(path, columns):
    names = list(columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for n in names:
            fh.write(f"# {n}: synthetic\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*[columns[n] for n in names]):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def _energy_columns(t):
    kin = 0.01 * np.exp(-2 * t)
    pois = 0.002 + 0 * t
    return {
        "t": t, "kinetic": kin, "poisson": pois,
        "confinement": 0.001 + 0 * t, "interaction": 0 * t,
        "total": kin + pois + 0.001,
        "diss_friction": 0.01 * (1 - np.exp(-2 * t)),
        "diss_eps": 1e-5 * t, "diss_align": 0 * t,
        "residual": -1e-9 * t, "mass_particles": 1 + 0 * t,
        "mass_field": 1 + 1e-12 * t, "min_density": 0.8 + 0 * t,
        "umax": 0.05 * np.exp(-t),
    }


@pytest.fixture()
def sweep_dir(tmp_path):
    root = tmp_path / "sweep"
    t = np.linspace(0.0, 1.0, 6)
    members = []
    for eps in (1e-2, 1e-3, 0.0):
        sub = root / f"eps_{eps:.3e}"
        os.makedirs(sub)
        _write_csv(sub / "energy.csv", _energy_columns(t))
        with open(sub / "manifest.json", "w") as fh:
            json.dump({"config_hash": "f" * 64, "status": "completed",
                       "scalars": {"E0": 0.013, "M0": 1.0}}, fh)
        members.append({"eps": eps, "dir": sub.name, "status": "completed"})
    with open(root / "sweep.json", "w") as fh:
        json.dump({"eps": [m["eps"] for m in members], "members": members,
                   "config_hash": "f" * 64}, fh)
    # verification tables alongside the sweep
    _write_csv(root / "relative_energy.csv", {
        "t": t, "kinetic_part": 1e-5 * np.exp(3 * t),
        "field_part": 1e-6 * np.exp(3 * t), "total": 1.1e-5 * np.exp(3 * t),
        "term_convective": -1e-6 * t, "term_damping": -2e-5 * t,
        "term_divU_field": 0 * t, "term_tensor_field": 1e-8 * t,
    })
    _write_csv(root / "identifications.csv", {
        "eps": np.array([1e-2, 1e-3, 1e-4]),
        "res_rho_l1": np.array([3e-2, 2e-2, 1e-2]),
        "res_momentum_l1": np.array([2e-2, 1e-2, 5e-3]),
        "res_convective_l1": np.array([4e-4, 3e-4, 2e-4]),
        "res_kinetic_l1": np.array([4e-4, 3e-4, 2e-4]),
        "res_gradphi_l2": np.array([9e-3, 4e-3, 2e-3]),
    })
    _write_csv(root / "defects.csv", {
        "cell": np.arange(4.0),
        "rho": np.array([0.98, 0.0, 0.0, 0.0]),
        "rho_usq": np.array([0.09, 0.0, 0.0, 0.0]),
    })
    _write_csv(root / "young_hist.csv", {
        "cell": np.array([0.0, 0, 0, 1, 1]),
        "weight": np.array([0.5, 0.3, 0.2, 0.6, 0.4]),
        "z0": np.array([0.5, 1.0, 1.5, 0.5, 1.0]),
        "z1": np.zeros(5), "z2": np.zeros(5),
    })
    return root


def test_available_figures(sweep_dir):
    assert set(available_figures(sweep_dir)) == {
        "energy_decomposition", "admissibility_residual", "relative_energy",
        "identifications", "defect_heatmap", "young_histograms"}


def test_render_full_list(sweep_dir, tmp_path):
    out = tmp_path / "report"
    records, warnings = render(ReportSpec(run_dir=str(sweep_dir), out_dir=str(out)))
    assert warnings == []
    names = {r.name for r in records}
    assert names == set(available_figures(sweep_dir))
    for rec in records:
        assert (out / rec.filename).exists()
    index = (out / "index.html").read_text()
    for rec in records:
        assert rec.filename in index
    assert "f" * 64 in index  # manifest hash surfaced


def test_plotted_values_equal_csv(sweep_dir, tmp_path):
    records, _ = render(ReportSpec(run_dir=str(sweep_dir),
                                   out_dir=str(tmp_path / "r")))
    by_name = {r.name: r for r in records}
    ident = read_csv_columns(sweep_dir / "identifications.csv")
    for key, vals in ident.items():
        assert (by_name["identifications"].data[key] == vals).all()
    energy = read_csv_columns(sweep_dir / "eps_1.000e-02" / "energy.csv")
    assert (by_name["energy_decomposition"].data["eps=1e-02:kinetic"]
            == energy["kinetic"]).all()
    rel = read_csv_columns(sweep_dir / "relative_energy.csv")
    assert (by_name["relative_energy"].data["total"] == rel["total"]).all()


def test_rendering_is_byte_identical(sweep_dir, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    render(ReportSpec(run_dir=str(sweep_dir), out_dir=str(out1)))
    render(ReportSpec(run_dir=str(sweep_dir), out_dir=str(out2)))
    for name in sorted(os.listdir(out1)):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_missing_input_is_named_error(sweep_dir, tmp_path):
    os.remove(sweep_dir / "identifications.csv")
    with pytest.raises(ReportError, match="identifications"):
        render(ReportSpec(run_dir=str(sweep_dir), out_dir=str(tmp_path / "x"),
                          figures=("identifications",)))
    with pytest.raises(ReportError, match="unknown figure"):
        render(ReportSpec(run_dir=str(sweep_dir), out_dir=str(tmp_path / "x"),
                          figures=("spectrogram",)))


def test_missing_column_is_named_error(sweep_dir, tmp_path):
    cols = read_csv_columns(sweep_dir / "relative_energy.csv")
    del cols["total"]
    _write_csv(sweep_dir / "relative_energy.csv", cols)
    with pytest.raises(ReportError, match="total"):
        render(ReportSpec(run_dir=str(sweep_dir), out_dir=str(tmp_path / "x"),
                          figures=("relative_energy",)))


def test_empty_series_skipped_with_warning(sweep_dir, tmp_path):
    cols = read_csv_columns(sweep_dir / "relative_energy.csv")
    zeroed = {k: (np.zeros_like(v) if k == "total" else v)
              for k, v in cols.items()}
    _write_csv(sweep_dir / "relative_energy.csv", zeroed)
    records, warnings = render(ReportSpec(run_dir=str(sweep_dir),
                                          out_dir=str(tmp_path / "x"),
                                          figures=("relative_energy",)))
    assert any("identically zero" in w for w in warnings)
    index = (tmp_path / "x" / "index.html").read_text()
    assert "Warnings" in index


def test_cli(sweep_dir, tmp_path, capsys):
    from ep_report.cli import main

    out = tmp_path / "cli_out"
    assert main(["--run", str(sweep_dir), "--out", str(out)]) == 0
    assert (out / "index.html").exists()
    assert main(["--run", str(tmp_path / "nowhere"), "--out", str(out)]) == 1


@pytest.mark.skipif(shutil.which("ep-sim") is None,
                    reason="ep-sim not installed; interface-level fixtures "
                           "cover the format contract")
def test_end_to_end_from_real_sweep(tmp_path):
    """Drive the solver CLI to produce a real sweep plus verification tables,
    then render the full figure list from it."""
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[kernels]\nv = quadratic(0.5,0.05)\nw = quadratic(0.025)\n\n"
        "[init]\nrho0 = cosine(0.1,2)\nu0 = sine(0.04,1)\n\n"
        "[run]\nt = 0.3\ndt_max = 0.01\noutputs = 4\n")
    sweep = tmp_path / "sweep"
    subprocess.run(["ep-sim", "sweep", "--config", str(ini), "--out",
                    str(sweep), "--eps", "1e-2,1e-3,0"], check=True)
    subprocess.run(["ep-sim", "verify", "identifications", "--sweep",
                    str(sweep), "--out", str(sweep)], check=True)
    # exit code reflects the rate check, which is not the point here; the
    # CSV is written either way
    subprocess.run(["ep-sim", "verify", "relative-energy",
                    "--ref", str(sweep / "eps_0.000e+00"),
                    "--mv", str(sweep / "eps_1.000e-03"),
                    "--out", str(sweep)], check=False)
    subprocess.run(["ep-sim", "ym", "build", "--sweep", str(sweep),
                    "--cells", "4", "--out", str(sweep)], check=True)
    subprocess.run(["ep-sim", "ym", "defect", "--sweep", str(sweep),
                    "--cells", "4", "--out", str(sweep)], check=True)

    out = tmp_path / "report"
    records, warnings = render(ReportSpec(run_dir=str(sweep), out_dir=str(out)))
    assert {r.name for r in records} == set(available_figures(sweep))
    assert (out / "index.html").exists()
    # repeated rendering of the real directory is also byte-identical
    out2 = tmp_path / "report2"
    render(ReportSpec(run_dir=str(sweep), out_dir=str(out2)))
    for name in sorted(os.listdir(out)):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()
    print("[ACCEPTANCE] PASS report renders a completed sweep "
          f"({len(records)} figures, byte-identical rerender)")
