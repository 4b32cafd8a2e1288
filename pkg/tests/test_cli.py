import math

import numpy as np
import pytest

from hopfsol import fileio
from hopfsol.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main
from hopfsol.phase import SolitonParams
from hopfsol.profile import clifford_profile


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out-dir", str(out)])
    return code, out


def test_flow_forward(tmp_path):
    code, out = run(tmp_path, "f", "flow", "--n", "1", "--start", "0.3,0", "--forward")
    assert code == EXIT_OK
    t = fileio.read_table(out / "trajectory.csv", fileio.TRAJECTORY_COLUMNS)
    assert abs(t["u"][-1] - 0.7071068) < 1e-6
    rec = fileio.read_records(out / "manifest.ini")
    assert rec["outputs"]["trajectory.csv"] == fileio.sha256_of(out / "trajectory.csv")
    assert rec["config"]["n"] == "1" and rec["tool"]["version"]


def test_flow_backward(tmp_path):
    code, out = run(tmp_path, "b", "flow", "--n", "1", "--start", "0.3,0", "--backward")
    assert code == EXIT_OK
    t = fileio.read_table(out / "trajectory.csv")
    assert abs(t["u"][-1] ** 2 + t["v"][-1] ** 2 - 1) < 1e-6


def test_flow_from_the_equilibrium(tmp_path):
    code, out = run(tmp_path, "e", "flow", "--n", "1", "--start", "equilibrium", "--forward")
    assert code == EXIT_OK
    assert len(fileio.read_table(out / "trajectory.csv")["s"]) == 1


def test_flow_from_the_pole(tmp_path):
    code, out = run(tmp_path, "p", "flow", "--n", "2", "--start", "1,0")
    assert code == EXIT_OK
    assert fileio.read_records(out / "manifest.ini")["result"]["boundary_method"] == "series"
    code, _ = run(tmp_path, "naive", "flow", "--n", "2", "--start", "1,0", "--naive")
    assert code == EXIT_VIOLATION


@pytest.mark.parametrize(
    "argv",
    [
        ["flow", "--start", "abc"],
        ["flow", "--start", "2,0"],
        ["flow", "--start", "0.3,0", "--n", "0"],
        ["flow"],
        ["nonsense"],
        ["flow", "--start", "0.3,0", "--abs-tol", "-1"],
    ],
)
def test_usage_errors(tmp_path, argv, capsys):
    assert main([*argv, "--out-dir", str(tmp_path / "u")]) == EXIT_USAGE


def test_build_verify_export_and_rerun(tmp_path):
    code, sol = run(tmp_path, "sol", "build-soliton", "--n", "1")
    assert code == EXIT_OK
    diag = fileio.read_records(sol / "diagnostics.ini")["diagnostics"]
    assert int(diag["sign_changes"]) >= 20
    assert float(diag["glue_curvature_norm"]) < 1e-8
    table = fileio.read_table(sol / "profile.csv")
    assert list(table)[:4] == ["s", "u", "v", "g"]

    code, ver = run(tmp_path, "ver", "verify", "--n", "1", "--profile", str(sol / "profile.csv"))
    reports = fileio.read_records(ver / "identities.ini")
    assert set(reports) >= {"xitop_norm", "lap_H", "div_xitop", "grad_H_radial"}
    assert code == (EXIT_OK if all(r["pass"] == "true" for r in reports.values()) else EXIT_VIOLATION)

    code, mesh = run(tmp_path, "mesh", "export-mesh", "--profile", str(sol / "profile.csv"))
    assert code == EXIT_OK
    v, f = fileio.read_obj(mesh / "mesh.obj")
    assert len(v) and np.all(np.isfinite(v)) and f.shape[1] == 4

    code, again = run(tmp_path, "again", "rerun", "--manifest", str(sol / "manifest.ini"))
    assert code == EXIT_OK
    assert fileio.sha256_of(again / "profile.csv") == fileio.sha256_of(sol / "profile.csv")


def test_verify_clifford_noise_and_bad_data(tmp_path):
    c = clifford_profile(SolitonParams(1))
    good = fileio.write_table(tmp_path / "c.csv", c.table())
    code, _ = run(tmp_path, "vc", "verify", "--profile", str(good))
    assert code == EXIT_OK
    t = c.table()
    t["v"] = t["v"] + 1e-3 * np.random.default_rng(0).standard_normal(len(c))
    noisy = fileio.write_table(tmp_path / "n.csv", t)
    code, _ = run(tmp_path, "vn", "verify", "--profile", str(noisy))
    assert code == EXIT_VIOLATION
    del t["H"]
    broken = fileio.write_table(tmp_path / "b.csv", t)
    code, _ = run(tmp_path, "vb", "verify", "--profile", str(broken))
    assert code == EXIT_DATA
    code, _ = run(tmp_path, "vm", "verify", "--profile", str(tmp_path / "missing.csv"))
    assert code == EXIT_DATA


def test_export_mesh_checks(tmp_path):
    c = clifford_profile(SolitonParams(1), s_max=5.0, h=0.01)
    prof = fileio.write_table(tmp_path / "c.csv", c.table())
    code, out = run(tmp_path, "m", "export-mesh", "--profile", str(prof), "--s-stride", "5")
    assert code == EXIT_OK
    pole = f"{c.u[0]},0,{c.y[0]},{c.z[0]}"
    code, _ = run(tmp_path, "m2", "export-mesh", "--profile", str(prof), "--pole", pole)
    assert code == EXIT_VIOLATION
    empty = fileio.write_table(tmp_path / "e.csv", {k: [] for k in c.table()})
    code, _ = run(tmp_path, "m3", "export-mesh", "--profile", str(empty))
    assert code == EXIT_USAGE
    code, _ = run(tmp_path, "m4", "export-mesh", "--profile", str(prof), "--pole", "0,0,0,2")
    assert code == EXIT_USAGE
    code, _ = run(tmp_path, "m5", "export-mesh", "--n", "2", "--profile", str(prof))
    assert code == EXIT_USAGE


def test_phase_portrait(tmp_path):
    code, out = run(tmp_path, "pp", "phase-portrait", "--n", "1", "--grid", "5", "--workers", "2")
    assert code == EXIT_OK
    # index.csv mixes text and numbers, so parse it by hand
    lines = (out / "index.csv").read_text().splitlines()
    head = lines[0].split(",")
    rows = [dict(zip(head, ln.split(","))) for ln in lines[1:]]
    fwd = [r for r in rows if r["direction"] == "forward"]
    bwd = [r for r in rows if r["direction"] == "backward"]
    assert len(fwd) == len(bwd) == 25
    assert all(r["termination"] == "equilibrium_reached" for r in fwd)
    assert all(r["termination"] == "boundary_hit" and float(r["circle_defect"]) < 1e-6 for r in bwd)
    assert all(float(r["min_dzeta"]) >= -1e-8 for r in rows)
    assert all(float(r["thetap_tail_max"]) < -1 / 3 + 1e-3 for r in bwd)


def test_phase_portrait_random_is_seeded(tmp_path):
    a = run(tmp_path, "r1", "phase-portrait", "--random", "4", "--seed", "5")[1]
    b = run(tmp_path, "r2", "phase-portrait", "--random", "4", "--seed", "5")[1]
    assert (a / "index.csv").read_bytes() == (b / "index.csv").read_bytes()


def test_linearize(tmp_path, capsys):
    code, out = run(tmp_path, "lin", "linearize", "--n", "2")
    assert code == EXIT_OK
    rec = fileio.read_records(out / "linearization.ini")["equilibrium"]
    assert float(rec["u_n"]) == pytest.approx(math.sqrt(0.75), abs=1e-15)
    assert float(rec["alpha"]) == pytest.approx(-0.25, abs=1e-15)
    assert "eigenvalues" in capsys.readouterr().out


def test_rerun_detects_tampering(tmp_path):
    code, out = run(tmp_path, "f", "flow", "--start", "0.4,0.2")
    assert code == EXIT_OK
    manifest = out / "manifest.ini"
    text = manifest.read_text()
    digest = fileio.read_records(manifest)["outputs"]["trajectory.csv"]
    manifest.write_text(text.replace(digest, "0" * 64))
    code, _ = run(tmp_path, "g", "rerun", "--manifest", str(manifest))
    assert code == EXIT_VIOLATION
