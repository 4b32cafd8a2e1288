"""Command line front end.

    python3 -m hopfsol flow --n 1 --start 0.3,0 --forward --out-dir runs/flow
    python3 -m hopfsol build-soliton --n 1 --out-dir runs/sol
    python3 -m hopfsol verify --n 1 --profile runs/sol/profile.csv --out-dir runs/ver
    python3 -m hopfsol phase-portrait --n 1 --grid 5 --out-dir runs/pp
    python3 -m hopfsol export-mesh --profile runs/sol/profile.csv --out-dir runs/mesh
    python3 -m hopfsol linearize --n 2
    python3 -m hopfsol rerun --manifest runs/sol/manifest.ini --out-dir runs/again

Every command writes ``manifest.ini`` next to its outputs: the tool version,
the full configuration, the command line and a sha256 digest per file.
Exit codes: 0 ok, 2 invariant or identity violation, 3 numeric failure,
64 usage error, 65 malformed input data.
"""

from __future__ import annotations

import argparse
import math
import shlex
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from hopfsol import __version__
from hopfsol import fileio
from hopfsol import identities as ident
from hopfsol.integrator import (
    BOUNDARY_HIT,
    EQUILIBRIUM_REACHED,
    STEP_FAILURE,
    TOL_ZETA,
    DomainError,
    IntegratorConfig,
    boundary_start,
    detect_geodesic_branch,
    integrate_backward,
    integrate_forward,
    integrate_many,
    random_interior_points,
    winding_number,
)
from hopfsol.phase import PhasePoint, SolitonParams, equilibrium, polar_angle_rate
from hopfsol.soliton import BuildConfig, BuildError, build_soliton

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64
EXIT_DATA = 65

MANIFEST = "manifest.ini"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--n", type=int, default=1, help="dimension parameter (hypersurface of dimension 2n)")
    g.add_argument("--out-dir", default="out", help="directory for outputs (created if missing)")
    g.add_argument("--abs-tol", type=float, default=1e-10)
    g.add_argument("--rel-tol", type=float, default=1e-10)
    g.add_argument("--horizon", type=float, default=500.0, help="maximal |s| of adaptive runs")
    g.add_argument("--theta-sign", type=int, choices=(1, -1), default=1, help="sign of the ambient angle rate")
    g.add_argument("--seed", type=int, default=0, help="seed for random starts")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="hopfsol", description="Rotational Hopf solitons in odd-dimensional spheres.")
    parser.add_argument("--version", action="version", version=f"hopfsol {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("flow", parents=[common], help="integrate one trajectory of the phase system")
    p.add_argument("--start", required=True, help="'u,v' or 'equilibrium'")
    d = p.add_mutually_exclusive_group()
    d.add_argument("--forward", dest="direction", action="store_const", const="forward")
    d.add_argument("--backward", dest="direction", action="store_const", const="backward")
    p.add_argument("--boundary-method", choices=("series", "perturbation"), default="series",
                   help="branch selection for starts on the unit circle")
    p.add_argument("--handoff", type=float, default=0.25, help="arclength where a circle start hands over")
    p.add_argument("--naive", action="store_true",
                   help="integrate a circle start as is (follows the geodesic branch; reported as a violation)")
    p.set_defaults(direction="forward", func=cmd_flow)

    p = sub.add_parser("build-soliton", parents=[common], help="pole start, forward run, doubling")
    p.add_argument("--mirror", choices=("reflection", "rotation"), default="reflection")
    p.add_argument("--handoff", type=float, default=0.25)
    p.add_argument("--h", type=float, default=1e-3, help="step of the tabulated grid")
    p.add_argument("--tail-periods", type=float, default=5.0)
    p.add_argument("--min-half-range", type=float, default=0.0)
    p.add_argument("--no-cross-validate", action="store_true")
    p.set_defaults(func=cmd_build_soliton)

    p = sub.add_parser("verify", parents=[common], help="finite-difference identity checks on a profile table")
    p.add_argument("--profile", required=True)
    p.add_argument("--range", choices=("positive", "all"), default="positive",
                   help="check the s >= 0 half (default) or the whole table")
    p.add_argument("--corrected", action="store_true", help="check the corrected identity forms")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("phase-portrait", parents=[common], help="lattice of forward and backward runs")
    p.add_argument("--grid", type=int, default=5, help="lattice size per axis")
    p.add_argument("--u-range", default="0.1,0.7")
    p.add_argument("--v-range", default="-0.5,0.5")
    p.add_argument("--random", type=int, default=0, help="use this many seeded random starts instead")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_phase_portrait)

    p = sub.add_parser("export-mesh", parents=[common], help="OBJ mesh of an n = 1 profile, projected to R^3")
    p.add_argument("--profile", required=True)
    p.add_argument("--alpha-resolution", type=int, default=64)
    p.add_argument("--s-stride", type=int, default=50)
    p.add_argument("--pole", default="0,0,0,1")
    p.add_argument("--min-pole-distance", type=float, default=1e-3)
    p.set_defaults(func=cmd_export_mesh)

    p = sub.add_parser("linearize", parents=[common], help="equilibrium and its linearization")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("rerun", parents=[common], help="repeat a run from its manifest and compare digests")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_rerun)
    return parser


# helpers


def _params(args) -> SolitonParams:
    try:
        return SolitonParams(args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _integrator_cfg(args) -> IntegratorConfig:
    try:
        return IntegratorConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol, horizon=args.horizon)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_echo(args) -> dict:
    skip = {"func", "_argv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def _write_manifest(args, out: Path, outputs: Sequence[Path], started: float, result: Optional[dict] = None) -> Path:
    argv = getattr(args, "_argv", None) or []
    sections = {
        "tool": {"name": "hopfsol", "version": __version__},
        "run": {
            "command": args.command,
            "argv": shlex.join(argv),
            "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "finished_utc": datetime.now(timezone.utc).isoformat(),
        },
        "config": _config_echo(args),
        "outputs": {Path(p).name: fileio.sha256_of(p) for p in outputs},
    }
    if result:
        sections["result"] = result
    return fileio.write_records(out / MANIFEST, sections)


def _parse_point(text: str, params: SolitonParams) -> PhasePoint:
    if text.strip().lower() == "equilibrium":
        return equilibrium(params).point
    try:
        return PhasePoint.parse(text)
    except ValueError as exc:
        raise UsageError(f"--start: {exc}") from exc


def _on_circle(p: PhasePoint) -> bool:
    return abs(p.u * p.u + p.v * p.v - 1.0) <= 1e-12


def _min_dzeta(traj) -> float:
    """Smallest increment of zeta per step, taken in increasing arclength."""
    dz = np.diff(traj.zeta) * (1 if traj.direction == "forward" else -1)
    return float(np.min(dz)) if dz.size else 0.0


def _theta_tail_max(params, traj) -> float:
    """Largest theta' over the last 5% of backward arclength."""
    L = abs(traj.s[0] - traj.s[-1])
    sel = np.abs(traj.s - traj.s[-1]) <= 0.05 * L
    un = equilibrium(params).point.u
    vals = [polar_angle_rate(params, (u, v)) for u, v in zip(traj.u[sel], traj.v[sel]) if math.hypot(u - un, v) > 1e-12]
    return float(max(vals)) if vals else float("nan")


# commands


def cmd_flow(args) -> int:
    started = time.time()
    params = _params(args)
    cfg = _integrator_cfg(args)
    p0 = _parse_point(args.start, params)
    out = _out_dir(args)
    result = {}
    code = EXIT_OK
    try:
        if _on_circle(p0) and args.naive:
            # the geodesic branch u = cos s leaves the half disc at s = pi/2
            traj = integrate_forward(params, p0, cfg, require_interior=False, until=min(args.horizon, 1.5))
            geo = detect_geodesic_branch(traj)
            result.update({f"geodesic_{k}": v for k, v in geo.items()})
            if geo["geodesic"]:
                code = EXIT_VIOLATION
        elif _on_circle(p0):
            if args.direction == "backward":
                raise UsageError("a start on the circle can only be integrated forward")
            bs = boundary_start(params, p0, args.boundary_method, cfg, s_handoff=args.handoff)
            result.update({"boundary_method": bs.method, "handoff": bs.s_handoff})
            traj = integrate_forward(params, bs.state, cfg, s0=bs.s_handoff)
        elif args.direction == "forward":
            traj = integrate_forward(params, p0, cfg)
        else:
            traj = integrate_backward(params, p0, cfg)
    except UsageError:
        raise
    except DomainError as exc:
        # the start itself is unusable
        raise UsageError(str(exc)) from exc
    except Exception as exc:  # noqa: BLE001 - numeric failure of any kind
        print(f"flow: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    table = fileio.write_table(out / "trajectory.csv", fileio.trajectory_table(traj))
    min_dz = _min_dzeta(traj)
    result.update({
        "termination": traj.termination,
        "samples": len(traj),
        "s_end": float(traj.s[-1]),
        "u_end": float(traj.u[-1]),
        "v_end": float(traj.v[-1]),
        "min_dzeta": min_dz,
        "winding": winding_number(traj),
    })
    if traj.boundary_point is not None:
        result["boundary_u"], result["boundary_v"] = traj.boundary_point
    if traj.termination == STEP_FAILURE:
        code = EXIT_NUMERIC
    elif min_dz < -TOL_ZETA:
        code = EXIT_VIOLATION
    elif traj.direction == "backward" and traj.termination != BOUNDARY_HIT:
        # contradicts the finite backward lifetime of every trajectory
        code = EXIT_VIOLATION
    result["exit_code"] = code
    _write_manifest(args, out, [table], started, result)
    print(f"flow: {traj.termination} at s = {traj.s[-1]:.6g}, (u, v) = ({traj.u[-1]:.10g}, {traj.v[-1]:.10g})")
    return code


def cmd_build_soliton(args) -> int:
    started = time.time()
    params = _params(args)
    try:
        cfg = BuildConfig(
            integrator=_integrator_cfg(args), handoff=args.handoff, h=args.h, tail_periods=args.tail_periods,
            min_half_range=args.min_half_range, theta_sign=args.theta_sign, mirror=args.mirror,
            cross_validate=not args.no_cross_validate,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    try:
        surf = build_soliton(params, cfg)
    except BuildError as exc:
        print(f"build-soliton: stage {exc.stage} failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001
        print(f"build-soliton: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    table = fileio.write_table(out / "profile.csv", surf.profile.table())
    diag = fileio.write_records(out / "diagnostics.ini", {"diagnostics": surf.diagnostics.as_dict()})
    _write_manifest(args, out, [table, diag], started, {"glue_index": surf.glue_index, "samples": len(surf.profile)})
    d = surf.diagnostics
    print(
        f"build-soliton: n = {params.n}, {len(surf.profile)} samples, s* = {d.clifford_s_star:.4g}, "
        f"sign changes = {d.sign_changes}, |A|(0) = {d.glue_curvature_norm:.3g}"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.time()
    params = _params(args)
    out = _out_dir(args)
    try:
        table = fileio.read_table(args.profile)
        curve = fileio.profile_from_table(params, table, args.theta_sign)
        if args.range == "positive":
            curve = curve.where(curve.s >= 0.0)
        reports = ident.run_all(curve, corrected=args.corrected)
    except (fileio.DataFormatError, ident.GridError) as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_DATA
    sections = {r.identity_name: r.summary() for r in reports}
    rep = fileio.write_records(out / "identities.ini", sections)
    ok = all(r.passed for r in reports)
    for r in reports:
        print(f"verify: {r.identity_name:28s} max {r.max_residual:.3e}  {'pass' if r.passed else 'FAIL'}")
    _write_manifest(args, out, [rep], started, {"all_pass": ok})
    return EXIT_OK if ok else EXIT_VIOLATION


def _lattice(args) -> list[PhasePoint]:
    if args.random:
        rng = np.random.default_rng(args.seed)
        return random_interior_points(rng, args.random)
    try:
        u0, u1 = (float(x) for x in args.u_range.split(","))
        v0, v1 = (float(x) for x in args.v_range.split(","))
    except ValueError as exc:
        raise UsageError(f"bad range: {exc}") from exc
    if args.grid < 1:
        raise UsageError("--grid must be positive")
    pts = []
    for u in np.linspace(u0, u1, args.grid):
        for v in np.linspace(v0, v1, args.grid):
            pts.append(PhasePoint(float(u), float(v)))
    return pts


def cmd_phase_portrait(args) -> int:
    started = time.time()
    params = _params(args)
    cfg = _integrator_cfg(args)
    out = _out_dir(args)
    pts = _lattice(args)
    inside = [p for p in pts if p.u > 0 and math.sqrt(max(0.0, 1 - p.u**2 - p.v**2)) > cfg.boundary_tol]
    un = equilibrium(params).point.u
    usable = [p for p in inside if math.hypot(p.u - un, p.v) >= cfg.eq_radius]
    fw = integrate_many(params, usable, cfg, "forward", args.workers)
    bw = integrate_many(params, usable, cfg, "backward", args.workers)
    files, rows = [], []
    ok = True
    for i, (p, tf, tb) in enumerate(zip(usable, fw, bw)):
        for tag, tr in (("fwd", tf), ("bwd", tb)):
            path = fileio.write_table(out / f"{tag}_{i:04d}.csv", fileio.trajectory_table(tr))
            files.append(path)
            row = {
                "id": i, "u0": p.u, "v0": p.v, "direction": tr.direction, "termination": tr.termination,
                "s_end": tr.s[-1], "u_end": tr.u[-1], "v_end": tr.v[-1],
                "min_dzeta": _min_dzeta(tr),
                "circle_defect": abs(tr.u[-1] ** 2 + tr.v[-1] ** 2 - 1.0) if tag == "bwd" else float("nan"),
                "thetap_tail_max": _theta_tail_max(params, tr) if tag == "bwd" else float("nan"),
            }
            rows.append(row)
            expected = EQUILIBRIUM_REACHED if tag == "fwd" else BOUNDARY_HIT
            ok &= tr.termination == expected and row["min_dzeta"] >= -TOL_ZETA
    index = out / "index.csv"
    header = list(rows[0]) if rows else ["id"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(fileio.fmt_float(v) if isinstance(v, float) else str(v) for v in r.values()))
    index.write_text("\n".join(lines) + "\n")
    skipped = len(pts) - len(usable)
    _write_manifest(args, out, [index, *files], started, {"runs": len(usable), "skipped_outside": skipped, "all_ok": ok})
    print(f"phase-portrait: {len(usable)} starts ({skipped} outside the domain skipped), all ok = {ok}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_export_mesh(args) -> int:
    started = time.time()
    params = _params(args)
    if params.n != 1:
        raise UsageError("mesh export is only defined for n = 1")
    try:
        pole = np.array([float(x) for x in args.pole.split(",")])
    except ValueError as exc:
        raise UsageError(f"--pole: {exc}") from exc
    if pole.shape != (4,) or abs(np.linalg.norm(pole) - 1.0) > 1e-12:
        raise UsageError("--pole must be a unit 4-vector")
    if not args.min_pole_distance > 0 or args.alpha_resolution < 3 or args.s_stride < 1:
        raise UsageError("need min-pole-distance > 0, alpha-resolution >= 3, s-stride >= 1")
    out = _out_dir(args)
    try:
        table = fileio.read_table(args.profile, required=("s", "u", "y", "z"))
    except fileio.DataFormatError as exc:
        print(f"export-mesh: {exc}", file=sys.stderr)
        return EXIT_DATA
    if len(table["s"]) == 0:
        raise UsageError("the profile table is empty")
    idx = np.arange(0, len(table["s"]), args.s_stride)
    if idx[-1] != len(table["s"]) - 1:
        idx = np.append(idx, len(table["s"]) - 1)
    pts = fileio.surface_points(table["u"][idx], table["y"][idx], table["z"][idx], args.alpha_resolution)
    norms = np.linalg.norm(pts, axis=-1)
    if np.max(np.abs(norms - 1.0)) > 1e-8:
        i = int(np.argmax(np.abs(norms - 1.0).max(axis=1)))
        print(f"export-mesh: point off the unit sphere at s = {table['s'][idx][i]:.6g}", file=sys.stderr)
        return EXIT_VIOLATION
    dist = np.linalg.norm(pts - pole, axis=-1)
    if np.min(dist) < args.min_pole_distance:
        i = int(np.argmin(dist.min(axis=1)))
        print(f"export-mesh: surface within {np.min(dist):.3g} of the pole at s = {table['s'][idx][i]:.6g}", file=sys.stderr)
        return EXIT_VIOLATION
    verts = fileio.stereographic(pts.reshape(-1, 4), pole)
    faces = fileio.quad_faces(len(idx), args.alpha_resolution)
    mesh = fileio.write_obj(out / "mesh.obj", verts, faces, comment="stereographic projection of (u cos a, u sin a, y, z)")
    _write_manifest(args, out, [mesh], started, {"vertices": len(verts), "faces": len(faces), "min_pole_distance": float(np.min(dist))})
    print(f"export-mesh: {len(verts)} vertices, {len(faces)} quads")
    return EXIT_OK


def cmd_linearize(args) -> int:
    started = time.time()
    params = _params(args)
    out = _out_dir(args)
    eq = equilibrium(params)
    body = {
        "n": params.n,
        "u_n": eq.point.u,
        "v_n": eq.point.v,
        "jacobian": [float(x) for x in eq.jacobian.ravel()],
        "alpha": eq.alpha,
        "beta": eq.beta,
        "pseudo_period": eq.pseudo_period,
    }
    rec = fileio.write_records(out / "linearization.ini", {"equilibrium": body})
    _write_manifest(args, out, [rec], started)
    print(f"equilibrium ({eq.point.u:.15g}, 0); eigenvalues {eq.alpha:.15g} +- {eq.beta:.15g} i")
    print(f"jacobian [[0, 1], [{eq.jacobian[1, 0]:g}, {eq.jacobian[1, 1]:.15g}]]")
    return EXIT_OK


def cmd_rerun(args) -> int:
    """Re-execute the command recorded in a manifest and compare digests."""
    try:
        rec = fileio.read_records(args.manifest)
        argv = shlex.split(rec["run"]["argv"])
        expected = rec["outputs"]
    except (fileio.DataFormatError, KeyError) as exc:
        print(f"rerun: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not argv:
        print("rerun: manifest has no recorded command line", file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out_dir) if args.out_dir != "out" else Path(tempfile.mkdtemp(prefix="hopfsol-rerun-"))
    code = main(_replace_out_dir(argv, str(out)))
    mismatched = [name for name, digest in expected.items()
                  if not (out / name).exists() or fileio.sha256_of(out / name) != digest]
    for name in mismatched:
        print(f"rerun: {name} differs", file=sys.stderr)
    print(f"rerun: {len(expected) - len(mismatched)}/{len(expected)} outputs identical in {out}")
    if mismatched:
        return EXIT_VIOLATION
    return EXIT_OK if code in (EXIT_OK, EXIT_VIOLATION) else code


def _replace_out_dir(argv: list[str], out: str) -> list[str]:
    res, skip = [], False
    for i, a in enumerate(argv):
        if skip:
            skip = False
            continue
        if a == "--out-dir":
            skip = True
            continue
        if a.startswith("--out-dir="):
            continue
        res.append(a)
    return res + ["--out-dir", out]


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hopfsol {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
