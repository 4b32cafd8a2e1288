"""Text formats: CSV tables, INI-style key/value records, OBJ meshes.

Floats are written with 17 significant digits so every binary64 value
survives a write/read cycle unchanged.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from hopfsol.integrator import Trajectory
from hopfsol.phase import SolitonParams
from hopfsol.profile import COLUMNS, ProfileCurve, profile_from_phase

FLOAT_FMT = "%.17g"
TRAJECTORY_COLUMNS = ("s", "u", "v", "g", "zeta", "theta_unwrapped")


class DataFormatError(ValueError):
    """A table or record is missing columns or does not parse."""


def fmt_float(x: float) -> str:
    return FLOAT_FMT % x


def write_table(path, columns: Mapping[str, Sequence[float]]) -> Path:
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names]) if names else np.empty((0, 0))
    buf = io.StringIO()
    buf.write(",".join(names) + "\n")
    if data.size:
        np.savetxt(buf, data, fmt=FLOAT_FMT, delimiter=",")
    path.write_text(buf.getvalue())
    return path


def read_table(path, required: Iterable[str] = ()) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataFormatError(f"{path} has no header row")
    names = [c.strip() for c in lines[0].split(",")]
    missing = [c for c in required if c not in names]
    if missing:
        raise DataFormatError(f"{path} lacks columns: {', '.join(missing)}")
    rows = [ln for ln in lines[1:] if ln.strip()]
    if not rows:
        return {k: np.empty(0) for k in names}
    try:
        data = np.loadtxt(rows, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    if data.shape[1] != len(names):
        raise DataFormatError(f"{path}: {data.shape[1]} values per row but {len(names)} column names")
    if not np.all(np.isfinite(data)):
        raise DataFormatError(f"{path} contains non-finite values")
    return {k: data[:, i].copy() for i, k in enumerate(names)}


def _value_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v)) if math.isfinite(v) else str(float(v))
    if isinstance(v, (list, tuple)):
        return ", ".join(_value_text(x) for x in v)
    return str(v)


def write_records(path, sections: Mapping[str, Mapping[str, object]]) -> Path:
    """Line-oriented key = value text with [section] headers."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for name, body in sections.items():
        cp[name] = {k: _value_text(v) for k, v in body.items()}
    buf = io.StringIO()
    cp.write(buf)
    Path(path).write_text(buf.getvalue())
    return Path(path)


def read_records(path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise DataFormatError(f"cannot parse {path}: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# trajectories and profiles


def trajectory_table(traj: Trajectory) -> dict[str, np.ndarray]:
    return {
        "s": traj.s, "u": traj.u, "v": traj.v, "g": traj.g,
        "zeta": traj.zeta, "theta_unwrapped": traj.theta,
    }


def trajectory_from_table(params: SolitonParams, table: Mapping[str, np.ndarray], termination: str = "horizon_reached") -> Trajectory:
    for c in TRAJECTORY_COLUMNS:
        if c not in table:
            raise DataFormatError(f"trajectory table lacks column {c!r}")
    u, v, g = table["u"], table["v"], table["g"]
    m = 2 * params.n - 1
    s = table["s"]
    direction = "backward" if len(s) > 1 and s[-1] < s[0] else "forward"
    return Trajectory(
        params=params, s=s, u=u, v=v, g=g, du=v.copy(), dv=m * g * g / u - v * g - u,
        theta=table["theta_unwrapped"], direction=direction, termination=termination,
    )


def profile_from_table(params: SolitonParams, table: Mapping[str, np.ndarray], theta_sign: int = 1) -> ProfileCurve:
    """Rebuild a ProfileCurve from its CSV columns.

    Tabulated values are kept as written; only u'', y' and z' (not stored)
    are recomputed, using theta_sign * drift_a as the signed g.
    """
    missing = [c for c in COLUMNS if c not in table]
    if missing:
        raise DataFormatError(f"profile table lacks columns: {', '.join(missing)}")
    if len(table["s"]) == 0:
        raise DataFormatError("profile table is empty")
    g_signed = theta_sign * table["drift_a"]
    base = profile_from_phase(
        params, table["s"], table["u"], table["v"], g_signed, table["theta_amb"], theta_sign, check=False
    )
    return replace(base, **{c: np.asarray(table[c], dtype=float) for c in COLUMNS})


# meshes


def stereographic(points: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Project points of S^3 from ``pole`` onto the hyperplane orthogonal to it."""
    pole = pole / np.linalg.norm(pole)
    # orthonormal basis of the complement of the pole
    basis = np.linalg.svd(pole[None, :])[2][1:]
    t = points @ pole
    return (points @ basis.T) / (1.0 - t)[..., None]


def write_obj(path, vertices: np.ndarray, faces: np.ndarray, comment: Optional[str] = None) -> Path:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    for x, y, z in vertices:
        buf.write(f"v {fmt_float(x)} {fmt_float(y)} {fmt_float(z)}\n")
    for f in faces:
        buf.write("f " + " ".join(str(int(i) + 1) for i in f) + "\n")
    Path(path).write_text(buf.getvalue())
    return Path(path)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("v "):
            verts.append([float(x) for x in line.split()[1:4]])
        elif line.startswith("f "):
            faces.append([int(x) - 1 for x in line.split()[1:]])
    return np.array(verts), np.array(faces)


def surface_points(u, y, z, alpha_resolution: int) -> np.ndarray:
    """Points (u cos a, u sin a, y, z) of the n = 1 surface, shape (len(u), k, 4)."""
    a = 2 * np.pi * np.arange(alpha_resolution) / alpha_resolution
    ca, sa = np.cos(a)[None, :], np.sin(a)[None, :]
    one = np.ones_like(ca)
    u, y, z = (np.asarray(x)[:, None] for x in (u, y, z))
    return np.stack([u * ca, u * sa, y * one, z * one], axis=-1)


def quad_faces(rows: int, cols: int) -> np.ndarray:
    """Quads of a rows x cols grid, periodic in the column direction."""
    i, j = np.meshgrid(np.arange(rows - 1), np.arange(cols), indexing="ij")
    a = i * cols + j
    b = i * cols + (j + 1) % cols
    return np.stack([a, b, b + cols, a + cols], axis=-1).reshape(-1, 4)
