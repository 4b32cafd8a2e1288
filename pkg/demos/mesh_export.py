"""A picture of the n = 1 soliton in R^3.

For n = 1 the hypersurface sits in S^3 and stereographic projection from a
pole away from it gives an ordinary surface mesh.  The script writes
soliton.obj and clifford.obj next to itself (or into the directory given
as the first argument) for viewing in any mesh viewer.
"""

import sys
from pathlib import Path

import numpy as np

from hopfsol import fileio
from hopfsol.phase import SolitonParams
from hopfsol.profile import clifford_profile
from hopfsol.soliton import build_soliton

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
out.mkdir(parents=True, exist_ok=True)
pole = np.array([0.0, 0.0, 0.0, 1.0])

for name, prof, stride in [
    ("soliton", build_soliton(SolitonParams(1)).profile, 50),
    ("clifford", clifford_profile(SolitonParams(1), s_max=2 * np.pi, h=0.01), 5),
]:
    keep = np.arange(0, len(prof), stride)
    pts = fileio.surface_points(prof.u[keep], prof.y[keep], prof.z[keep], 64)
    print(f"{name}: unit norm error {np.max(np.abs(np.linalg.norm(pts, axis=-1) - 1)):.1e}, "
          f"closest approach to the pole {np.min(np.linalg.norm(pts - pole, axis=-1)):.3f}")
    verts = fileio.stereographic(pts.reshape(-1, 4), pole)
    faces = fileio.quad_faces(len(keep), 64)
    path = fileio.write_obj(out / f"{name}.obj", verts, faces)
    print(f"  wrote {path} with {len(verts)} vertices and {len(faces)} quads")
