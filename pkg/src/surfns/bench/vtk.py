"""Legacy ASCII VTK output of the discrete surface with velocity and pressure."""
import os

import numpy as np



def write_vtk(path, triangles, velocity, pressure, title="surfns"):
    """Write triangles (T, 3, 3) with per-vertex vectors/scalars (T*3 entries)."""
    tris = np.asarray(triangles, dtype=float).reshape(-1, 3)
    nt = len(tris) // 3
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(tris)} double\n")
        np.savetxt(fh, tris, fmt="%.10g")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        cells = np.column_stack([np.full(nt, 3), np.arange(3 * nt).reshape(nt, 3)])
        np.savetxt(fh, cells, fmt="%d")
        fh.write(f"CELL_TYPES {nt}\n")
        np.savetxt(fh, np.full(nt, 5), fmt="%d")
        fh.write(f"POINT_DATA {len(tris)}\nVECTORS velocity double\n")
        np.savetxt(fh, np.asarray(velocity, dtype=float).reshape(-1, 3), fmt="%.10g")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, np.asarray(pressure, dtype=float).reshape(-1), fmt="%.10g")


def write_snapshot(path, state):
    """Discrete surface of ``state`` with u_h and p_h at triangle vertices."""
    ps = state.patches
    tris = ps.triangles
    tets = ps.tets[ps.tri_owner]
    pts = tris.reshape(-1, 3)
    owner = np.repeat(tets, 3)
    u = state.velocity.evaluate(owner, pts, with_gradient=False)
    if state.pressure is not None:
        p = state.pressure.evaluate(owner, pts, with_gradient=False)
    else:
        p = np.zeros(len(pts))
    write_vtk(path, tris, u, p, title=f"t={state.t:.6g}")
