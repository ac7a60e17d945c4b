"""Piecewise-planar surface reconstruction inside cut tetrahedra.

Each tetrahedron is split into ``8**rg`` Freudenthal sub-tetrahedra and the
zero set of the per-sub-tet linear interpolant of the level set is
extracted with marching tetrahedra.  Quadrature points of a 6-point
degree-4 triangle rule are placed on every resulting planar triangle.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import SurfaceFrame
from .mesh import KUHN_VERTICES, lattice_points
from .quadrature import TRIANGLE_DEG4, triangle_area, volume_integrate  # noqa: F401


@lru_cache(maxsize=None)
def subdivision(rg):
    """Barycentric sub-tet vertices (S, 4, 4) and their lattice indices (S, 4)."""
    M = 2 ** rg
    c = np.stack(np.meshgrid(*[np.arange(M)] * 3, indexing="ij"), -1).reshape(-1, 1, 1, 3)
    cand = (c + KUHN_VERTICES[None]).reshape(-1, 4, 3)
    cen = cand.mean(axis=1)
    sub = cand[(cen[:, 0] > cen[:, 1]) & (cen[:, 1] > cen[:, 2])]
    # reference Kuhn simplex v0=0, v1=e0, v2=e0+e1, v3=(1,1,1):
    # x = l1 e0 + l2 (e0+e1) + l3 (1,1,1)  =>  l3 = x2, l2 = x1 - x2, l1 = x0 - x1
    x = sub / M
    l3 = x[..., 2]
    l2 = x[..., 1] - x[..., 2]
    l1 = x[..., 0] - x[..., 1]
    bary = np.stack([1.0 - l1 - l2 - l3, l1, l2, l3], axis=-1)
    lat = lattice_points(rg)
    ikey = np.rint(lat * M).astype(np.int64) @ (M + 1) ** np.arange(4)
    skey = np.rint(bary * M).astype(np.int64) @ (M + 1) ** np.arange(4)
    order = np.argsort(ikey)
    idx = order[np.searchsorted(ikey[order], skey)]
    return bary, idx


def _marching_tables():
    tables = {}
    for mask in range(16):
        neg = [i for i in range(4) if mask >> i & 1]
        pos = [i for i in range(4) if not mask >> i & 1]
        if len(neg) in (0, 4):
            continue
        if len(neg) == 1 or len(neg) == 3:
            lone = neg[0] if len(neg) == 1 else pos[0]
            others = [j for j in range(4) if j != lone]
            tris = [[(lone, others[0]), (lone, others[1]), (lone, others[2])]]
        else:
            a, b = neg
            c, d = pos
            # quad a-c, a-d, b-d, b-c in cyclic order
            tris = [[(a, c), (a, d), (b, d)], [(a, c), (b, d), (b, c)]]
        tables[mask] = np.array(tris)  # (ntri, 3, 2)
    return tables


MARCHING = _marching_tables()


def march(X, vals):
    """Triangles of the zero set of linear interpolants on tets.

    ``X`` (R, 4, 3) vertex positions, ``vals`` (R, 4) nonzero vertex values.
    Returns triangles (T, 3, 3) and the row index (T,) each came from.
    """
    mask = (vals < 0.0) @ (1 << np.arange(4))
    tris, src = [], []
    for m in sorted(MARCHING):
        rows = np.nonzero(mask == m)[0]
        if len(rows) == 0:
            continue
        for tri in MARCHING[m]:
            i, j = tri[:, 0], tri[:, 1]
            vi, vj = vals[rows][:, i], vals[rows][:, j]
            s = vi / (vi - vj)
            xi, xj = X[rows][:, i], X[rows][:, j]
            tris.append(xi + s[..., None] * (xj - xi))
            src.append(rows)
    if not tris:
        return np.zeros((0, 3, 3)), np.zeros(0, dtype=np.int64)
    tris = np.concatenate(tris)
    src = np.concatenate(src)
    order = np.argsort(src, kind="stable")
    return tris[order], src[order]


@dataclass
class PatchSet:
    """Reconstructed surface pieces for a list of tetrahedra.

    Quadrature arrays are sorted by owner; ``offsets[i]:offsets[i+1]`` slices
    the points of ``tets[i]``.
    """

    tets: np.ndarray
    triangles: np.ndarray
    tri_owner: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    owner: np.ndarray
    offsets: np.ndarray
    frames: SurfaceFrame = None
    t: float = 0.0

    @property
    def area(self):
        return float(self.weights.sum())

    def __len__(self):
        return len(self.tets)

    def patch(self, i):
        s = slice(self.offsets[i], self.offsets[i + 1])
        tri = self.triangles[self.tri_owner == i]
        return SurfacePatch(int(self.tets[i]), tri, self.points[s], self.weights[s],
                            None if self.frames is None else self.frames[s])


@dataclass
class SurfacePatch:
    owner: int
    triangles: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    frames: SurfaceFrame = None

    @property
    def area(self):
        return float(self.weights.sum())


def _triangle_quadrature(tris, rule=TRIANGLE_DEG4):
    pts = np.einsum("qv,tvd->tqd", rule.points, tris)
    w = triangle_area(tris)[:, None] * rule.weights[None, :]
    return pts, w


def _reconstruct_arrays(X, phi, rg, perturb):
    """Core routine: tets X (E, 4, 3), level-set callable on points."""
    bary, idx = subdivision(rg)
    lat = lattice_points(rg)
    E = len(X)
    lp = np.einsum("pv,evd->epd", lat, X)
    vals = phi(lp.reshape(-1, 3)).reshape(E, -1)
    vals = np.where(vals == 0.0, perturb, vals)
    sv = vals[:, idx]  # (E, S, 4)
    cut = (sv.min(axis=2) < 0) & (sv.max(axis=2) > 0)
    e_id, s_id = np.nonzero(cut)
    SX = np.einsum("svw,ewd->esvd", bary, X)[e_id, s_id] if E else np.zeros((0, 4, 3))
    tris, src = march(SX, sv[e_id, s_id])
    return tris, e_id[src]


def reconstruct(X, surface, t, rg=2, h=None):
    """Surface patch inside a single tetrahedron with vertices ``X`` (4, 3)."""
    X = np.asarray(X, dtype=float)
    if h is None:
        h = float(np.max(np.linalg.norm(X[:, None] - X[None], axis=-1)))
    tris, _ = _reconstruct_arrays(X[None], lambda p: surface.phi(p, t), rg, 1e-14 * h)
    pts, w = _triangle_quadrature(tris)
    pts = pts.reshape(-1, 3)
    frames = surface.frames(pts, t) if len(pts) else None
    return SurfacePatch(-1, tris, pts, w.reshape(-1), frames)


def reconstruct_band(mesh, tets, surface, t, rg=2, with_frames=True, chunk=4096):
    """Reconstruct the surface inside every tetrahedron of ``tets``."""
    tets = np.asarray(tets, dtype=np.int64)
    from .mesh import _nudge_origin
    phi = lambda p: surface.phi(_nudge_origin(p, mesh.h), t)  # noqa: E731
    tris_l, own_l = [], []
    for c0 in range(0, len(tets), chunk):
        X = mesh.tet_points(tets[c0:c0 + chunk])
        tris, own = _reconstruct_arrays(X, phi, rg, 1e-14 * mesh.h)
        tris_l.append(tris)
        own_l.append(own + c0)
    tris = np.concatenate(tris_l) if tris_l else np.zeros((0, 3, 3))
    tri_owner = np.concatenate(own_l) if own_l else np.zeros(0, np.int64)
    pts, w = _triangle_quadrature(tris)
    nq = pts.shape[1]
    points = pts.reshape(-1, 3)
    weights = w.reshape(-1)
    owner = np.repeat(tri_owner, nq)
    offsets = np.searchsorted(owner, np.arange(len(tets) + 1))
    ps = PatchSet(tets, tris, tri_owner, points, weights, owner, offsets, None, float(t))
    if with_frames and len(points):
        ps.frames = surface.frames(points, t)
    return ps


def surface_integrate(patch, f):
    """``sum_q w_q f(x_q)`` over a patch (or patch set)."""
    vals = np.asarray(f(patch.points))
    return np.tensordot(patch.weights, vals, axes=(0, 0))
