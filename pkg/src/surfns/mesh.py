"""Implicit structured tetrahedral background mesh and active narrow bands.

The box ``(-5/3, 5/3)^3`` is split into ``N^3`` cubes, ``N = 2^(level+1)``,
each cube into six Kuhn tetrahedra sharing the main diagonal.  Nothing of
size proportional to the full mesh is ever allocated: tetrahedra, vertices
and P2 edge nodes are addressed by integer keys computed on demand.

Node keys live on the doubled lattice ``(2N+1)^3`` so that a vertex ``v``
has key coordinates ``2 v`` and an edge midpoint ``v_a + v_b``.
"""
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import EmptyBandError, LevelOutOfRangeError, MeshMismatchError

DOMAIN_HALF_WIDTH = 5.0 / 3.0
MAX_LEVEL = 7

KUHN_PERMUTATIONS = tuple(permutations(range(3)))

# local P2 node order: 4 vertices then edges 01, 02, 03, 12, 13, 23
EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _kuhn_vertices(perm):
    v = np.zeros((4, 3), dtype=np.int64)
    v[1, perm[0]] = 1
    v[2] = v[1]
    v[2, perm[1]] = 1
    v[3] = 1
    return v


KUHN_VERTICES = np.stack([_kuhn_vertices(p) for p in KUHN_PERMUTATIONS])  # (6, 4, 3)


def subtet_lattice(local, rg):
    """Vertices of the ``8**rg`` Freudenthal sub-tetrahedra of Kuhn tet ``local``.

    Returned in units of ``h / 2**rg`` relative to the owning cube corner,
    shape ``(8**rg, 4, 3)``.  Sub-tetrahedra of neighbouring tets share the
    fine lattice, so reconstructed surfaces are globally continuous.
    """
    return _subtet_cache(local, rg)


_SUBTET = {}


def _subtet_cache(local, rg):
    key = (local, rg)
    if key not in _SUBTET:
        M = 2 ** rg
        perm = KUHN_PERMUTATIONS[local]
        c = np.stack(np.meshgrid(*[np.arange(M)] * 3, indexing="ij"), -1).reshape(-1, 1, 1, 3)
        cand = (c + KUHN_VERTICES[None]).reshape(-1, 4, 3)
        cen = cand.mean(axis=1)
        inside = (cen[:, perm[0]] > cen[:, perm[1]]) & (cen[:, perm[1]] > cen[:, perm[2]])
        sub = cand[inside]
        assert len(sub) == 8 ** rg
        _SUBTET[key] = sub
    return _SUBTET[key]


def lattice_points(rg):
    """Barycentric lattice ``{alpha / 2**rg}`` of a tetrahedron, shape (p, 4)."""
    M = 2 ** rg
    pts = [(i, j, k, M - i - j - k) for i in range(M + 1) for j in range(M + 1 - i)
           for k in range(M + 1 - i - j)]
    return np.array(pts, dtype=float)[:, [3, 0, 1, 2]] / M


@dataclass(frozen=True)
class BackgroundMesh:
    level: int

    def __post_init__(self):
        if not (0 <= self.level <= MAX_LEVEL) or int(self.level) != self.level:
            raise LevelOutOfRangeError(f"level must be in [0, {MAX_LEVEL}], got {self.level}")

    @property
    def h(self):
        return (5.0 / 3.0) * 2.0 ** (-self.level)

    @property
    def cubes_per_side(self):
        return 2 ** (self.level + 1)

    @property
    def n_tets(self):
        return 6 * self.cubes_per_side ** 3

    @property
    def lower(self):
        return -DOMAIN_HALF_WIDTH

    def split(self, tets):
        """Cube lattice index (E, 3) and local Kuhn index (E,) of tet ids."""
        tets = np.asarray(tets, dtype=np.int64)
        N = self.cubes_per_side
        cube, local = np.divmod(tets, 6)
        k, rem = np.divmod(cube, N * N)
        j, i = np.divmod(rem, N)
        return np.stack([i, j, k], axis=-1), local

    def tet_ids(self, cube_ijk, local):
        N = self.cubes_per_side
        cube_ijk = np.asarray(cube_ijk, dtype=np.int64)
        cube = cube_ijk[..., 0] + N * (cube_ijk[..., 1] + N * cube_ijk[..., 2])
        return cube * 6 + np.asarray(local, dtype=np.int64)

    def tet_lattice(self, tets):
        """Integer vertex lattice coordinates, shape (E, 4, 3)."""
        ijk, local = self.split(tets)
        return ijk[:, None, :] + KUHN_VERTICES[local]

    def lattice_to_points(self, lat, scale=1):
        return self.lower + np.asarray(lat, dtype=float) * (self.h / scale)

    def tet_points(self, tets):
        return self.lattice_to_points(self.tet_lattice(tets))

    def node_key(self, dlat):
        """Key of a node given doubled-lattice coordinates (..., 3)."""
        M = 2 * self.cubes_per_side + 1
        dlat = np.asarray(dlat, dtype=np.int64)
        return dlat[..., 0] + M * (dlat[..., 1] + M * dlat[..., 2])

    def key_lattice(self, keys):
        M = 2 * self.cubes_per_side + 1
        keys = np.asarray(keys, dtype=np.int64)
        r, I = np.divmod(keys, M)
        K, J = np.divmod(r, M)
        return np.stack([I, J, K], axis=-1)

    def key_points(self, keys):
        return self.lattice_to_points(self.key_lattice(keys), scale=2)

    def tet_node_keys(self, tets):
        """P2 node keys (E, 10): vertices then edge midpoints."""
        lat = 2 * self.tet_lattice(tets)
        mids = [(lat[:, a] + lat[:, b]) // 2 for a, b in EDGES]
        return self.node_key(np.concatenate([lat, np.stack(mids, axis=1)], axis=1))

    def tet_vertex_keys(self, tets):
        return self.node_key(2 * self.tet_lattice(tets))


def make_mesh(level):
    """Background mesh handle at refinement ``level`` (h = 5/3 * 2**-level)."""
    if int(level) != level:
        raise LevelOutOfRangeError(f"level must be an integer, got {level}")
    return BackgroundMesh(int(level))


@dataclass(frozen=True)
class ActiveBand:
    """Band tetrahedra ``O`` and cut tetrahedra ``omega`` at time ``t``.

    Both id arrays are sorted and ``cut_tets`` is a subset of ``band_tets``.
    """

    mesh: BackgroundMesh
    t: float
    delta: float
    band_tets: np.ndarray
    cut_tets: np.ndarray
    rg: int = 2

    @property
    def n_band(self):
        return len(self.band_tets)

    @property
    def n_cut(self):
        return len(self.cut_tets)


def _nudge_origin(x, h):
    # radial level sets are undefined at the origin, which is a mesh vertex
    x = np.array(x, dtype=float)
    at0 = np.all(x == 0.0, axis=-1)
    if np.any(at0):
        x[at0, 0] = 1e-9 * h
    return x


def _normalised_level_set(surface, x, t, h):
    x = _nudge_origin(x, h)
    phi = surface.phi(x, t)
    g = np.linalg.norm(surface.grad(x, t), axis=-1)
    return phi / np.maximum(g, 1e-300)


def cut_mask(mesh, surface, t, tets, rg):
    """Sign change of the level set on the sub-refined lattice of each tet."""
    tets = np.asarray(tets, dtype=np.int64)
    if len(tets) == 0:
        return np.zeros(0, dtype=bool)
    bary = lattice_points(rg)
    X = mesh.tet_points(tets)
    pts = np.einsum("pv,evd->epd", bary, X)
    phi = surface.phi(_nudge_origin(pts, mesh.h), t)
    phi = np.where(phi == 0.0, 1e-14 * mesh.h, phi)
    return (phi.min(axis=1) < 0.0) & (phi.max(axis=1) > 0.0)


def extract_band(mesh, surface, t, delta, rg=2, slab=4):
    """Narrow band of tetrahedra within ``delta`` of the surface at time ``t``.

    A tetrahedron belongs to the band when the range of the normalised level
    set over it, estimated from vertex values widened by an interpolation
    margin, meets ``[-delta, delta]``.  For ``delta = 0`` the band is the set
    of cut tetrahedra itself.  Cubes are scanned in z-slabs so that memory
    stays proportional to the band size.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    N = mesh.cubes_per_side
    h = mesh.h
    margin = 0.375 * h * h * surface.hessian_bound(t)
    extent = surface.max_extent(t) + delta + margin + 2 * h
    band_parts, cut_parts = [], []
    g = np.arange(N + 1)
    for k0 in range(0, N, slab):
        k1 = min(k0 + slab, N)
        zlo = mesh.lower + k0 * h
        zhi = mesh.lower + k1 * h
        if np.isfinite(extent) and (zlo > extent or zhi < -extent):
            continue
        I, J, K = np.meshgrid(g, g, np.arange(k0, k1 + 1), indexing="ij")
        lat = np.stack([I, J, K], -1)
        vals = _normalised_level_set(surface, mesh.lattice_to_points(lat), t, h)
        ci, cj, ck = np.meshgrid(np.arange(N), np.arange(N), np.arange(k1 - k0), indexing="ij")
        cube = np.stack([ci, cj, ck], -1).reshape(-1, 3)
        for local in range(6):
            v = cube[:, None, :] + KUHN_VERTICES[local][None]
            tv = vals[v[..., 0], v[..., 1], v[..., 2]]
            lo = tv.min(axis=1) - margin
            hi = tv.max(axis=1) + margin
            sel = (lo <= delta) & (hi >= -delta) & (delta > 0)
            cand = (lo <= 0.0) & (hi >= 0.0)
            ijk = cube + np.array([0, 0, k0])
            ids = mesh.tet_ids(ijk, local)
            band_parts.append(ids[sel])
            c_ids = ids[cand]
            cut_parts.append(c_ids[cut_mask(mesh, surface, t, c_ids, rg)])
    cut = np.sort(np.concatenate(cut_parts)) if cut_parts else np.zeros(0, np.int64)
    if len(cut) == 0:
        raise EmptyBandError(f"no tetrahedron is cut by the surface at t={t}")
    band = np.union1d(np.concatenate(band_parts), cut)
    return ActiveBand(mesh, float(t), float(delta), band, cut, rg)


def check_band_inclusion(band_new, band_old):
    """Cut tets of ``band_new`` missing from the band of ``band_old``."""
    if band_new.mesh != band_old.mesh:
        raise MeshMismatchError("bands live on different background meshes")
    missing = ~np.isin(band_new.cut_tets, band_old.band_tets, assume_unique=True)
    return band_new.cut_tets[missing].tolist()
