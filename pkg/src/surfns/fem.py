"""Trace P2-P1 Taylor-Hood spaces on the active band and system assembly.

Global unknown layout: velocity component ``k`` of P2 node ``i`` sits at
``k * n_u + i``, pressure node ``j`` at ``3 n_u + j`` and the zero-mean
multiplier last.
"""
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import BandInclusionError
from .mesh import EDGES
from .quadrature import TETRAHEDRON_DEG7, tet_volume

BDF_COEFFS = {1: (1.0, -1.0), 2: (1.5, -2.0, 0.5)}


# ---------------------------------------------------------------- basis

def barycentric_gradients(X):
    """Gradients of the barycentric coordinates, shape (E, 4, 3)."""
    D = np.swapaxes(X[:, 1:, :] - X[:, :1, :], 1, 2)  # columns are edge vectors
    Dinv = np.linalg.inv(D)
    g = np.empty(X.shape[:1] + (4, 3))
    g[:, 1:, :] = Dinv
    g[:, 0, :] = -Dinv.sum(axis=1)
    return g


def barycentric(X, gl, x):
    """Barycentric coordinates of points ``x`` (Q, 3) in tets ``X`` (Q, 4, 3)."""
    l = np.einsum("qvd,qd->qv", gl, x - X[:, 0, :])
    l[:, 0] = 1.0 + l[:, 0]
    return l


_EDGE_A = np.array([a for a, _ in EDGES])
_EDGE_B = np.array([b for _, b in EDGES])


def p2_basis(lam, gl):
    """P2 values (Q, 10) and gradients (Q, 10, 3)."""
    ea, eb = _EDGE_A, _EDGE_B
    phi = np.concatenate([lam * (2 * lam - 1), 4 * lam[:, ea] * lam[:, eb]], axis=1)
    dphi = np.concatenate([(4 * lam - 1)[:, :, None] * gl,
                           4 * (lam[:, ea, None] * gl[:, eb] + lam[:, eb, None] * gl[:, ea])],
                          axis=1)
    return phi, dphi


def p2_gradient_table(lam):
    """Coefficients ``D`` with ``grad phi_a = sum_v D[q, a, v] grad lambda_v``."""
    lam = np.atleast_2d(lam)
    D = np.zeros((len(lam), 10, 4))
    for v in range(4):
        D[:, v, v] = 4 * lam[:, v] - 1
    for e, (a, b) in enumerate(EDGES):
        D[:, 4 + e, a] = 4 * lam[:, b]
        D[:, 4 + e, b] = 4 * lam[:, a]
    return D


def project_tangential(v, frame_n):
    """``P v`` with ``P = I - n n^T``."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(frame_n, dtype=float)
    return v - n * np.sum(v * n, axis=-1, keepdims=True)


def strain_tensor(grad_u, u_N, P, H):
    """Surface rate of strain of the projected field, ``E_s(u) - u_N H``.

    ``grad_u`` is the full ambient gradient ``(du_i/dx_j)``.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    sym = 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))
    return P @ sym @ P - np.asarray(u_N)[..., None, None] * H


# ---------------------------------------------------------------- dofs

@dataclass(frozen=True)
class DofMap:
    velocity_keys: np.ndarray
    pressure_keys: np.ndarray
    band_nodes: np.ndarray  # (E_band, 10) indices into velocity_keys
    cut_nodes: np.ndarray  # (E_cut, 10)
    cut_pressure: np.ndarray  # (E_cut, 4) indices into pressure_keys

    @property
    def n_u(self):
        return len(self.velocity_keys)

    @property
    def n_p(self):
        return len(self.pressure_keys)

    @property
    def size(self):
        return 3 * self.n_u + self.n_p + 1

    def velocity_index(self, nodes):
        nodes = np.asarray(nodes)
        return np.concatenate([nodes + k * self.n_u for k in range(3)], axis=-1)

    def pressure_index(self, pnodes):
        return 3 * self.n_u + np.asarray(pnodes)


def build_dofmap(band):
    mesh = band.mesh
    bkeys = mesh.tet_node_keys(band.band_tets)
    vkeys = np.unique(bkeys)
    ckeys = mesh.tet_node_keys(band.cut_tets)
    pkeys_t = mesh.tet_vertex_keys(band.cut_tets)
    pkeys = np.unique(pkeys_t)
    return DofMap(vkeys, pkeys, np.searchsorted(vkeys, bkeys),
                  np.searchsorted(vkeys, ckeys), np.searchsorted(pkeys, pkeys_t))


@dataclass
class FieldVector:
    """Nodal P2 vector field (``kind='velocity'``) or P1 scalar field on a band."""

    band: object
    dofmap: DofMap
    values: np.ndarray  # (n_u, 3) or (n_p,)
    kind: str = "velocity"

    def _lookup(self, tets):
        mesh = self.band.mesh
        if self.kind == "velocity":
            keys = mesh.tet_node_keys(tets)
            table = self.dofmap.velocity_keys
        else:
            keys = mesh.tet_vertex_keys(tets)
            table = self.dofmap.pressure_keys
        idx = np.searchsorted(table, keys)
        idx = np.minimum(idx, len(table) - 1)
        bad = table[idx] != keys
        if np.any(bad):
            missing = np.unique(np.asarray(tets)[np.any(bad, axis=1)])
            raise BandInclusionError(
                f"{len(missing)} tetrahedra lie outside the band of the field at "
                f"t={self.band.t}; increase c_delta or reduce dt", missing)
        return idx

    def nodal(self, tets):
        """Nodal values per tetrahedron: (E, 10, 3) velocity or (E, 4) pressure."""
        return self.values[self._lookup(np.asarray(tets, dtype=np.int64))]

    def evaluate(self, tets, points, with_gradient=True):
        """Values (and full ambient gradients) at ``points`` inside ``tets``."""
        tets = np.asarray(tets, dtype=np.int64)
        X = self.band.mesh.tet_points(tets)
        gl = barycentric_gradients(X)
        lam = barycentric(X, gl, points)
        idx = self._lookup(tets)
        if self.kind == "velocity":
            phi, dphi = p2_basis(lam, gl)
            nodal = self.values[idx]  # (Q, 10, 3)
            val = np.einsum("qa,qak->qk", phi, nodal)
            if not with_gradient:
                return val
            grad = np.einsum("qad,qak->qkd", dphi, nodal)
            return val, grad
        nodal = self.values[idx]
        val = np.einsum("qa,qa->q", lam, nodal)
        if not with_gradient:
            return val
        return val, np.einsum("qad,qa->qd", gl, nodal)

    @classmethod
    def interpolate(cls, band, dofmap, func):
        pts = band.mesh.key_points(dofmap.velocity_keys)
        return cls(band, dofmap, np.asarray(func(pts), dtype=float).reshape(-1, 3))

    @classmethod
    def zeros(cls, band, dofmap, kind="velocity"):
        shape = (dofmap.n_u, 3) if kind == "velocity" else (dofmap.n_p,)
        return cls(band, dofmap, np.zeros(shape), kind)


# ---------------------------------------------------------------- assembly

@dataclass(frozen=True)
class AssemblyParams:
    mu: float
    dt: float
    tau: float
    rho_u: float
    rho_p: float
    bdf_order: int = 1

    @classmethod
    def default(cls, h, mu, dt, bdf_order=1, tau_scale=1.0, rho_u_scale=1.0, rho_p_scale=1.0):
        """``tau = h^-2``, ``rho_u = h^-1``, ``rho_p = h`` times the given scales."""
        return cls(mu, dt, tau_scale / h ** 2, rho_u_scale / h, rho_p_scale * h, bdf_order)

    @property
    def bdf(self):
        return BDF_COEFFS[self.bdf_order]

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class LocalSystem:
    """Element-level arrays before scattering into the global matrix."""

    Ks: np.ndarray  # (E_cut, 30, 30) surface velocity forms
    Kv: np.ndarray  # (E_band, 10, 10) scalar normal-gradient stabilisation
    B: np.ndarray  # (E_cut, 4, 30) int grad_G q . v
    C: np.ndarray  # (E_cut, 4, 4) pressure stabilisation
    e: np.ndarray  # (E_cut, 4) int q
    Fu: np.ndarray  # (E_cut, 30)
    Fp: np.ndarray  # (E_cut, 4) -int g q


@dataclass
class SaddleSystem:
    """``[[A, B^T, 0], [B, -C, e], [0, e^T, 0]]`` in CSR form plus right-hand side."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    params: AssemblyParams
    local: LocalSystem = field(default=None, repr=False)

    @property
    def shape(self):
        return self.matrix.shape


@dataclass
class SurfaceBasis:
    """Barycentrics and P2 basis at the surface quadrature points."""

    gl: np.ndarray  # (E, 4, 3) per cut tet
    lam: np.ndarray  # (Q, 4)
    phi: np.ndarray  # (Q, 10)
    dphi: np.ndarray  # (Q, 10, 3)


def surface_basis(mesh, patches):
    """P2/P1 data at the surface quadrature points of ``patches``."""
    X = mesh.tet_points(patches.tets)
    gl = barycentric_gradients(X)
    own = patches.owner
    lam = barycentric(X[own], gl[own], patches.points)
    phi, dphi = p2_basis(lam, gl[own])
    return SurfaceBasis(gl, lam, phi, dphi)


def surface_field(field, patches, basis, with_gradient=True):
    """Evaluate a velocity FieldVector at the quadrature points of ``patches``."""
    nodal = field.nodal(patches.tets)[patches.owner]
    val = np.einsum("qa,qak->qk", basis.phi, nodal)
    if not with_gradient:
        return val
    return val, np.einsum("qad,qak->qkd", basis.dphi, nodal)


def node_normal_velocity(mesh, tets, surface, t):
    """``w_N n`` at the P2 nodes of ``tets`` (E, 10, 3), for ``I_h(w_N n)``."""
    keys = mesh.tet_node_keys(tets)
    uk, inv = np.unique(keys, return_inverse=True)
    from .mesh import _nudge_origin
    pts = _nudge_origin(mesh.key_points(uk), mesh.h)
    fr = surface.frames(pts, t, check_gradient=False)
    wn = fr.w_N[:, None] * fr.n
    return wn[inv.reshape(keys.shape)]


def advection_extrapolation(hist):
    """Velocity part of the advection field from history values (newest first)."""
    if len(hist) >= 2:
        return 2.0 * hist[0] - hist[1]
    return hist[0]


def assemble_local(band, patches, dofmap, surface, params, t, history=(), forcing=None,
                   threads=1, backend=None, basis=None):
    """Compute all element contributions.

    ``history`` lists previous velocity FieldVectors, newest first; they also
    supply the advection field (see :func:`advection_extrapolation`).  ``forcing(x, t)`` returns ``(f, g)``
    at points, with ``g`` the target of the tangential surface divergence.
    """
    mesh = band.mesh
    fr = patches.frames
    if basis is None:
        basis = surface_basis(mesh, patches)
    gl, lam, phi, dphi = basis.gl, basis.lam, basis.phi, basis.dphi
    own = patches.owner
    cut = patches.tets
    order = params.bdf_order
    coeffs = params.bdf
    if len(history) < order:
        raise ValueError(f"BDF{order} needs {order} history fields")

    # advection c = u* + I_h(w_N n) with u* = u^{n-1} (BDF1) or the second-order
    # extrapolation 2 u^{n-1} - u^{n-2} (BDF2)
    wn_nodes = node_normal_velocity(mesh, cut, surface, t)
    c = np.einsum("qa,qak->qk", phi, wn_nodes[own])
    hist_vals = [np.einsum("qa,qak->qk", phi, history[j].nodal(cut)[own])
                 for j in range(order)]
    if order:
        c = c + advection_extrapolation(hist_vals)

    Ks = kernels.surface_velocity_block(
        patches.offsets, patches.weights, phi, dphi, fr.n, fr.H, c, fr.w_N,
        coeffs[0] / params.dt, params.mu, params.tau, backend=backend, threads=threads)

    w = patches.weights
    F = np.zeros((len(w), 3))
    G = np.zeros(len(w))
    if forcing is not None:
        f, g = forcing(patches.points, t)
        F += f
        G += g
    for j in range(order):
        F -= coeffs[j + 1] / params.dt * project_tangential(hist_vals[j], fr.n)
    B, e, Fu, Fp = kernels.surface_coupling_block(
        patches.offsets, w, phi, lam, gl, fr.n, F, G, backend=backend, threads=threads)

    # volume stabilisations
    Kv = volume_normal_gradient(mesh, band.band_tets, surface, t, params.rho_u, p2=True)
    C = volume_normal_gradient(mesh, cut, surface, t, params.rho_p, p2=False)
    return LocalSystem(Ks, Kv, B, C, e, Fu, Fp)


def volume_normal_gradient(mesh, tets, surface, t, rho, p2=True, rule=TETRAHEDRON_DEG7):
    """``rho int_K (n . grad a)(n . grad b) dx`` for P2 (10x10) or P1 (4x4)."""
    from .mesh import _nudge_origin
    X = mesh.tet_points(tets)
    gl = barycentric_gradients(X)
    vol = tet_volume(X)
    nq = len(rule)
    pts = np.einsum("qv,evd->eqd", rule.points, X)
    n = surface.unit_normal(_nudge_origin(pts.reshape(-1, 3), mesh.h), t).reshape(-1, nq, 3)
    if p2:
        # dphi_a = sum_v D[q, a, v] grad(lambda_v) with D depending only on the rule
        nd = np.einsum("qav,evd,eqd->eqa", p2_gradient_table(rule.points), gl, n,
                       optimize=True)
    else:
        nd = np.einsum("ead,eqd->eqa", gl, n)
    return rho * np.einsum("q,e,eqa,eqb->eab", rule.weights, vol, nd, nd)


def scatter(local, dofmap, n_band_tets=None):
    """Global CSR matrix and rhs from element arrays."""
    nu = dofmap.n_u
    N = dofmap.size
    vc = dofmap.velocity_index(dofmap.cut_nodes)  # (E, 30)
    pc = dofmap.pressure_index(dofmap.cut_pressure)  # (E, 4)
    rows, cols, vals = [], [], []

    def add(r, c_, v):
        rows.append(np.broadcast_to(r[:, :, None], v.shape).ravel())
        cols.append(np.broadcast_to(c_[:, None, :], v.shape).ravel())
        vals.append(v.ravel())

    add(vc, vc, local.Ks)
    bn = dofmap.band_nodes
    for k in range(3):
        add(bn + k * nu, bn + k * nu, local.Kv)
    add(pc, vc, local.B)
    add(vc, pc, np.swapaxes(local.B, 1, 2))
    add(pc, pc, -local.C)
    lam = np.full((len(pc), 1), N - 1)
    add(pc, lam, local.e[:, :, None])
    add(lam, pc, local.e[:, None, :])
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    b = np.bincount(vc.ravel(), weights=local.Fu.ravel(), minlength=N)
    b += np.bincount(pc.ravel(), weights=local.Fp.ravel(), minlength=N)
    return A, b


def assemble(band, patches, dofmap, surface, params, t, history=(), forcing=None,
             threads=1, backend=None, keep_local=False, basis=None):
    """Assemble the full saddle-point system at time ``t``."""
    local = assemble_local(band, patches, dofmap, surface, params, t, history, forcing,
                           threads=threads, backend=backend, basis=basis)
    A, b = scatter(local, dofmap)
    return SaddleSystem(A, b, dofmap, params, local if keep_local else None)


def split_solution(x, band, dofmap):
    nu, npr = dofmap.n_u, dofmap.n_p
    u = FieldVector(band, dofmap, x[:3 * nu].reshape(3, nu).T.copy())
    p = FieldVector(band, dofmap, x[3 * nu:3 * nu + npr].copy(), kind="pressure")
    return u, p, float(x[-1])
