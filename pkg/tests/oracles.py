"""Independent brute-force references shared by the test modules.

The element oracle integrates every term of the discrete forms
straight from its definition, one basis pair at a time, on a quadrature
that is refined ``4**levels`` times on every surface triangle and
``8**levels`` times in every tetrahedron.
"""
import numpy as np

from surfns import fem
from surfns.fem import barycentric, barycentric_gradients, p2_basis
from surfns.quadrature import TETRAHEDRON_DEG5, TRIANGLE_DEG4, tet_volume, triangle_area


def refine_triangles(tris, levels):
    """Split every triangle into ``4**levels`` congruent children."""
    for _ in range(levels):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tris = np.concatenate([np.stack(t, axis=1) for t in
                               ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
    return tris


def refine_tet(X, levels):
    """Split a tetrahedron into ``8**levels`` children (Bey's red refinement)."""
    tets = X[None]
    for _ in range(levels):
        out = []
        for x0, x1, x2, x3 in tets:
            m = {(i, j): (p + q) / 2 for (i, p), (j, q) in
                 [((a, P), (b, Q)) for a, P in enumerate((x0, x1, x2, x3))
                  for b, Q in enumerate((x0, x1, x2, x3)) if a < b]}
            x = (x0, x1, x2, x3)
            out += [(x[0], m[0, 1], m[0, 2], m[0, 3]), (m[0, 1], x[1], m[1, 2], m[1, 3]),
                    (m[0, 2], m[1, 2], x[2], m[2, 3]), (m[0, 3], m[1, 3], m[2, 3], x[3]),
                    (m[0, 1], m[0, 2], m[0, 3], m[1, 3]), (m[0, 1], m[0, 2], m[1, 2], m[1, 3]),
                    (m[0, 2], m[0, 3], m[1, 3], m[2, 3]), (m[0, 2], m[1, 2], m[1, 3], m[2, 3])]
        tets = np.array(out)
    return tets


def dense_surface_points(triangles, levels=3):
    fine = refine_triangles(triangles, levels)
    pts = np.einsum("qv,tvd->tqd", TRIANGLE_DEG4.points, fine).reshape(-1, 3)
    w = (triangle_area(fine)[:, None] * TRIANGLE_DEG4.weights).reshape(-1)
    return pts, w


def dense_volume_points(X, levels=2):
    fine = refine_tet(X, levels)
    pts = np.einsum("qv,tvd->tqd", TETRAHEDRON_DEG5.points, fine).reshape(-1, 3)
    w = (tet_volume(fine)[:, None] * TETRAHEDRON_DEG5.weights).reshape(-1)
    return pts, w


def element_oracle(X, triangles, surface, t, params, wn_nodes, hist_nodes, forcing,
                   levels=3):
    """Reference element arrays of one cut tetrahedron.

    ``wn_nodes`` (10, 3) holds ``w_N n`` at the P2 nodes, ``hist_nodes`` a list
    of (10, 3) nodal history velocities (newest first), ``forcing(x, t)``
    returns ``(f, g)``.  Returns a dict with keys ``Ks, B, e, Fu, Fp, Kv, C``.
    """
    gl = barycentric_gradients(X[None])[0]
    pts, w = dense_surface_points(triangles, levels)
    Q = len(w)
    lam = barycentric(np.repeat(X[None], Q, 0), np.repeat(gl[None], Q, 0), pts)
    phi, dphi = p2_basis(lam, np.repeat(gl[None], Q, 0))
    fr = surface.frames(pts, t)
    coeffs = params.bdf
    hist = [phi @ h for h in hist_nodes]
    c = phi @ wn_nodes + (2 * hist[0] - hist[1] if len(hist) == 2 else hist[0])
    f, g = forcing(pts, t)
    F = f.copy()
    for j, hv in enumerate(hist):
        F -= coeffs[j + 1] / params.dt * (hv - fr.n * np.sum(hv * fr.n, -1, keepdims=True))
    I = np.eye(3)
    n, P, H, wN = fr.n, fr.P, fr.H, fr.w_N
    # trial/test functions phi_a e_k indexed by k * 10 + a
    U, Es, conv, PV = [], [], [], []
    for k in range(3):
        for a in range(10):
            u = phi[:, a, None] * I[k]
            grad_u = I[k][None, :, None] * dphi[:, a, None, :]
            sym = 0.5 * (grad_u + np.swapaxes(grad_u, 1, 2))
            U.append(u)
            Es.append(P @ sym @ P - (phi[:, a] * n[:, k])[:, None, None] * H)
            conv.append(np.sum(dphi[:, a] * c, axis=1)[:, None] * I[k])
            PV.append(np.einsum("qij,qj->qi", P, u))
    Ks = np.zeros((30, 30))
    for i in range(30):  # test
        v, Pv, Ev = U[i], PV[i], Es[i]
        for j in range(30):  # trial
            u = U[j]
            val = (coeffs[0] / params.dt * np.sum(u * Pv, 1)
                   + np.sum(conv[j] * Pv, 1)
                   + wN * np.einsum("qij,qj,qi->q", H, u, Pv)
                   + 2 * params.mu * np.einsum("qij,qij->q", Es[j], Ev)
                   + params.tau * np.sum(u * n, 1) * np.sum(v * n, 1))
            Ks[i, j] = w @ val
    Fu = np.array([w @ np.sum(F * U[i], 1) for i in range(30)])
    tg = np.einsum("qij,cj->qci", P, gl)
    B = np.zeros((4, 30))
    for cc in range(4):
        for l in range(3):
            for b in range(10):
                B[cc, l * 10 + b] = w @ (tg[:, cc, l] * phi[:, b])
    e = w @ lam
    Fp = -(w * g) @ lam

    vp, vw = dense_volume_points(X)
    V = len(vw)
    vl = barycentric(np.repeat(X[None], V, 0), np.repeat(gl[None], V, 0), vp)
    _, vd = p2_basis(vl, np.repeat(gl[None], V, 0))
    gn = surface.grad(vp, t)
    nv = gn / np.linalg.norm(gn, axis=-1, keepdims=True)
    nd2 = np.einsum("qad,qd->qa", vd, nv)
    nd1 = nv @ gl.T
    Kv = params.rho_u * np.einsum("q,qa,qb->ab", vw, nd2, nd2)
    C = params.rho_p * np.einsum("q,qa,qb->ab", vw, nd1, nd1)
    return dict(Ks=Ks, B=B, e=e, Fu=Fu, Fp=Fp, Kv=Kv, C=C)


def compare_with_oracle(setup, idx, surface, forcing, tol=1e-6):
    band, ps, loc = setup["band"], setup["patches"], setup["system"].local
    m = band.mesh
    wn = fem.node_normal_velocity(m, band.cut_tets, surface, setup["t"])
    pos = np.searchsorted(band.band_tets, band.cut_tets)
    worst = {}
    for i in idx:
        tet = band.cut_tets[i]
        ref = element_oracle(m.tet_points([tet])[0], ps.triangles[ps.tri_owner == i], surface,
                             setup["t"], setup["params"], wn[i],
                             [h.nodal([tet])[0] for h in setup["history"]], forcing)
        mine = dict(Ks=loc.Ks[i], B=loc.B[i], e=loc.e[i], Fu=loc.Fu[i], Fp=loc.Fp[i],
                    Kv=loc.Kv[pos[i]], C=loc.C[i])
        for k, r in ref.items():
            err = np.abs(mine[k] - r).max() / np.abs(r).max()
            worst[k] = max(worst.get(k, 0.0), err)
    return worst


def frame_invariant_errors(fr):
    """Largest violation of each SurfaceFrame invariant over a batch of frames."""
    T = lambda a: np.swapaxes(a, -1, -2)  # noqa: E731
    return {
        "unit_n": float(np.abs(np.linalg.norm(fr.n, axis=-1) - 1).max()),
        "P_sym": float(np.abs(fr.P - T(fr.P)).max()),
        "P_idem": float(np.abs(fr.P @ fr.P - fr.P).max()),
        "Pn": float(np.abs(np.einsum("...ij,...j->...i", fr.P, fr.n)).max()),
        "Hn": float(np.abs(np.einsum("...ij,...j->...i", fr.H, fr.n)).max()),
        "H_sym": float(np.abs(fr.H - T(fr.H)).max()),
        "kappa_trace": float(np.abs(fr.kappa - np.trace(fr.H, axis1=-2, axis2=-1)).max()),
    }
