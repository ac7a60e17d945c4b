"""Pure NumPy implementation of the surface assembly kernel.

Kept numerically equivalent to the compiled ``_kernels`` extension; it is
selected automatically when the extension is unavailable.
"""
import numpy as np


def surface_velocity_block(offsets, w, phi, dphi, n, H, c, w_N, mass_coef, mu, tau,
                           chunk=4096):
    """Element matrices of the trace velocity forms, shape (E, 30, 30).

    Local index of component ``k`` of node ``a`` is ``k * 10 + a``; rows are
    test functions, columns trial functions.  Terms: BDF mass on ``P``,
    convection ``(grad u) c . P v``, curvature ``w_N H u . P v``, viscous
    ``2 mu E_s(Pu) : E_s(Pv)`` and normal penalty ``tau (u.n)(v.n)``.
    """
    E = len(offsets) - 1
    out = np.zeros((E, 30, 30))
    Q = len(w)
    if Q == 0:
        return out
    owner = np.repeat(np.arange(E), np.diff(offsets))
    for q0 in range(0, Q, chunk):
        s = slice(q0, min(q0 + chunk, Q))
        ww = w[s]
        nn = n[s]
        HH = H[s]
        P = np.eye(3) - nn[:, :, None] * nn[:, None, :]
        ph = phi[s]
        G = dphi[s]
        g = G @ P
        Hg = g @ HH
        sa = np.einsum("qad,qd->qa", G, c[s])
        hh = np.einsum("qij,qij->q", HH, HH)
        M = (mass_coef * P + w_N[s][:, None, None] * HH
             + (2 * mu * hh + tau)[:, None, None] * nn[:, :, None] * nn[:, None, :])
        A = ph[:, :, None] * ph[:, None, :]               # [b, a]
        S = ph[:, :, None] * sa[:, None, :] + mu * np.einsum("qbd,qad->qba", g, g)
        K = np.einsum("qba,qlk->qlbka", A, M)
        K += np.einsum("qba,qlk->qlbka", S, P)
        K += mu * np.einsum("qbk,qal->qlbka", g, g)
        K -= 2 * mu * np.einsum("qb,ql,qak->qlbka", ph, nn, Hg)
        K -= 2 * mu * np.einsum("qa,qk,qbl->qlbka", ph, nn, Hg)
        K *= ww[:, None, None, None, None]
        K = K.reshape(-1, 30, 30)
        own = owner[s]
        starts = np.flatnonzero(np.r_[True, own[1:] != own[:-1]])
        out[own[starts]] += np.add.reduceat(K, starts, axis=0)
    return out


def surface_coupling_block(offsets, w, phi, lam, gl, n, F, G, chunk=16384):
    """Pressure coupling and load vectors per cut element.

    Returns ``B`` (E, 4, 30) with ``B[c, l*10+b] = int (P grad psi_c)_l phi_b``,
    ``e`` (E, 4) ``= int psi_c``, ``Fu`` (E, 30) ``= int F_l phi_b`` and
    ``Fp`` (E, 4) ``= -int G psi_c``.
    """
    E = len(offsets) - 1
    B = np.zeros((E, 4, 30))
    ev = np.zeros((E, 4))
    Fu = np.zeros((E, 30))
    Fp = np.zeros((E, 4))
    Q = len(w)
    owner = np.repeat(np.arange(E), np.diff(offsets))
    for q0 in range(0, Q, chunk):
        s = slice(q0, min(q0 + chunk, Q))
        own = owner[s]
        ww = w[s]
        nn = n[s]
        g = gl[own]
        tg = g - np.einsum("qcd,qd->qc", g, nn)[:, :, None] * nn[:, None, :]
        starts = np.flatnonzero(np.r_[True, own[1:] != own[:-1]])
        ids = own[starts]
        B[ids] += np.add.reduceat(
            np.einsum("q,qcl,qb->qclb", ww, tg, phi[s]).reshape(-1, 4, 30), starts, axis=0)
        ev[ids] += np.add.reduceat(ww[:, None] * lam[s], starts, axis=0)
        Fu[ids] += np.add.reduceat(
            np.einsum("q,ql,qb->qlb", ww, F[s], phi[s]).reshape(-1, 30), starts, axis=0)
        Fp[ids] -= np.add.reduceat((ww * G[s])[:, None] * lam[s], starts, axis=0)
    return B, ev, Fu, Fp
