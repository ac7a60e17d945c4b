# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled surface assembly kernel (see ``_kernels_py`` for the reference)."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt

cnp.import_array()


def surface_velocity_block(const cnp.int64_t[::1] offsets, const double[::1] w,
                           const double[:, ::1] phi, const double[:, :, ::1] dphi,
                           const double[:, ::1] n, const double[:, :, ::1] H,
                           const double[:, ::1] c, const double[::1] w_N,
                           double mass_coef, double mu, double tau, int nthreads=1):
    cdef Py_ssize_t E = offsets.shape[0] - 1
    out_arr = np.zeros((E, 30, 30))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t e
    for e in prange(E, nogil=True, num_threads=nthreads, schedule="static"):
        _element(e, offsets, w, phi, dphi, n, H, c, w_N, mass_coef, mu, tau, out)
    return out_arr


cdef void _element(Py_ssize_t e, const cnp.int64_t[::1] offsets, const double[::1] w,
                   const double[:, ::1] phi, const double[:, :, ::1] dphi,
                   const double[:, ::1] n, const double[:, :, ::1] H,
                   const double[:, ::1] c, const double[::1] w_N,
                   double mass_coef, double mu, double tau,
                   double[:, :, ::1] out) noexcept nogil:
    cdef double P[3][3]
    cdef double M[3][3]
    cdef double g[10][3]
    cdef double Hg[10][3]
    cdef double sa[10]
    cdef double ph[10]
    cdef double nn[3]
    cdef double hh, wq, A, S, gg, val
    cdef Py_ssize_t q, a, b, k, l, i
    for q in range(offsets[e], offsets[e + 1]):
        wq = w[q]
        for k in range(3):
            nn[k] = n[q, k]
        hh = 0.0
        for k in range(3):
            for l in range(3):
                P[k][l] = (1.0 if k == l else 0.0) - nn[k] * nn[l]
                hh = hh + H[q, k, l] * H[q, k, l]
        for k in range(3):
            for l in range(3):
                M[k][l] = mass_coef * P[k][l] + w_N[q] * H[q, k, l] \
                    + (2.0 * mu * hh + tau) * nn[k] * nn[l]
        for a in range(10):
            ph[a] = phi[q, a]
            sa[a] = 0.0
            for k in range(3):
                sa[a] = sa[a] + dphi[q, a, k] * c[q, k]
                g[a][k] = 0.0
                for i in range(3):
                    g[a][k] = g[a][k] + dphi[q, a, i] * P[i][k]
        for a in range(10):
            for k in range(3):
                Hg[a][k] = 0.0
                for i in range(3):
                    Hg[a][k] = Hg[a][k] + g[a][i] * H[q, i, k]
        for b in range(10):
            for a in range(10):
                A = ph[b] * ph[a]
                gg = g[b][0] * g[a][0] + g[b][1] * g[a][1] + g[b][2] * g[a][2]
                S = ph[b] * sa[a] + mu * gg
                for l in range(3):
                    for k in range(3):
                        val = A * M[l][k] + S * P[l][k] + mu * g[b][k] * g[a][l] \
                            - 2.0 * mu * ph[b] * nn[l] * Hg[a][k] \
                            - 2.0 * mu * ph[a] * nn[k] * Hg[b][l]
                        out[e, l * 10 + b, k * 10 + a] += wq * val


def surface_coupling_block(const cnp.int64_t[::1] offsets, const double[::1] w,
                           const double[:, ::1] phi, const double[:, ::1] lam,
                           const double[:, :, ::1] gl, const double[:, ::1] n,
                           const double[:, ::1] F, const double[::1] G, int nthreads=1):
    cdef Py_ssize_t E = offsets.shape[0] - 1
    B_arr = np.zeros((E, 4, 30))
    e_arr = np.zeros((E, 4))
    Fu_arr = np.zeros((E, 30))
    Fp_arr = np.zeros((E, 4))
    cdef double[:, :, ::1] B = B_arr
    cdef double[:, ::1] ev = e_arr
    cdef double[:, ::1] Fu = Fu_arr
    cdef double[:, ::1] Fp = Fp_arr
    cdef Py_ssize_t e
    for e in prange(E, nogil=True, num_threads=nthreads, schedule="static"):
        _coupling(e, offsets, w, phi, lam, gl, n, F, G, B, ev, Fu, Fp)
    return B_arr, e_arr, Fu_arr, Fp_arr


cdef void _coupling(Py_ssize_t e, const cnp.int64_t[::1] offsets, const double[::1] w,
                    const double[:, ::1] phi, const double[:, ::1] lam,
                    const double[:, :, ::1] gl, const double[:, ::1] n,
                    const double[:, ::1] F, const double[::1] G,
                    double[:, :, ::1] B, double[:, ::1] ev, double[:, ::1] Fu,
                    double[:, ::1] Fp) noexcept nogil:
    cdef double tg[4][3]
    cdef double dn, wq
    cdef Py_ssize_t q, a, c, l
    for q in range(offsets[e], offsets[e + 1]):
        wq = w[q]
        for c in range(4):
            dn = gl[e, c, 0] * n[q, 0] + gl[e, c, 1] * n[q, 1] + gl[e, c, 2] * n[q, 2]
            for l in range(3):
                tg[c][l] = wq * (gl[e, c, l] - dn * n[q, l])
            ev[e, c] += wq * lam[q, c]
            Fp[e, c] -= wq * G[q] * lam[q, c]
        for a in range(10):
            for l in range(3):
                Fu[e, l * 10 + a] += wq * F[q, l] * phi[q, a]
                for c in range(4):
                    B[e, c, l * 10 + a] += tg[c][l] * phi[q, a]


def harmonic_frames(const double[:, ::1] x, const cnp.int64_t[:, ::1] exps,
                    const double[::1] c, const double[::1] ct, int nthreads=1):
    """Frames of ``|x| = 1 + q(x/|x|)`` with ``q = sum c_k u^e_k``, ``q_t = sum ct_k u^e_k``.

    Returns ``(n, H, kappa, w_N, gnorm)``.
    """
    cdef Py_ssize_t Q = x.shape[0]
    n_arr = np.empty((Q, 3))
    H_arr = np.empty((Q, 3, 3))
    k_arr = np.empty(Q)
    w_arr = np.empty(Q)
    g_arr = np.empty(Q)
    cdef double[:, ::1] n = n_arr
    cdef double[:, :, ::1] H = H_arr
    cdef double[::1] kap = k_arr
    cdef double[::1] wN = w_arr
    cdef double[::1] gn = g_arr
    cdef Py_ssize_t q
    for q in prange(Q, nogil=True, num_threads=nthreads, schedule="static"):
        _harmonic_point(q, x, exps, c, ct, n, H, kap, wN, gn)
    return n_arr, H_arr, k_arr, w_arr, g_arr


cdef inline double _pw(double[9] p, Py_ssize_t e) noexcept nogil:
    return p[e] if e >= 0 else 0.0


cdef void _harmonic_point(Py_ssize_t q, const double[:, ::1] x,
                          const cnp.int64_t[:, ::1] exps, const double[::1] c,
                          const double[::1] ct, double[:, ::1] n, double[:, :, ::1] H,
                          double[::1] kap, double[::1] wN, double[::1] gn) noexcept nogil:
    cdef double u[3]
    cdef double pw[3][9]
    cdef double dq[3]
    cdef double d2q[3][3]
    cdef double P[3][3]
    cdef double Pu[3][3]
    cdef double gT[3]
    cdef double hxi[3][3]
    cdef double g[3]
    cdef double Hs[3][3]
    cdef double T[3][3]
    cdef double r, qv, qt, f0, f1, f2, d0, d1, d2, ud, nrm, tr, s
    cdef Py_ssize_t k, i, j, l, K = exps.shape[0]
    cdef long e0, e1, e2
    r = sqrt(x[q, 0] * x[q, 0] + x[q, 1] * x[q, 1] + x[q, 2] * x[q, 2])
    for i in range(3):
        u[i] = x[q, i] / r
        pw[i][0] = 1.0
        for j in range(1, 9):
            pw[i][j] = pw[i][j - 1] * u[i]
        dq[i] = 0.0
        for j in range(3):
            d2q[i][j] = 0.0
    qv = 0.0
    qt = 0.0
    for k in range(K):
        e0 = exps[k, 0]
        e1 = exps[k, 1]
        e2 = exps[k, 2]
        f0 = pw[0][e0]
        f1 = pw[1][e1]
        f2 = pw[2][e2]
        qv = qv + c[k] * f0 * f1 * f2
        qt = qt + ct[k] * f0 * f1 * f2
        if c[k] == 0.0:
            continue
        d0 = e0 * _pw(pw[0], e0 - 1)
        d1 = e1 * _pw(pw[1], e1 - 1)
        d2 = e2 * _pw(pw[2], e2 - 1)
        dq[0] = dq[0] + c[k] * d0 * f1 * f2
        dq[1] = dq[1] + c[k] * f0 * d1 * f2
        dq[2] = dq[2] + c[k] * f0 * f1 * d2
        d2q[0][0] = d2q[0][0] + c[k] * e0 * (e0 - 1) * _pw(pw[0], e0 - 2) * f1 * f2
        d2q[1][1] = d2q[1][1] + c[k] * f0 * e1 * (e1 - 1) * _pw(pw[1], e1 - 2) * f2
        d2q[2][2] = d2q[2][2] + c[k] * f0 * f1 * e2 * (e2 - 1) * _pw(pw[2], e2 - 2)
        d2q[0][1] = d2q[0][1] + c[k] * d0 * d1 * f2
        d2q[0][2] = d2q[0][2] + c[k] * d0 * f1 * d2
        d2q[1][2] = d2q[1][2] + c[k] * f0 * d1 * d2
    d2q[1][0] = d2q[0][1]
    d2q[2][0] = d2q[0][2]
    d2q[2][1] = d2q[1][2]
    # derivatives of xi(x) = q(x/|x|)
    for i in range(3):
        for j in range(3):
            Pu[i][j] = (1.0 if i == j else 0.0) - u[i] * u[j]
    ud = u[0] * dq[0] + u[1] * dq[1] + u[2] * dq[2]
    for i in range(3):
        gT[i] = dq[i] - ud * u[i]
    for i in range(3):
        for j in range(3):
            s = 0.0
            for l in range(3):
                s = s + d2q[i][l] * Pu[l][j]
            T[i][j] = s
    for i in range(3):
        for j in range(3):
            s = 0.0
            for l in range(3):
                s = s + Pu[i][l] * T[l][j]
            hxi[i][j] = (s - ud * Pu[i][j] - gT[i] * u[j] - u[i] * gT[j]) / (r * r)
    # level set phi = |x| - 1 - xi
    for i in range(3):
        g[i] = u[i] - gT[i] / r
    nrm = sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
    gn[q] = nrm
    for i in range(3):
        n[q, i] = g[i] / nrm
    for i in range(3):
        for j in range(3):
            P[i][j] = (1.0 if i == j else 0.0) - n[q, i] * n[q, j]
            Hs[i][j] = Pu[i][j] / r - hxi[i][j]
    for i in range(3):
        for j in range(3):
            s = 0.0
            for l in range(3):
                s = s + Hs[i][l] * P[l][j]
            T[i][j] = s
    tr = 0.0
    for i in range(3):
        for j in range(3):
            s = 0.0
            for l in range(3):
                s = s + P[i][l] * T[l][j]
            H[q, i, j] = s / nrm
        tr = tr + H[q, i, i]
    for i in range(3):
        for j in range(i + 1, 3):
            s = 0.5 * (H[q, i, j] + H[q, j, i])
            H[q, i, j] = s
            H[q, j, i] = s
    kap[q] = tr
    wN[q] = qt
