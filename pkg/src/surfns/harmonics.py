"""Real, L2-orthonormal spherical harmonics on the unit sphere.

The associated Legendre functions are evaluated through their
"reduced" form ``P_n^m(z) = Q_n^m(z) (1 - z^2)^(m/2)``, where ``Q_n^m`` is
a polynomial obtained from the usual three-term recurrence.  The factor
``(1 - z^2)^(m/2) cos(m phi)`` is written as ``Re (x + i y)^m`` on the unit
sphere, so every harmonic becomes a polynomial in the Cartesian components
of the unit vector.  This gives gradients without pole singularities.

Convention: Condon-Shortley phase in ``P_n^m``; ``m > 0`` selects
``cos(m phi)``, ``m < 0`` selects ``sin(|m| phi)``.
"""
from math import factorial, pi, sqrt

import numpy as np

from .errors import InvalidIndexError

MAX_DEGREE = 8


def _check_index(n, m):
    if not (0 <= abs(m) <= n <= MAX_DEGREE) or int(n) != n or int(m) != m:
        raise InvalidIndexError(
            f"need 0 <= |m| <= n <= {MAX_DEGREE}, got (n, m) = ({n}, {m})")


def normalization(n, m):
    m = abs(m)
    c = sqrt((2 * n + 1) / (4 * pi) * factorial(n - m) / factorial(n + m))
    return c * sqrt(2.0) if m else c


def reduced_legendre(n, m, z):
    """Return ``Q_n^m(z)`` and ``dQ_n^m/dz`` for ``m >= 0``."""
    z = np.asarray(z, dtype=float)
    # Q_m^m = (-1)^m (2m-1)!!
    dfact = 1.0
    for k in range(1, 2 * m, 2):
        dfact *= k
    q_prev = np.full_like(z, (-1) ** m * dfact)
    dq_prev = np.zeros_like(z)
    if n == m:
        return q_prev, dq_prev
    q = z * (2 * m + 1) * q_prev
    dq = (2 * m + 1) * q_prev
    for ell in range(m + 2, n + 1):
        q_new = ((2 * ell - 1) * z * q - (ell + m - 1) * q_prev) / (ell - m)
        dq_new = ((2 * ell - 1) * (q + z * dq) - (ell + m - 1) * dq_prev) / (ell - m)
        q_prev, dq_prev, q, dq = q, dq, q_new, dq_new
    return q, dq


def _azimuthal(m, x, y):
    """``Re/Im (x + i y)^|m|`` and its x/y partials."""
    k = abs(m)
    if k == 0:
        one = np.ones_like(x)
        return one, np.zeros_like(x), np.zeros_like(x)
    w = (x + 1j * y) ** k
    wm1 = (x + 1j * y) ** (k - 1)
    if m > 0:
        return w.real, k * wm1.real, -k * wm1.imag
    return w.imag, k * wm1.imag, k * wm1.real


def harmonic_on_unit(n, m, u):
    """Evaluate the harmonic at unit vectors ``u`` of shape ``(..., 3)``."""
    _check_index(n, m)
    u = np.asarray(u, dtype=float)
    q, _ = reduced_legendre(n, abs(m), u[..., 2])
    t, _, _ = _azimuthal(m, u[..., 0], u[..., 1])
    return normalization(n, m) * q * t


def harmonic_polynomial_grad(n, m, u):
    """Ambient gradient of the polynomial form of the harmonic at ``u``.

    Only the tangential part (w.r.t. the unit sphere) is meaningful.
    """
    _check_index(n, m)
    u = np.asarray(u, dtype=float)
    q, dq = reduced_legendre(n, abs(m), u[..., 2])
    t, tx, ty = _azimuthal(m, u[..., 0], u[..., 1])
    c = normalization(n, m)
    return c * np.stack([q * tx, q * ty, dq * t], axis=-1)


def sph_harmonic(n, m, theta, phi):
    """Real orthonormal spherical harmonic at colatitude ``theta``, azimuth ``phi``.

    >>> round(float(sph_harmonic(0, 0, 0.3, 1.0)), 6)
    0.282095
    """
    _check_index(n, m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    u = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    return harmonic_on_unit(n, m, u)


def harmonic_field(n, m, x):
    """Value and gradient of ``x -> Y(x/|x|)`` (0-homogeneous extension)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    u = x / r[..., None]
    val = harmonic_on_unit(n, m, u)
    g = harmonic_polynomial_grad(n, m, u)
    g = g - u * np.sum(u * g, axis=-1, keepdims=True)
    return val, g / r[..., None]


# ---------------------------------------------------------------- solid harmonics

def monomial_exponents(n):
    """Exponents ``(i, j, k)`` with ``i + j + k = n`` in a fixed order."""
    return np.array([(i, j, n - i - j) for i in range(n, -1, -1) for j in range(n - i, -1, -1)],
                    dtype=np.int64)


_SOLID_CACHE = {}


def solid_harmonic_coefficients(n, m):
    """Monomial coefficients of the homogeneous polynomial ``|x|^n Y_n^m(x/|x|)``.

    Obtained by exact interpolation on random points of the unit ball (the
    space of degree-``n`` forms is ``(n+1)(n+2)/2``-dimensional).
    """
    _check_index(n, m)
    key = (n, m)
    if key not in _SOLID_CACHE:
        exps = monomial_exponents(n)
        rng = np.random.default_rng(1234 + 31 * n + m)
        x = rng.standard_normal((4 * len(exps), 3))
        x *= (rng.uniform(0.5, 1.0, len(x)) / np.linalg.norm(x, axis=1))[:, None]
        r = np.linalg.norm(x, axis=1)
        vals = r ** n * harmonic_on_unit(n, m, x / r[:, None])
        V = np.prod(x[:, None, :] ** exps[None, :, :], axis=-1)
        c, *_ = np.linalg.lstsq(V, vals, rcond=None)
        c[np.abs(c) < 1e-13 * np.abs(c).max()] = 0.0
        _SOLID_CACHE[key] = c
    return _SOLID_CACHE[key]


_DERIV_CACHE = {}


def _derivative_operator(n, d):
    """Matrix mapping degree-``n`` coefficients to those of ``d/dx_d`` (degree n-1)."""
    key = (n, d)
    if key not in _DERIV_CACHE:
        src = monomial_exponents(n)
        dst = {tuple(e): i for i, e in enumerate(monomial_exponents(n - 1))} if n else {}
        D = np.zeros((len(dst), len(src)))
        for j, e in enumerate(src):
            if e[d] > 0:
                e2 = e.copy()
                e2[d] -= 1
                D[dst[tuple(e2)], j] = e[d]
        _DERIV_CACHE[key] = D
    return _DERIV_CACHE[key]


def monomial_matrix(x, n):
    """Values of all degree-``n`` monomials at ``x``, shape (..., K)."""
    x = np.asarray(x, dtype=float)
    exps = monomial_exponents(n)
    out = np.empty(x.shape[:-1] + (len(exps),))
    pw = [[np.ones(x.shape[:-1])] for _ in range(3)]
    for d in range(3):
        for _ in range(n):
            pw[d].append(pw[d][-1] * x[..., d])
    for k, (i, j, l) in enumerate(exps):
        out[..., k] = pw[0][i] * pw[1][j] * pw[2][l]
    return out


def homogeneous_derivatives(n, coeffs, x, order=2, basis=None):
    """Value, gradient and Hessian of ``sum c_k x^e_k`` over the degree-``n`` forms.

    ``basis`` may supply precomputed ``{k: monomial_matrix(x, k)}``.
    Derivatives above ``order`` are returned as ``None``.
    """
    x = np.asarray(x, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    basis = basis if basis is not None else {}

    def V(k):
        if k not in basis:
            basis[k] = monomial_matrix(x, k)
        return basis[k]

    val = V(n) @ coeffs
    grad = hess = None
    if order >= 1:
        if n == 0:
            grad = np.zeros(x.shape)
        else:
            dc = [_derivative_operator(n, d) @ coeffs for d in range(3)]
            grad = V(n - 1) @ np.stack(dc, axis=1)
    if order >= 2:
        if n < 2:
            hess = np.zeros(x.shape + (3,))
        else:
            cols = np.stack([_derivative_operator(n - 1, e) @ dc[d]
                             for d in range(3) for e in range(3)], axis=1)
            hess = (V(n - 2) @ cols).reshape(x.shape + (3,))
    return val, grad, hess


def zero_homogeneous_derivatives(n, coeffs, x, order=2, basis=None):
    """Derivatives of ``p(x) / |x|^n`` for a degree-``n`` form ``p``.

    Returns value, gradient and (for ``order=2``) Hessian; ``order=0``
    returns the value only.
    """
    x = np.asarray(x, dtype=float)
    p, dp, d2p = homogeneous_derivatives(n, coeffs, x, order, basis)
    r2 = np.sum(x * x, axis=-1)
    rn = r2 ** (-0.5 * n)
    val = p * rn
    if order < 1:
        return (val,)
    grad = (dp - (n * p / r2)[..., None] * x) * rn[..., None]
    if order < 2:
        return val, grad
    xx = x[..., :, None] * x[..., None, :]
    cross = dp[..., :, None] * x[..., None, :]
    hess = (d2p - (n / r2)[..., None, None] * (cross + np.swapaxes(cross, -1, -2))
            - (n * p / r2)[..., None, None] * np.eye(3)
            + (n * (n + 2) * p / r2 ** 2)[..., None, None] * xx) * rn[..., None, None]
    return val, grad, hess


def polynomial_jet(forms, u, order=2, basis=None):
    """Value, gradient, Hessian of ``q = sum_n forms[n] . monomials_n`` at ``u``."""
    u = np.asarray(u, dtype=float)
    basis = basis if basis is not None else {}
    q = np.zeros(u.shape[:-1])
    dq = np.zeros(u.shape) if order >= 1 else None
    d2q = np.zeros(u.shape + (3,)) if order >= 2 else None
    for n, c in forms.items():
        v, g, h = homogeneous_derivatives(n, c, u, order, basis)
        q += v
        if order >= 1:
            dq += g
        if order >= 2:
            d2q += h
    return q, dq, d2q


def zero_homogeneous_jet(q, dq, d2q, u, r):
    """Derivatives of ``F(x) = q(x/|x|)`` from the jet of ``q`` at ``u = x/|x|``.

    ``grad F = P dq / r`` and
    ``Hess F = (P d2q P - (u.dq) P - P dq u^T - u (P dq)^T) / r^2``.
    """
    P = np.eye(3) - u[..., :, None] * u[..., None, :]
    gT = np.einsum("...ij,...j->...i", P, dq)
    grad = gT / r[..., None]
    if d2q is None:
        return grad, None
    ud = np.sum(u * dq, axis=-1)
    outer = gT[..., :, None] * u[..., None, :]
    hess = (P @ d2q @ P - ud[..., None, None] * P - outer - np.swapaxes(outer, -1, -2)) \
        / (r * r)[..., None, None]
    return grad, hess
