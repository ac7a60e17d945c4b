"""Time-dependent implicit surfaces and their frame quantities.

Every evaluation routine is vectorised over a leading batch of points:
``x`` has shape ``(..., 3)`` and results carry the same leading shape.
"""
from dataclasses import dataclass
from math import pi, sin, cos, sqrt

import numpy as np

from .errors import DegenerateGradientError, DomainError, TooFarFromSurfaceError
from . import kernels
from .harmonics import (monomial_exponents, polynomial_jet, solid_harmonic_coefficients, sph_harmonic,
                        zero_homogeneous_jet)

#: smallest admissible |grad phi| near the surface
MIN_GRADIENT = 0.5


@dataclass(frozen=True)
class SurfaceFrame:
    """Normal, projector, Weingarten map, doubled mean curvature, normal speed."""

    n: np.ndarray
    P: np.ndarray
    H: np.ndarray
    kappa: np.ndarray
    w_N: np.ndarray

    def __getitem__(self, idx):
        return SurfaceFrame(self.n[idx], self.P[idx], self.H[idx],
                            self.kappa[idx], self.w_N[idx])


def projector(n):
    n = np.asarray(n, dtype=float)
    return np.eye(3) - n[..., :, None] * n[..., None, :]


def _fd_jacobian(func, x, step):
    """Central differences of a vector field ``func`` (..., 3) -> (..., 3)."""
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        cols.append((func(x + e) - func(x - e)) / (2 * step))
    # J[..., i, k] = d func_i / d x_k
    return np.stack(cols, axis=-1)


class LevelSetSurface:
    """Implicit surface ``{x : phi(x, t) = 0}`` with outward-increasing phi.

    Subclasses supply ``phi`` and ideally ``grad``; the remaining derivatives
    fall back to finite differences.
    """

    kind = "custom"
    fd_step = 1e-4

    def phi(self, x, t):
        raise NotImplementedError

    def grad(self, x, t):
        s = 1e-6
        return _fd_jacobian(lambda y: self.phi(y, t)[..., None] * np.ones(3),
                            x, s)[..., 0, :]

    def hessian(self, x, t):
        J = _fd_jacobian(lambda y: self.grad(y, t), np.asarray(x, float), self.fd_step)
        return 0.5 * (J + np.swapaxes(J, -1, -2))

    def phi_t(self, x, t):
        s = 1e-6
        return (self.phi(x, t + s) - self.phi(x, t - s)) / (2 * s)

    def normal_speed(self, x, t):
        """Normal velocity ``w_N = -phi_t / |grad phi|``."""
        g = np.linalg.norm(self.grad(x, t), axis=-1)
        return -self.phi_t(x, t) / g

    def unit_normal(self, x, t):
        """``grad phi / |grad phi|`` (used off the surface by the volume terms)."""
        g = self.grad(x, t)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def hessian_bound(self, t):
        """Upper bound on ||Hess phi|| in a neighbourhood of the surface."""
        return 2.0

    def max_extent(self, t):
        """Radius of a ball around the origin that contains the surface."""
        return np.inf

    def frames(self, x, t, check_gradient=True):
        x = np.asarray(x, dtype=float)
        g = self.grad(x, t)
        gn = np.linalg.norm(g, axis=-1)
        if check_gradient and np.any(gn < MIN_GRADIENT):
            raise DegenerateGradientError(
                f"|grad phi| = {gn.min():.3g} < {MIN_GRADIENT} at t={t}")
        n = g / gn[..., None]
        P = projector(n)
        Hs = self.hessian(x, t)
        H = P @ Hs @ P / gn[..., None, None]
        H = 0.5 * (H + np.swapaxes(H, -1, -2))
        kappa = np.trace(H, axis1=-2, axis2=-1)
        return SurfaceFrame(n, P, H, kappa, self.normal_speed(x, t))


class CustomSurface(LevelSetSurface):
    """Level set given by user callables ``phi(x, t)`` and optional ``grad``."""

    def __init__(self, phi, grad=None, hessian_bound=2.0):
        self._phi = phi
        self._grad = grad
        self._hbound = hessian_bound

    def phi(self, x, t):
        return self._phi(np.asarray(x, dtype=float), t)

    def grad(self, x, t):
        if self._grad is None:
            return super().grad(x, t)
        return self._grad(np.asarray(x, dtype=float), t)

    def hessian_bound(self, t):
        return self._hbound


def _radius(x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise DomainError("radial level set is undefined at the origin")
    return x, r


class SphereSurface(LevelSetSurface):
    """Sphere of radius ``r(t)``; ``phi = |x| - r(t)`` is a signed distance."""

    kind = "sphere-radial"

    def __init__(self, radius=1.0, dradius=None):
        if callable(radius):
            self.radius = radius
            self.dradius = dradius if dradius is not None else (lambda t: 0.0)
        else:
            r0 = float(radius)
            self.radius = lambda t: r0
            self.dradius = lambda t: 0.0

    @classmethod
    def oscillating(cls):
        """``r(t) = 1 + sin(2 pi t) / 4``."""
        return cls(lambda t: 1.0 + 0.25 * sin(2 * pi * t),
                   lambda t: 0.5 * pi * cos(2 * pi * t))

    def phi(self, x, t):
        _, r = _radius(x)
        return r - self.radius(t)

    def grad(self, x, t):
        x, r = _radius(x)
        return x / r[..., None]

    def hessian(self, x, t):
        x, r = _radius(x)
        u = x / r[..., None]
        return projector(u) / r[..., None, None]

    def phi_t(self, x, t):
        _, r = _radius(x)
        return np.full_like(r, -self.dradius(t))

    def normal_speed(self, x, t):
        _, r = _radius(x)
        return np.full_like(r, self.dradius(t))

    def hessian_bound(self, t):
        return 2.0 / self.radius(t)

    def max_extent(self, t):
        return self.radius(t)

    def frames(self, x, t, check_gradient=True):
        x, r = _radius(x)
        n = x / r[..., None]
        P = projector(n)
        H = P / r[..., None, None]
        # trace rather than 2 / r keeps kappa == tr H bitwise
        return SurfaceFrame(n, P, H, np.trace(H, axis1=-2, axis2=-1),
                            np.full_like(r, self.dradius(t)))


class HarmonicSurface(LevelSetSurface):
    """Radially deformed unit sphere ``|x| = 1 + xi(x/|x|, t)``.

    ``coeffs`` maps ``(n, m)`` to a pair of callables ``(A(t), A'(t))``.
    The normal speed is the small-oscillation formula ``w_N = xi_t``.
    """

    kind = "harmonic-radial"

    def __init__(self, coeffs):
        self.coeffs = dict(coeffs)

    def coefficients(self, t):
        return {nm: (a(t), da(t)) for nm, (a, da) in self.coeffs.items()}

    def _forms(self, t, derivative=False):
        """Per-degree monomial coefficients of ``sum_m A_nm(t) |x|^n Y_nm``."""
        forms = {}
        for (n, m), (a, da) in self.coeffs.items():
            A = da(t) if derivative else a(t)
            if A == 0.0:
                continue
            c = A * solid_harmonic_coefficients(n, m)
            forms[n] = forms[n] + c if n in forms else c
        return forms

    def _xi(self, x, t, derivative=False, order=1, basis=None):
        """``xi`` (or ``xi_t``) with gradient/Hessian up to ``order``."""
        x, r = _radius(x)
        u = x / r[..., None]
        q, dq, d2q = polynomial_jet(self._forms(t, derivative), u, order, basis)
        if order < 1:
            return q, None, None
        grad, hess = zero_homogeneous_jet(q, dq, d2q, u, r)
        return q, grad, hess

    def displacement(self, x, t):
        """``xi``, ``grad xi`` and ``xi_t`` at ambient points."""
        x = np.asarray(x, dtype=float)
        xi, dxi, _ = self._xi(x, t)
        xi_t = self._xi(x, t, derivative=True, order=0)[0] if self.coeffs else xi * 0
        return xi, dxi, xi_t

    def _monomials(self, t):
        """All monomials of the displacement with coefficients of ``xi`` and ``xi_t``."""
        f, ft = self._forms(t), self._forms(t, derivative=True)
        degrees = sorted(set(f) | set(ft))
        if not degrees:
            return np.zeros((1, 3), np.int64), np.zeros(1), np.zeros(1)
        exps = np.concatenate([monomial_exponents(n) for n in degrees])
        c = np.concatenate([f.get(n, np.zeros(len(monomial_exponents(n)))) for n in degrees])
        ct = np.concatenate([ft.get(n, np.zeros(len(monomial_exponents(n)))) for n in degrees])
        return exps, c, ct

    def frames(self, x, t, check_gradient=True):
        x, r = _radius(x)
        shape = x.shape[:-1]
        out = kernels.harmonic_frames(x.reshape(-1, 3), *self._monomials(t))
        if out is not None:
            n, H, kappa, w_N, gn = out
            if check_gradient and np.any(gn < MIN_GRADIENT):
                raise DegenerateGradientError(
                    f"|grad phi| = {gn.min():.3g} < {MIN_GRADIENT} at t={t}")
            n = n.reshape(shape + (3,))
            return SurfaceFrame(n, projector(n), H.reshape(shape + (3, 3)),
                                kappa.reshape(shape), w_N.reshape(shape))
        return self._frames_numpy(x, t, check_gradient)

    def unit_normal(self, x, t):
        x, _ = _radius(x)
        out = kernels.harmonic_frames(x.reshape(-1, 3), *self._monomials(t))
        if out is None:
            return super().unit_normal(x, t)
        return out[0].reshape(x.shape)

    def _frames_numpy(self, x, t, check_gradient=True):
        x, r = _radius(x)
        u = x / r[..., None]
        basis = {}
        _, dxi, hxi = self._xi(x, t, order=2, basis=basis)
        w_N = self._xi(x, t, derivative=True, order=0, basis=basis)[0]
        g = u - dxi
        gn = np.linalg.norm(g, axis=-1)
        if check_gradient and np.any(gn < MIN_GRADIENT):
            raise DegenerateGradientError(
                f"|grad phi| = {gn.min():.3g} < {MIN_GRADIENT} at t={t}")
        n = g / gn[..., None]
        P = projector(n)
        Hs = projector(u) / r[..., None, None] - hxi
        H = P @ Hs @ P / gn[..., None, None]
        H = 0.5 * (H + np.swapaxes(H, -1, -2))
        return SurfaceFrame(n, P, H, np.trace(H, axis1=-2, axis2=-1), w_N)

    def hessian(self, x, t):
        x, r = _radius(x)
        _, _, hxi = self._xi(x, t, order=2)
        u = x / r[..., None]
        return projector(u) / r[..., None, None] - hxi

    def phi(self, x, t):
        x, r = _radius(x)
        return r - 1.0 - self._xi(x, t, order=0)[0]

    def grad(self, x, t):
        x, r = _radius(x)
        _, dxi, _ = self._xi(x, t)
        return x / r[..., None] - dxi

    def phi_t(self, x, t):
        _radius(x)
        return -self._xi(x, t, derivative=True, order=0)[0]

    def normal_speed(self, x, t):
        _radius(x)
        return self._xi(x, t, derivative=True, order=0)[0]

    def exact_normal_speed(self, x, t):
        return LevelSetSurface.normal_speed(self, x, t)

    def amplitude_bound(self, t):
        total = 0.0
        for (n, m), (a, _) in self.coeffs.items():
            # |Y_n^m| <= sqrt((2n+1)/(4 pi)) for orthonormal real harmonics (x sqrt2 if m)
            total += abs(a(t)) * sqrt((2 * n + 1) / (4 * pi)) * (sqrt(2.0) if m else 1.0)
        return total

    def hessian_bound(self, t):
        deg = max((n for n, _ in self.coeffs), default=0)
        return 2.0 * (1.0 + deg * (deg + 1) * self.amplitude_bound(t)) / max(
            1.0 - self.amplitude_bound(t), 0.25)

    def max_extent(self, t):
        return 1.0 + self.amplitude_bound(t)

    def radial_displacement(self, theta, phi, t):
        xi = 0.0
        xi_t = 0.0
        for (n, m), (a, da) in self.coeffs.items():
            y = sph_harmonic(n, m, theta, phi)
            xi = xi + a(t) * y
            xi_t = xi_t + da(t) * y
        return xi, xi_t


def eval_phi(surface, x, t):
    """Signed level-set value, negative inside."""
    return surface.phi(x, t)


def frame(surface, x, t, h=None):
    """Frame at a near-surface point; ``h`` enables the proximity check."""
    x = np.asarray(x, dtype=float)
    if h is not None:
        d = np.abs(surface.phi(x, t))
        if np.any(d > 0.1 * h):
            raise TooFarFromSurfaceError(
                f"|phi| = {d.max():.3g} exceeds 0.1 h = {0.1 * h:.3g}")
    return surface.frames(x, t)


def radial_displacement(surface, theta, phi, t):
    """``(xi, xi_t)`` of a harmonic-radial surface in spherical coordinates."""
    return surface.radial_displacement(theta, phi, t)


def area_variation_rate(coeffs):
    """``d|Gamma|/dt = sum (n-1)(n+2) A' A`` for ``{(n, m): (A, A')}``."""
    return float(sum((n - 1) * (n + 2) * dA * A for (n, _), (A, dA) in coeffs.items()))
