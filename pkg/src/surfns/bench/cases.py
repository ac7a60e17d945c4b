"""Experiment definitions: manufactured solution on a pulsating sphere and
tangential flows on deforming spheres, with their forcing terms."""
from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt

import numpy as np

from ..errors import TooFarFromSurfaceError
from ..geometry import HarmonicSurface, SphereSurface, area_variation_rate, projector

NEAR_SURFACE_TOL = 0.1  # max |phi| at which forcing terms may be evaluated
FD_STEP = 1e-4


def _fd4(func, x, direction, step):
    """Fourth-order central difference of ``func`` at ``x`` along ``direction``."""
    d = step * np.asarray(direction, dtype=float)
    return (-func(x + 2 * d) + 8 * func(x + d) - 8 * func(x - d) + func(x - 2 * d)) / (12 * step)


def ambient_gradient(func, x, step=FD_STEP):
    """``d func / d x_k`` stacked on a trailing axis (4th-order differences)."""
    parts = [_fd4(func, x, e, step) for e in np.eye(3)]
    return np.stack(parts, axis=-1)


def surface_divergence_tensor(func, x, P, step=FD_STEP):
    """``(div_G A)_i = sum_jk d_k A_ij P_kj`` for a matrix field ``A = func(x)``."""
    dA = ambient_gradient(func, x, step)  # (..., i, j, k)
    return np.einsum("...ijk,...kj->...i", dA, P)


def _check_near(phi, what):
    bad = np.abs(phi) > NEAR_SURFACE_TOL
    if np.any(bad):
        raise TooFarFromSurfaceError(
            f"{what} evaluated {np.abs(phi).max():.3g} away from the surface "
            f"(limit {NEAR_SURFACE_TOL})")


# ---------------------------------------------------------------- manufactured

@dataclass(frozen=True)
class ManufacturedCase:
    """``u = P(x)(1 - 2t, 0, 0)``, ``p = x y^2 + z`` on ``|x| = 1 + sin(2 pi t)/4``."""

    mu: float = 5e-3
    T: float = 1.0
    surface: SphereSurface = field(default_factory=SphereSurface.oscillating)

    @staticmethod
    def a(t):
        return np.array([1.0 - 2.0 * t, 0.0, 0.0])

    def velocity(self, x, t):
        x = np.asarray(x, dtype=float)
        n = x / np.linalg.norm(x, axis=-1, keepdims=True)
        a = self.a(t)
        return a - n * (n @ a)[..., None]

    def velocity_gradient(self, x, t):
        """Ambient gradient ``(d u_i / d x_j)`` of the 0-homogeneous extension."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        n = x / r[..., None]
        a = self.a(t)
        na = n @ a
        Pa = a - n * na[..., None]
        return -(na[..., None, None] * projector(n) + n[..., :, None] * Pa[..., None, :]) \
            / r[..., None, None]

    @staticmethod
    def pressure_raw(x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] * x[..., 1] ** 2 + x[..., 2]

    @staticmethod
    def pressure_grad_raw(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 1] ** 2, 2 * x[..., 0] * x[..., 1], np.ones(x.shape[:-1])],
                        axis=-1)

    def project(self, x, t):
        """Closest point ``r(t) x / |x|`` on the exact sphere."""
        x = np.asarray(x, dtype=float)
        return self.surface.radius(t) * x / np.linalg.norm(x, axis=-1, keepdims=True)

    def pressure(self, x, t):
        """Normal extension of ``p`` (no mean shift)."""
        return self.pressure_raw(self.project(x, t))

    def strain(self, x, t):
        """``E_s(u) = P sym(grad u) P = -(n . a) P / |x|`` off the surface as well."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        n = x / r[..., None]
        return -((n @ self.a(t)) / r)[..., None, None] * projector(n)

    def initial_velocity(self, x):
        return self.velocity(x, 0.0)

    def forcing(self, x, t):
        """Right-hand sides as passed to the solver: ``(f, div_G u_T)``."""
        f, g = manufactured_forcing(x, t, self)
        w_N = self.surface.dradius(t)
        y = self.project(x, t)
        kappa = 2.0 / np.linalg.norm(y, axis=-1)
        return f, g - w_N * kappa


def manufactured_forcing(x, t, case=None):
    """Momentum forcing ``f`` and ``g = div_G u_T + w_N kappa`` at near-surface points.

    All terms are evaluated at the closest point on the exact sphere, i.e.
    they are normal extensions.
    """
    case = case or ManufacturedCase()
    s = case.surface
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_near(s.phi(x, t), "manufactured forcing")
    r = s.radius(t)
    w_N = s.dradius(t)
    y = case.project(x, t)
    n = y / r
    P = projector(n)
    u = case.velocity(y, t)
    G = case.velocity_gradient(y, t)

    # normal time derivative: d/dt u(r(t) n, t) along the normal trajectory
    def along(tt):
        return case.velocity(s.radius(tt) * n, tt)

    dt = FD_STEP
    du = (-along(t + 2 * dt) + 8 * along(t + dt) - 8 * along(t - dt) + along(t - 2 * dt)) \
        / (12 * dt)
    conv = np.einsum("qij,qjk,qk->qi", G, P, u)
    curv = (w_N / r) * u
    visc = surface_divergence_tensor(lambda z: case.strain(z, t), y, P, FD_STEP * r)
    gradp = case.pressure_grad_raw(y)
    f = du + conv + curv - 2 * case.mu * visc + gradp
    f = np.einsum("qij,qj->qi", P, f)
    div_u = np.einsum("qij,qji->q", G, P)
    g = div_u + w_N * 2.0 / r
    return f, g


# ---------------------------------------------------------------- deforming sphere

def _const(v):
    return lambda t: v


@dataclass(frozen=True)
class DeformCase:
    """Radially deformed unit sphere ``r = 1 + sum A_nm(t) Y_nm``.

    ``coeffs`` maps ``(n, m)`` to ``(A, A')`` callables.
    """

    coeffs: dict
    mu: float
    eps: float = 0.2
    omega: float = 2 * pi
    T: float = 1.0
    name: str = "custom"

    @property
    def surface(self):
        return HarmonicSurface(self.coeffs)

    def area_variation_rate(self, t):
        return area_variation_rate({nm: (a(t), da(t)) for nm, (a, da) in self.coeffs.items()})

    def forcing(self, x, t):
        return deform_forcing(x, t, self)

    @classmethod
    def axisymmetric(cls, eps=0.2, omega=2 * pi, mu=0.5e-4):
        """Zonal degree-2 and degree-3 modes with zero area variation."""
        c2, c3 = eps / 2, eps / sqrt(10)
        coeffs = {
            (2, 0): (lambda t: c2 * cos(omega * t), lambda t: -c2 * omega * sin(omega * t)),
            (3, 0): (lambda t: c3 * sin(omega * t), lambda t: c3 * omega * cos(omega * t)),
        }
        return cls(coeffs, mu, eps, omega, name="axisymmetric")

    @classmethod
    def asymmetric(cls, eps=0.2, omega=2 * pi, mu=0.5e-5, fix_inextensibility=False):
        """Axisymmetric modes plus ``0.1 (cos(4 pi t)/2 Y_31 + c sin(4 pi t) Y_42)``.

        The published amplitude ``c = 5/18`` leaves a residual area variation
        rate ``pi (1/18 - 1/10) sin(4 pi t) cos(4 pi t)``; ``c = sqrt(5)/6``
        (``fix_inextensibility``) cancels it.
        """
        base = cls.axisymmetric(eps, omega, mu)
        c42 = sqrt(5) / 6 if fix_inextensibility else 5 / 18
        a31, a42 = 0.1 * 0.5, 0.1 * c42
        w = 4 * pi
        coeffs = dict(base.coeffs)
        coeffs[(3, 1)] = (lambda t: a31 * cos(w * t), lambda t: -a31 * w * sin(w * t))
        coeffs[(4, 2)] = (lambda t: a42 * sin(w * t), lambda t: a42 * w * cos(w * t))
        return cls(coeffs, mu, eps, omega,
                   name="asymmetric-fixed" if fix_inextensibility else "asymmetric")

    @classmethod
    def static(cls, mu=0.5e-4):
        return cls({(2, 0): (_const(0.0), _const(0.0))}, mu, 0.0, 0.0, name="static")


def asymmetric_residual_rate(t, fix_inextensibility=False):
    """Closed-form area variation rate of the asymmetric coefficient set."""
    if fix_inextensibility:
        return 0.0
    return pi * (1 / 18 - 1 / 10) * sin(4 * pi * t) * cos(4 * pi * t)


def deform_forcing(x, t, case):
    """``f = 2 mu P div_G(w_N H) + grad_G(w_N^2)/2`` and ``g = -w_N kappa``.

    Works for any surface exposing ``frames`` (the deforming sphere, or a
    radially moving sphere).  Derivatives are 4th-order central differences
    of the extended fields with step ``1e-4``.
    """
    surface = case.surface if hasattr(case, "surface") else case
    mu = case.mu
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_near(surface.phi(x, t), "deform forcing")
    fr = surface.frames(x, t)
    g = -fr.w_N * fr.kappa

    def fields(z):
        # w_N H and w_N^2 packed as (..., 10) so that one frame evaluation serves both
        fz = surface.frames(z, t, check_gradient=False)
        out = np.empty(z.shape[:-1] + (10,))
        out[..., :9] = (fz.w_N[..., None, None] * fz.H).reshape(z.shape[:-1] + (9,))
        out[..., 9] = fz.w_N ** 2
        return out

    d = ambient_gradient(fields, x)  # (..., 10, k)
    dwH = d[..., :9, :].reshape(x.shape[:-1] + (3, 3, 3))
    div_wH = np.einsum("...ijk,...kj->...i", dwH, fr.P)
    grad_w2 = d[..., 9, :]
    f = 2 * mu * div_wH + 0.5 * grad_w2
    f = np.einsum("qij,qj->qi", fr.P, f)
    return f, g
