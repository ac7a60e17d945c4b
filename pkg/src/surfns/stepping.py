"""Time stepping: band sizing and migration, assembly, solve, diagnostics."""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import fem
from .cutgeom import reconstruct_band
from .errors import BandInclusionError, NonTangentialError
from .mesh import _nudge_origin, check_band_inclusion, extract_band, make_mesh
from .solver import solve

log = logging.getLogger(__name__)

SAFETY = 1.05  # margin on the sampled sup of |w_N|
N_SAMPLES = 5


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a transient run.

    ``tau``, ``rho_u`` and ``rho_p`` are ``h^-2``, ``h^-1`` and ``h`` times the
    respective scale factors.
    """

    level: int
    dt: float
    T: float = 1.0
    c_delta: float = 1.1
    mu: float = 5e-3
    tau_scale: float = 1.0
    rho_u_scale: float = 1.0
    rho_p_scale: float = 1.0
    rg: int = 2
    bdf: int = 2
    solver: str = "direct"
    tol: float = 1e-9
    threads: int = 1
    backend: str = None
    deterministic: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.c_delta >= 1:
            raise ValueError(f"c_delta must be >= 1, got {self.c_delta}")
        if self.bdf not in (1, 2):
            raise ValueError(f"bdf order must be 1 or 2, got {self.bdf}")
        if self.solver not in ("direct", "gmres"):
            raise ValueError(f"unknown solver {self.solver!r}")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class TransientState:
    """Solution and geometry at ``t``; ``history`` holds velocities newest first."""

    t: float
    step: int
    surface: object
    config: RunConfig
    band: object
    patches: object
    dofmap: object
    history: list
    pressure: object = None
    multiplier: float = 0.0
    kinetic: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    basis: object = field(default=None, repr=False)

    @property
    def velocity(self):
        return self.history[0]

    @property
    def mesh(self):
        return self.band.mesh


def band_width(surface, t_prev, t_now, c_delta, points=None, span=None):
    """``c_delta * sup|w_N| * span`` with the sup sampled on ``[t_prev, t_now]``.

    The sup is taken over ``points`` (default: a spherical point cloud scaled
    to the surface extent) at five equispaced times, times a 1.05 margin.
    ``span`` defaults to ``t_now - t_prev``.
    """
    if not t_now > t_prev:
        raise ValueError("band_width needs t_prev < t_now")
    if span is None:
        span = t_now - t_prev
    if points is None:
        points = fibonacci_sphere(2000) * surface.max_extent(t_prev)
    sup = 0.0
    for t in np.linspace(t_prev, t_now, N_SAMPLES):
        wn = surface.normal_speed(points, t)
        sup = max(sup, float(np.max(np.abs(wn))) if np.size(wn) else 0.0)
    return c_delta * SAFETY * sup * span


def fibonacci_sphere(n):
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(1 - z * z)
    a = np.pi * (1 + 5 ** 0.5) * k
    return np.stack([r * np.cos(a), r * np.sin(a), z], axis=-1)


def assembly_params(config, h, order):
    return fem.AssemblyParams.default(h, config.mu, config.dt, order, config.tau_scale,
                                      config.rho_u_scale, config.rho_p_scale)


def _geometry(mesh, surface, t, config, sample_points):
    """Band and patches at ``t``.

    The band must contain the cut tetrahedra of the next ``bdf`` steps (the
    field at ``t`` is history for both of them under BDF2), so
    ``delta = c_delta * sup|w_N| * bdf * dt`` with the sup sampled over
    ``[t - bdf dt, t + bdf dt]``.
    """
    k = config.bdf
    delta = band_width(surface, t - k * config.dt, t + k * config.dt, config.c_delta,
                       points=sample_points, span=k * config.dt)
    band = extract_band(mesh, surface, t, delta, rg=config.rg)
    patches = reconstruct_band(mesh, band.cut_tets, surface, t, rg=config.rg)
    return band, patches


def initial_state(surface, config, u0=None, t0=0.0):
    """Interpolate the (extended) initial velocity on the initial band."""
    mesh = make_mesh(config.level)
    band, patches = _geometry(mesh, surface, t0, config, None)
    dofmap = fem.build_dofmap(band)
    if u0 is None:
        u = fem.FieldVector.zeros(band, dofmap)
    else:
        sample = patches.points[:: max(1, len(patches.points) // 2000)]
        fr = surface.frames(sample, t0)
        un = np.abs(np.sum(np.asarray(u0(sample), float) * fr.n, axis=-1))
        if un.size and un.max() > 1e-10:
            raise NonTangentialError(
                f"initial velocity has |u0.n| up to {un.max():.3e} on the surface")
        u = fem.FieldVector.interpolate(
            band, dofmap, lambda x: u0(_nudge_origin(x, mesh.h)))
    state = TransientState(t0, 0, surface, config, band, patches, dofmap, [u])
    state.kinetic.append(kinetic_energy(state))
    return state


def advance(state, forcing=None, config=None):
    """One time step; returns the new state (the old one is left untouched).

    ``forcing(x, t)`` returns ``(f, g)`` with ``g`` the prescribed tangential
    surface divergence.
    """
    config = config or state.config
    surface = state.surface
    mesh = state.mesh
    t = state.t + config.dt
    order = min(config.bdf, len(state.history))
    band, patches = _geometry(mesh, surface, t, config, state.patches.points)
    for j, hist in enumerate(state.history[:order]):
        missing = check_band_inclusion(band, hist.band)
        if missing:
            raise BandInclusionError(
                f"{len(missing)} cut tetrahedra at t={t:.6g} lie outside the band of "
                f"t={hist.band.t:.6g}; increase c_delta or reduce dt", missing)
    dofmap = fem.build_dofmap(band)
    params = assembly_params(config, mesh.h, order)
    basis = fem.surface_basis(mesh, patches)
    forcing = _cached_forcing(forcing, patches.points, t)
    system = fem.assemble(band, patches, dofmap, surface, params, t,
                          history=state.history[:order], forcing=forcing,
                          threads=config.threads, backend=config.backend, basis=basis)
    x, report = solve(system, tol=config.tol, method=config.solver)
    u, p, lam = fem.split_solution(x, band, dofmap)
    new = TransientState(t, state.step + 1, surface, config, band, patches, dofmap,
                         [u] + state.history[:config.bdf - 1], p, lam,
                         list(state.kinetic), list(state.diagnostics),
                         state.reports + [report], basis)
    new.kinetic.append(kinetic_energy(new))
    rec = energy_report(new, forcing, order=order)
    rec["area"] = patches.area
    rec["max_un"] = normal_component_norm(new)
    rec["dofs"] = dofmap.size
    new.diagnostics.append(rec)
    log.debug("t=%.4f dofs=%d residual=%.2e solve=%.2fs", t, dofmap.size,
              report.residual, report.wall_time)
    return new


def _cached_forcing(forcing, points, t):
    """Evaluate ``forcing`` once on the step's quadrature points."""
    if forcing is None:
        return None
    f, g = forcing(points, t)
    f = np.broadcast_to(np.asarray(f, dtype=float), points.shape)
    g = np.broadcast_to(np.asarray(g, dtype=float), points.shape[:1])

    def cached(x, tt):
        if x is points and tt == t:
            return f, g
        return forcing(x, tt)

    return cached


# ---------------------------------------------------------------- diagnostics

def surface_values(state, with_gradient=True):
    """Velocity (and ambient gradient) at the current surface quadrature points."""
    if state.basis is None:
        state.basis = fem.surface_basis(state.mesh, state.patches)
    return fem.surface_field(state.velocity, state.patches, state.basis, with_gradient)


def kinetic_energy(state):
    """``1/2 |P u_h|^2`` over the current discrete surface."""
    ps = state.patches
    u = surface_values(state, with_gradient=False)
    ut = fem.project_tangential(u, ps.frames.n)
    return 0.5 * float(np.sum(ps.weights * np.sum(ut * ut, axis=1)))


def normal_component_norm(state):
    """``|u_h . n|`` in L2 of the discrete surface."""
    ps = state.patches
    u = surface_values(state, with_gradient=False)
    un = np.sum(u * ps.frames.n, axis=1)
    return float(np.sqrt(np.sum(ps.weights * un * un)))


def energy_report(state, forcing=None, order=None):
    """Terms of the kinetic energy balance on the current surface.

    ``balance_residual = d/dt kinetic + dissipation + exchange - power`` where
    the time derivative applies the BDF formula to the stored kinetic energies.
    """
    ps = state.patches
    fr = ps.frames
    w = ps.weights
    mu = state.config.mu
    u, grad = surface_values(state)
    ut = fem.project_tangential(u, fr.n)
    un = np.sum(u * fr.n, axis=1)
    E = fem.strain_tensor(grad, un, fr.P, fr.H)
    kin = 0.5 * float(np.sum(w * np.sum(ut * ut, axis=1)))
    diss = 2 * mu * float(np.sum(w * np.einsum("qij,qij->q", E, E)))
    Hk = fr.H - 0.5 * fr.kappa[:, None, None] * np.eye(3)
    exch = float(np.sum(w * fr.w_N * np.einsum("qi,qij,qj->q", ut, Hk, ut)))
    power = 0.0
    if forcing is not None:
        f, _ = forcing(ps.points, state.t)
        power = float(np.sum(w * np.sum(f * ut, axis=1)))
    rec = {"t": state.t, "kinetic": kin, "dissipation": diss, "exchange": exch,
           "power": power, "balance_residual": float("nan")}
    K = state.kinetic
    if order is None:
        order = min(state.config.bdf, len(K) - 1)
    if order >= 1 and len(K) > order:
        c = fem.BDF_COEFFS[order]
        dk = sum(c[j] * K[-1 - j] for j in range(order + 1)) / state.config.dt
        rec["balance_residual"] = dk + diss + exch - power
    return rec


def run(surface, config, u0=None, forcing=None, callback=None, t0=0.0):
    """Integrate to ``config.T``; ``callback(state)`` is called after every step."""
    state = initial_state(surface, config, u0, t0)
    if callback is not None:
        callback(state)
    for _ in range(config.n_steps):
        state = advance(state, forcing, config)
        if callback is not None:
            callback(state)
    return state
