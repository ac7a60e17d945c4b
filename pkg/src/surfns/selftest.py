"""Fast consistency checks used by ``surfns selftest``."""
from math import pi

import numpy as np

from .bench.cases import DeformCase, ManufacturedCase, manufactured_forcing
from .cutgeom import reconstruct_band
from .geometry import SphereSurface
from .mesh import extract_band, make_mesh
from .solver import solve_matrix


def _frames_ok(surface, rng, t):
    x = rng.standard_normal((500, 3))
    x /= np.linalg.norm(x, axis=1)[:, None]
    x *= surface.max_extent(t) if np.isfinite(surface.max_extent(t)) else 1.0
    fr = surface.frames(x, t, check_gradient=False)
    I = np.eye(3)
    ok = np.allclose(np.linalg.norm(fr.n, axis=1), 1, atol=1e-12)
    ok &= np.allclose(fr.P @ fr.P, fr.P, atol=1e-12)
    ok &= np.allclose(fr.P @ fr.n[..., None], 0, atol=1e-12)
    ok &= np.allclose(fr.H, np.swapaxes(fr.H, 1, 2), atol=1e-10)
    ok &= np.allclose(fr.H @ fr.n[..., None], 0, atol=1e-8)
    ok &= np.allclose(np.trace(fr.H, axis1=1, axis2=2), fr.kappa, atol=1e-10)
    return bool(ok and np.allclose(fr.P + fr.n[:, :, None] * fr.n[:, None, :], I))


def run_selftest(seed=0, verbose=False):
    rng = np.random.default_rng(seed)
    checks = []
    checks.append(("sphere frames", _frames_ok(SphereSurface.oscillating(), rng, 0.3)))
    checks.append(("harmonic frames", _frames_ok(DeformCase.asymmetric().surface, rng, 0.3)))
    mesh = make_mesh(2)
    s = SphereSurface(1.0)
    band = extract_band(mesh, s, 0.0, 0.0)
    area = reconstruct_band(mesh, band.cut_tets, s, 0.0).area
    checks.append(("sphere area l=2", abs(area - 4 * pi) / (4 * pi) < 5e-3))
    case = DeformCase.axisymmetric()
    rates = [case.area_variation_rate(t) for t in rng.uniform(0, 1, 20)]
    checks.append(("inextensibility", max(abs(r) for r in rates) < 1e-14))
    f, g = manufactured_forcing(np.array([[1.0, 0, 0], [0, 0, 1.0]]), 0.0, ManufacturedCase())
    checks.append(("manufactured g", np.allclose(g, [pi - 2, pi], atol=1e-8)))
    x, rep = solve_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]))
    checks.append(("solver 2x2", np.allclose(x, 1.0) and rep.residual < 1e-12))
    if verbose:
        for name, ok in checks:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all(ok for _, ok in checks)
