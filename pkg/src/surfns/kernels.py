"""Backend selection for the assembly hot loop.

The compiled extension is used when importable; set ``SURFNS_PURE_PYTHON=1``
to force the NumPy fallback.
"""
import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("SURFNS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def surface_velocity_block(offsets, w, phi, dphi, n, H, c, w_N, mass_coef, mu, tau,
                           backend=None, threads=1):
    backend = backend or BACKEND
    args = (np.ascontiguousarray(offsets, dtype=np.int64), np.ascontiguousarray(w, float),
            np.ascontiguousarray(phi, float), np.ascontiguousarray(dphi, float),
            np.ascontiguousarray(n, float), np.ascontiguousarray(H, float),
            np.ascontiguousarray(c, float), np.ascontiguousarray(w_N, float),
            float(mass_coef), float(mu), float(tau))
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.surface_velocity_block(*args, nthreads=int(threads))
    return _kernels_py.surface_velocity_block(*args)


def surface_coupling_block(offsets, w, phi, lam, gl, n, F, G, backend=None, threads=1):
    backend = backend or BACKEND
    c = np.ascontiguousarray
    args = (c(offsets, dtype=np.int64), c(w, float), c(phi, float), c(lam, float),
            c(gl, float), c(n, float), c(F, float), c(G, float))
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.surface_coupling_block(*args, nthreads=int(threads))
    return _kernels_py.surface_coupling_block(*args)


def harmonic_frames(x, exps, c, ct, threads=1):
    """Compiled frame evaluation for radially deformed spheres (or ``None``).

    Returns ``None`` when the extension is unavailable so that callers can
    fall back to their NumPy implementation.
    """
    if BACKEND != "cython":
        return None
    return _compiled.harmonic_frames(np.ascontiguousarray(x, dtype=float),
                                     np.ascontiguousarray(exps, dtype=np.int64),
                                     np.ascontiguousarray(c, dtype=float),
                                     np.ascontiguousarray(ct, dtype=float), int(threads))
