"""Trace finite elements (P2-P1) for tangential Navier-Stokes flow on evolving surfaces.

Modules: :mod:`~surfns.geometry` (level-set surfaces and frames),
:mod:`~surfns.mesh` (background mesh and narrow band), :mod:`~surfns.cutgeom`
(surface reconstruction and quadrature), :mod:`~surfns.fem` (spaces and
assembly), :mod:`~surfns.solver`, :mod:`~surfns.stepping` (time loop) and
:mod:`~surfns.bench` (experiments and CLI drivers).
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
