"""Sparse solvers for the saddle-point systems.

The direct path uses the first available of MKL PARDISO (``pypardiso``),
UMFPACK (``cvxopt``) and SciPy's SuperLU.  The iterative path is restarted
GMRES(100) with an incomplete-LU preconditioner.
"""
import glob
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import SingularMatrixError, SolverError

def _locate_mkl():
    # pip-installed MKL puts libmkl_rt into <prefix>/lib, which pypardiso may not search
    if "PYPARDISO_MKL_RT" in os.environ:
        return
    for prefix in {sys.prefix, sys.base_prefix, "/usr/local", "/usr"}:
        hits = sorted(glob.glob(os.path.join(prefix, "lib", "libmkl_rt.so*")))
        if hits:
            os.environ["PYPARDISO_MKL_RT"] = hits[0]
            return


try:  # optional: supernodal LU with nested-dissection ordering
    _locate_mkl()
    import pypardiso as _pypardiso
    HAVE_PARDISO = True
except (ImportError, OSError):  # pragma: no cover - depends on environment
    HAVE_PARDISO = False

try:  # optional, considerably faster multifrontal LU
    from cvxopt import matrix as _cvx_matrix
    from cvxopt import spmatrix as _cvx_spmatrix
    from cvxopt import umfpack as _umfpack
    HAVE_UMFPACK = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_UMFPACK = False

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    wall_time: float
    method: str = "direct"


def as_csr(A):
    """Canonical CSR: sorted column indices, no duplicates."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def relative_residual(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return r / nb if nb > 0 else r


def _umfpack_solve(A, b):
    C = A.tocoo()
    M = _cvx_spmatrix(_cvx_matrix(C.data), _cvx_matrix(C.row.astype(np.int64)),
                      _cvx_matrix(C.col.astype(np.int64)), A.shape)
    x = _cvx_matrix(np.array(b, dtype=float))
    try:
        _umfpack.linsolve(M, x)
    except ArithmeticError as err:
        raise SingularMatrixError(f"matrix is numerically singular: {err}",
                                  np.full(len(b), np.nan), np.inf) from err
    return np.array(x).ravel()


def _superlu_solve(A, b):
    try:
        lu = sla.splu(A.tocsc(), permc_spec="COLAMD")
    except RuntimeError as err:
        raise SingularMatrixError(f"matrix is numerically singular: {err}",
                                  np.full(len(b), np.nan), np.inf) from err
    return lu.solve(b)


def _pardiso_solve(A, b):
    solver = _pypardiso.PyPardisoSolver()
    try:
        x = solver.solve(A, b)
    except Exception as err:  # PyPardisoError carries the MKL error code
        raise SingularMatrixError(f"PARDISO failed: {err}", np.full(len(b), np.nan),
                                  np.inf) from err
    finally:
        solver.free_memory(everything=True)
    return np.asarray(x, dtype=float)


def available_backends():
    out = []
    if HAVE_PARDISO:
        out.append("pardiso")
    if HAVE_UMFPACK:
        out.append("umfpack")
    out.append("superlu")
    return out


def _direct(A, b, backend):
    backend = backend or available_backends()[0]
    if backend == "pardiso":
        return _pardiso_solve(A, b)
    if backend == "umfpack":
        return _umfpack_solve(A, b)
    if backend == "superlu":
        return _superlu_solve(A, b)
    raise ValueError(f"unknown direct backend {backend!r}")


def _gmres(A, b, tol, restart=100, maxiter=50, drop_tol=1e-5, fill_factor=20):
    try:
        ilu = sla.spilu(A.tocsc(), drop_tol=drop_tol, fill_factor=fill_factor)
    except RuntimeError as err:
        raise SingularMatrixError(f"incomplete factorization failed: {err}",
                                  np.zeros(len(b)), 1.0) from err
    M = sla.LinearOperator(A.shape, ilu.solve)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = sla.gmres(A, b, rtol=tol * 0.5, atol=0.0, restart=restart, maxiter=maxiter,
                        M=M, callback=cb, callback_type="pr_norm")
    return x, count[0], info


def solve_matrix(A, b, tol=DEFAULT_TOL, method="direct", backend=None):
    """Solve ``A x = b`` and enforce ``|b - A x| / |b| <= tol``.

    One step of iterative refinement is applied on the direct path when the
    first solve misses the tolerance.
    """
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise ValueError(f"incompatible system: A {A.shape}, b {b.shape}")
    t0 = time.perf_counter()
    if not np.any(b):
        return np.zeros_like(b), SolveReport(0, 0.0, time.perf_counter() - t0, method)
    iters = 0
    if method == "direct":
        x = _direct(A, b, backend)
        res = relative_residual(A, x, b)
        if not np.isfinite(res):
            raise SingularMatrixError("direct solve produced non-finite values", x, res)
        if res > tol:
            x = x + _direct(A, b - A @ x, backend)
            res = relative_residual(A, x, b)
    elif method == "gmres":
        x, iters, info = _gmres(A, b, tol)
        res = relative_residual(A, x, b)
        if info < 0:
            raise SolverError(f"GMRES breakdown (info={info})", x, res)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    wall = time.perf_counter() - t0
    if not res <= tol:
        raise SolverError(f"{method} solve reached relative residual {res:.3e} > {tol:.1e}",
                          x, res)
    return x, SolveReport(iters, float(res), wall, method)


def solve(system, tol=DEFAULT_TOL, method="direct", backend=None):
    """Solve an assembled :class:`~surfns.fem.SaddleSystem`."""
    return solve_matrix(system.matrix, system.rhs, tol=tol, method=method, backend=backend)
