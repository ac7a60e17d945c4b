"""Symmetric quadrature rules on the reference triangle and tetrahedron.

Points are barycentric coordinates; weights are normalised to sum to one,
so a rule is applied as ``measure * sum(w * f(points))``.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (q, d+1) barycentric
    weights: np.ndarray  # (q,), sum 1
    degree: int

    def __len__(self):
        return len(self.weights)


def _s21(a):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _s31(a):
    c = 1.0 - 3.0 * a
    pts = []
    for i in range(4):
        p = [a] * 4
        p[i] = c
        pts.append(p)
    return pts


def _s22(b):
    c = 0.5 - b
    pts = []
    for i, j in combinations(range(4), 2):
        p = [c] * 4
        p[i] = p[j] = b
        pts.append(p)
    return pts


# 6-point degree-4 rule (two S21 orbits)
TRIANGLE_DEG4 = QuadratureRule(
    points=np.array(_s21(0.44594849091596488632) + _s21(0.09157621350977074346)),
    weights=np.array([0.2233815896780114657] * 3 + [0.10995174365532186764] * 3),
    degree=4,
)

# 14-point degree-5 rule with positive weights (two S31 orbits, one S22 orbit)
TETRAHEDRON_DEG5 = QuadratureRule(
    points=np.array(_s31(0.092735250310891226402) + _s31(0.3108859192633006098)
                    + _s22(0.045503704125649649492)),
    weights=np.array([0.073493043116361949544] * 4 + [0.1126879257180158508] * 4
                     + [0.042546020777081466438] * 6),
    degree=5,
)


def tetrahedron_gauss_jacobi(n):
    """Conical product rule with ``n**3`` points, exact to degree ``2n - 1``.

    Collapsed coordinates ``x = a, y = b (1 - a), z = c (1 - a)(1 - b)``
    with Gauss-Jacobi nodes absorbing the Jacobian ``(1 - a)^2 (1 - b)``;
    all weights are positive.
    """
    nodes = []
    for alpha in (2, 1, 0):
        r, w = roots_jacobi(n, alpha, 0)
        nodes.append(((1 + r) / 2, w / 2 ** (alpha + 1)))
    (a, wa), (b, wb), (c, wc) = nodes
    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    W = np.einsum("i,j,k->ijk", wa, wb, wc).ravel()
    x = A.ravel()
    y = (B * (1 - A)).ravel()
    z = (C * (1 - A) * (1 - B)).ravel()
    return QuadratureRule(np.stack([1 - x - y - z, x, y, z], axis=1), W / W.sum(), 2 * n - 1)


# 64-point degree-7 rule for the non-polynomial volume stabilisation integrands
TETRAHEDRON_DEG7 = tetrahedron_gauss_jacobi(4)


def tet_volume(X):
    """Volumes of tetrahedra ``X`` of shape ``(..., 4, 3)``."""
    d = X[..., 1:, :] - X[..., :1, :]
    return np.abs(np.linalg.det(d)) / 6.0


def triangle_area(X):
    d1 = X[..., 1, :] - X[..., 0, :]
    d2 = X[..., 2, :] - X[..., 0, :]
    return 0.5 * np.linalg.norm(np.cross(d1, d2), axis=-1)


def volume_integrate(X, f, rule=TETRAHEDRON_DEG5):
    """Integrate ``f`` (points (..., 3) -> values) over the tetrahedron ``X``."""
    X = np.asarray(X, dtype=float)
    pts = rule.points @ X
    vals = np.asarray(f(pts))
    return tet_volume(X) * np.tensordot(rule.weights, vals, axes=(0, 0))
