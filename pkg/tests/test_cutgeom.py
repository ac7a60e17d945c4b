import numpy as np
import pytest

from surfns.cutgeom import march, reconstruct, reconstruct_band, subdivision, surface_integrate
from surfns.geometry import CustomSurface, SphereSurface
from surfns.mesh import extract_band, make_mesh
from surfns.quadrature import (TETRAHEDRON_DEG5, TETRAHEDRON_DEG7, TRIANGLE_DEG4,
                               tetrahedron_gauss_jacobi, tet_volume, volume_integrate)
from math import factorial, pi

REF_TET = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])


def plane(z0):
    return CustomSurface(lambda x, t: x[..., 2] - z0,
                         lambda x, t: np.broadcast_to([0.0, 0, 1], x.shape).copy())


def test_plane_section_area():
    patch = reconstruct(REF_TET, plane(0.25), 0.0, rg=0)
    assert len(patch.triangles) == 1
    assert patch.area == pytest.approx(0.5 * 0.75 ** 2, rel=1e-14)
    assert np.allclose(patch.triangles[..., 2], 0.25)


@pytest.mark.parametrize("rg", [1, 2])
def test_plane_section_refined(rg):
    patch = reconstruct(REF_TET, plane(0.3), 0.0, rg=rg)
    assert patch.area == pytest.approx(0.5 * 0.7 ** 2, rel=1e-13)
    assert np.all(patch.weights > 0)
    assert patch.weights.sum() == pytest.approx(patch.area)


def test_empty_patch():
    patch = reconstruct(REF_TET, plane(2.0), 0.0, rg=2)
    assert len(patch.triangles) == 0 and patch.area == 0.0


def test_subdivision_volumes():
    for rg in range(3):
        bary, idx = subdivision(rg)
        X = bary @ REF_TET
        assert len(X) == 8 ** rg
        assert np.allclose(tet_volume(X), (1 / 6) / 8 ** rg)


def test_march_quad_split():
    vals = np.array([[-1.0, -1.0, 1.0, 1.0]])
    tris, src = march(REF_TET[None], vals)
    assert len(tris) == 2 and np.all(src == 0)


def test_vertices_on_linear_zero_set(rng):
    m = make_mesh(2)
    s = SphereSurface(1.0)
    band = extract_band(m, s, 0.0, 0.0)
    ps = reconstruct_band(m, band.cut_tets, s, 0.0, rg=1)
    # linear interpolant on the owning sub-tet vanishes at triangle vertices:
    # vertices lie on sub-tet edges, so interpolate along the edge endpoints
    for tri, own in zip(ps.triangles[:200], ps.tri_owner[:200]):
        X = m.tet_points([ps.tets[own]])[0]
        bary, idx = subdivision(1)
        for sub in bary @ X:
            phi = s.phi(sub, 0.0)
            D = np.c_[sub, np.ones(4)]
            coef = np.linalg.solve(D, phi)
            inside = np.linalg.solve(D.T, np.c_[tri, np.ones(3)].T)
            ok = np.all(inside > -1e-12, axis=0)
            if np.any(ok):
                assert np.allclose(np.c_[tri, np.ones(3)][ok] @ coef, 0, atol=1e-12)


def sphere_area(level, rg):
    m = make_mesh(level)
    s = SphereSurface(1.0)
    band = extract_band(m, s, 0.0, 0.0)
    return reconstruct_band(m, band.cut_tets, s, 0.0, rg=rg)


def test_area_rate_in_rg():
    errs = [abs(sphere_area(2, rg).area - 4 * pi) for rg in range(4)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates >= 1.9), rates


def test_surface_integrate_examples():
    ps = sphere_area(3, 2)
    assert surface_integrate(ps, lambda x: np.ones(len(x))) == pytest.approx(ps.area)
    assert abs(surface_integrate(ps, lambda x: x[:, 0])) <= 1e-10


def test_patch_points_close_to_surface():
    for level in (2, 3):
        m = make_mesh(level)
        ps = sphere_area(level, 2)
        hs = m.h / 4
        assert np.abs(np.linalg.norm(ps.points, axis=1) - 1).max() <= 0.5 * hs ** 2


def test_patch_accessor():
    ps = sphere_area(2, 1)
    p = ps.patch(3)
    assert p.area == pytest.approx(ps.weights[ps.offsets[3]:ps.offsets[4]].sum())
    assert p.frames is not None and len(p.frames.n) == len(p.points)


# ---------------------------------------------------------------- quadrature

def triangle_moment(i, j):
    return factorial(i) * factorial(j) / factorial(i + j + 2)


def tet_moment(i, j, k):
    return factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 3)


def test_triangle_rule_exactness():
    pts = TRIANGLE_DEG4.points[:, 1:]
    for i in range(5):
        for j in range(5 - i):
            val = 0.5 * TRIANGLE_DEG4.weights @ (pts[:, 0] ** i * pts[:, 1] ** j)
            assert val == pytest.approx(triangle_moment(i, j), abs=1e-13)


@pytest.mark.parametrize("rule", [TETRAHEDRON_DEG5, TETRAHEDRON_DEG7, tetrahedron_gauss_jacobi(2)])
def test_tet_rule_exactness(rule):
    pts = rule.points[:, 1:]
    assert np.all(rule.weights > 0) and rule.weights.sum() == pytest.approx(1.0)
    d = rule.degree
    for i in range(d + 1):
        for j in range(d + 1 - i):
            for k in range(d + 1 - i - j):
                val = rule.weights @ (pts[:, 0] ** i * pts[:, 1] ** j * pts[:, 2] ** k) / 6
                assert val == pytest.approx(tet_moment(i, j, k), abs=1e-13)


def test_volume_integrate_examples():
    m = make_mesh(3)
    X = m.tet_points([12345])[0]
    assert volume_integrate(X, lambda p: np.ones(len(p))) == pytest.approx(m.h ** 3 / 6)
    assert volume_integrate(X, lambda p: p[:, 0]) == pytest.approx(m.h ** 3 / 6 * X[:, 0].mean())
    quartic = volume_integrate(REF_TET, lambda p: p[:, 0] ** 2 * p[:, 1] * p[:, 2])
    assert quartic == pytest.approx(tet_moment(2, 1, 1), abs=1e-15)
