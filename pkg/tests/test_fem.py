import numpy as np
import pytest
import scipy.sparse as sp

from surfns import fem, kernels
from surfns.bench import DeformCase
from surfns.cutgeom import reconstruct_band
from surfns.errors import BandInclusionError
from surfns.geometry import SphereSurface
from surfns.mesh import ActiveBand, extract_band, make_mesh
from surfns.solver import solve_matrix

from builders import manufactured_step, random_cut_tets
from oracles import compare_with_oracle

NODES = np.vstack([np.eye(4), 0.5 * np.array([np.eye(4)[a] + np.eye(4)[b] for a, b in
                                              ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))])])


@pytest.fixture(scope="module")
def step2():
    return manufactured_step(level=2, keep_local=True)


def static_sphere_system(level=2, **kw):
    s = SphereSurface(1.0)
    m = make_mesh(level)
    band = extract_band(m, s, 0.0, 0.1)
    ps = reconstruct_band(m, band.cut_tets, s, 0.0)
    dm = fem.build_dofmap(band)
    params = fem.AssemblyParams.default(m.h, 5e-3, 0.05, 1).with_(**kw) if kw else \
        fem.AssemblyParams.default(m.h, 5e-3, 0.05, 1)
    zero = fem.FieldVector.zeros(band, dm)
    return band, ps, dm, params, fem.assemble(band, ps, dm, s, params, 0.0, history=[zero])


# ---------------------------------------------------------------- basis

def test_p2_nodal_property():
    X = make_mesh(1).tet_points([17])
    gl = fem.barycentric_gradients(X)
    phi, dphi = fem.p2_basis(NODES, np.repeat(gl, 10, 0))
    assert np.allclose(phi, np.eye(10), atol=1e-14)


def test_p2_partition_of_unity(rng):
    X = make_mesh(2).tet_points([1234])
    gl = fem.barycentric_gradients(X)
    lam = rng.dirichlet(np.ones(4), 30)
    phi, dphi = fem.p2_basis(lam, np.repeat(gl, 30, 0))
    assert np.allclose(phi.sum(1), 1) and np.allclose(dphi.sum(1), 0, atol=1e-12)
    D = fem.p2_gradient_table(lam)
    assert np.allclose(np.einsum("qav,vd->qad", D, gl[0]), dphi)


def test_barycentric_roundtrip(rng):
    m = make_mesh(2)
    X = m.tet_points([99, 100])
    gl = fem.barycentric_gradients(X)
    lam = rng.dirichlet(np.ones(4), 2)
    x = np.einsum("qv,qvd->qd", lam, X)
    assert np.allclose(fem.barycentric(X, gl, x), lam)


# ---------------------------------------------------------------- dofs

def single_band(tets, level=2):
    m = make_mesh(level)
    tets = np.sort(np.asarray(tets))
    return ActiveBand(m, 0.0, 0.0, tets, tets)


def test_dofmap_single_tet():
    dm = fem.build_dofmap(single_band([500]))
    assert dm.n_u == 10 and 3 * dm.n_u == 30 and dm.n_p == 4
    assert dm.size == 30 + 4 + 1


def test_dofmap_face_neighbours():
    # local tets 0 and 1 of a Kuhn cube share the face (v0, v3, v1 = e0)
    dm = fem.build_dofmap(single_band([6 * 20, 6 * 20 + 1]))
    assert dm.n_u == 10 + 10 - 6


def test_dofmap_level2_size():
    d = manufactured_step(level=2)["dofmap"]
    assert 4.41e3 / 2 <= d.size <= 2 * 4.41e3


def test_dofmap_deterministic_bijection():
    b = manufactured_step(level=2)["band"]
    d1, d2 = fem.build_dofmap(b), fem.build_dofmap(b)
    assert np.array_equal(d1.velocity_keys, d2.velocity_keys)
    assert len(np.unique(d1.velocity_keys)) == d1.n_u
    assert np.all(d1.velocity_keys[d1.band_nodes] == b.mesh.tet_node_keys(b.band_tets))


# ---------------------------------------------------------------- fields

def test_interpolation_exact_for_quadratics(rng):
    s = manufactured_step(level=2)
    band, dm = s["band"], s["dofmap"]
    f = lambda x: np.stack([x[:, 0] * x[:, 1], x[:, 2] ** 2 - 1, 3 * x[:, 0] + 1], 1)  # noqa: E731
    u = fem.FieldVector.interpolate(band, dm, f)
    tets = rng.choice(band.band_tets, 50)
    X = band.mesh.tet_points(tets)
    x = np.einsum("qv,qvd->qd", rng.dirichlet(np.ones(4), 50), X)
    val, grad = u.evaluate(tets, x)
    assert np.allclose(val, f(x), atol=1e-12)
    assert np.allclose(grad[:, 0], np.stack([x[:, 1], x[:, 0], 0 * x[:, 0]], 1), atol=1e-12)


def test_lookup_outside_band():
    s = manufactured_step(level=2)
    u = s["history"][0]
    outside = np.setdiff1d(np.arange(100), s["band"].band_tets)[:3]
    with pytest.raises(BandInclusionError):
        u.nodal(outside)


# ---------------------------------------------------------------- pointwise operators

def test_project_tangential_examples():
    n = np.array([1.0, 0, 0])
    assert np.allclose(fem.project_tangential(n, n), 0)
    assert np.allclose(fem.project_tangential([0, 2.0, 3.0], n), [0, 2, 3])
    assert np.allclose(fem.project_tangential([1.0, 1.0, 0], n), [0, 1, 0])


def test_strain_examples(rng):
    s = SphereSurface(1.0)
    ang = rng.uniform(0, 2 * np.pi, 20)
    x = np.stack([np.cos(ang), np.sin(ang), 0 * ang], 1)  # x . w = 0
    fr = s.frames(x, 0.0)
    W = np.array([[0, -1.0, 0], [1, 0, 0], [0, 0, 0]])  # grad of w x x
    u = x @ W.T
    E = fem.strain_tensor(np.broadcast_to(W, (20, 3, 3)), np.sum(u * fr.n, 1), fr.P, fr.H)
    assert np.abs(E).max() <= 1e-12
    E = fem.strain_tensor(np.broadcast_to(np.eye(3), (20, 3, 3)), np.ones(20), fr.P, fr.H)
    assert np.abs(E).max() <= 1e-12
    E = fem.strain_tensor(np.zeros((3, 3)), 0.0, fr.P[0], fr.H[0])
    assert np.all(E == 0)
    G = rng.standard_normal((20, 3, 3))
    E = fem.strain_tensor(G, rng.standard_normal(20), fr.P, fr.H)
    assert np.allclose(E, np.swapaxes(E, 1, 2))
    assert np.abs(np.einsum("qi,qij,qj->q", fr.n, E, fr.n)).max() <= 1e-12


# ---------------------------------------------------------------- assembled system

def test_symmetric_part_psd(rng):
    band, ps, dm, params, system = static_sphere_system()
    nu = 3 * dm.n_u
    A = system.matrix[:nu, :nu]
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()  # c = 0, w_N = 0
    for _ in range(20):
        v = rng.standard_normal(nu)
        assert v @ (A @ v) >= 0


def test_penalty_linearity():
    _, ps, dm, p1, s1 = static_sphere_system()
    _, _, _, p2, s2 = static_sphere_system(tau=2 * p1.tau)
    D = (s2.matrix - s1.matrix).tocsr()
    b = fem.surface_basis(make_mesh(2), ps)
    fr = ps.frames
    Kp = kernels.surface_velocity_block(ps.offsets, ps.weights, b.phi, b.dphi, fr.n, fr.H,
                                        np.zeros((len(ps.weights), 3)), np.zeros(len(ps.weights)),
                                        0.0, 0.0, p1.tau)
    vc = dm.velocity_index(dm.cut_nodes)
    N = dm.size
    P = sp.coo_matrix((Kp.ravel(), (np.repeat(vc, 30, 1).ravel(), np.tile(vc, 30).ravel())),
                      shape=(N, N)).tocsr()
    assert abs(D - P).max() <= 1e-12 * abs(P).max()


def test_multiplier_row_and_pressure_stabilisation(step2):
    system, dm, ps = step2["system"], step2["dofmap"], step2["patches"]
    A = system.matrix
    e = A[-1, 3 * dm.n_u:3 * dm.n_u + dm.n_p].toarray().ravel()
    assert e.sum() == pytest.approx(ps.area, rel=1e-12)
    assert np.allclose(A[3 * dm.n_u:3 * dm.n_u + dm.n_p, -1].toarray().ravel(), e)
    C = step2["system"].local.C
    assert np.allclose(C, np.swapaxes(C, 1, 2))
    ev = np.linalg.eigvalsh(C)
    assert ev.min() >= -1e-12 * ev.max()


def test_csr_canonical_and_sparse(step2):
    A = step2["system"].matrix
    assert A.has_canonical_format
    assert A.nnz <= 400 * A.shape[0]


def test_determinism():
    a = manufactured_step(level=2)["system"]
    b = manufactured_step(level=2)["system"]
    assert (a.matrix != b.matrix).nnz == 0 and np.array_equal(a.rhs, b.rhs)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")
def test_backends_agree():
    a = manufactured_step(level=2, bdf=2, backend="cython")["system"]
    b = manufactured_step(level=2, bdf=2, backend="python")["system"]
    assert abs(a.matrix - b.matrix).max() <= 1e-13 * abs(a.matrix).max()
    assert np.abs(a.rhs - b.rhs).max() <= 1e-13 * np.abs(a.rhs).max()


def test_zero_data_fixed_point():
    band, ps, dm, params, system = static_sphere_system()
    x, rep = solve_matrix(system.matrix, system.rhs)
    assert np.all(x == 0)
    u, p, lam = fem.split_solution(x, band, dm)
    assert u.values.shape == (dm.n_u, 3) and p.values.shape == (dm.n_p,) and lam == 0


def test_split_solution_layout():
    band = single_band([500])
    dm = fem.build_dofmap(band)
    x = np.arange(dm.size, dtype=float)
    u, p, lam = fem.split_solution(x, band, dm)
    assert u.values[3, 1] == 10 + 3 and p.values[2] == 32 and lam == 34


def test_assembly_oracle_harmonic_surface():
    case = DeformCase.asymmetric()
    s = case.surface
    m = make_mesh(3)
    t, dt = 0.3, 0.02
    band = extract_band(m, s, t, 0.05)
    ps = reconstruct_band(m, band.cut_tets, s, t)
    dm = fem.build_dofmap(band)
    rot = lambda x: np.cross([0.3, -0.2, 1.0], x)  # noqa: E731
    hist = [fem.FieldVector.interpolate(band, dm, lambda x, k=k: (1 - 0.1 * k) * rot(x))
            for k in (1, 2)]
    params = fem.AssemblyParams.default(m.h, case.mu, dt, 2)
    forcing = lambda x, tt: case.forcing(x, tt)  # noqa: E731
    system = fem.assemble(band, ps, dm, s, params, t, history=hist, forcing=forcing,
                          keep_local=True)
    setup = dict(band=band, patches=ps, system=system, params=params, history=hist, t=t)
    worst = compare_with_oracle(setup, random_cut_tets(band, 4, seed=3), s, forcing)
    assert max(worst.values()) <= 1e-6, worst


@pytest.mark.slow
def test_consistency_residual_rate():
    """Velocity residual of the interpolated exact solution in the dual energy norm."""
    norms = []
    for level in (2, 3, 4):
        dt = 0.05 * 2.0 ** (2 - level)
        setup = manufactured_step(level=level, t=0.25, dt=dt)
        case, band, dm, system = setup["case"], setup["band"], setup["dofmap"], setup["system"]
        t = setup["t"]
        u = fem.FieldVector.interpolate(band, dm, lambda x: case.velocity(x, t))
        pk = band.mesh.key_points(dm.pressure_keys)
        p_exact = case.pressure_raw(pk)
        bas = fem.surface_basis(band.mesh, setup["patches"])
        p_nodal = p_exact[dm.cut_pressure][setup["patches"].owner]
        mean = np.sum(setup["patches"].weights * np.einsum("qa,qa->q", bas.lam, p_nodal)) \
            / setup["patches"].area
        x = np.concatenate([u.values.T.ravel(), p_exact - mean, [0.0]])
        r = system.rhs - system.matrix @ x
        nu = 3 * dm.n_u
        # energy norm on the velocity space: unit-coefficient mass, viscous, penalty and
        # volume stabilisation (the symmetric coercive part of the operator)
        zero = fem.FieldVector.zeros(band, dm)
        sym = fem.assemble(band, setup["patches"], dm, case.surface,
                           setup["params"].with_(dt=1.0), t, history=[zero],
                           forcing=None).matrix[:nu, :nu]
        ru = r[:nu]
        zu, _ = solve_matrix(sym, ru, tol=1e-10)
        norms.append(np.sqrt(ru @ zu))
    rates = np.log2(np.array(norms[:-1]) / norms[1:])
    assert np.all(rates >= 1.0), (norms, rates)
