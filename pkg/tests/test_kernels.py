"""Backend equivalence and quadrature verification of the hot kernels."""

import numpy as np
import pytest

import blochcav as bc
from blochcav._kernels import _pure
from blochcav.capacitance import _triangle_pack
from helpers import quad_triangle_potential

try:
    from blochcav._kernels import _fast
except ImportError:
    _fast = None

needs_fast = pytest.mark.skipif(_fast is None, reason="compiled kernels unavailable")


class TestAnalyticTrianglePotential:
    def test_equilateral_self_potential(self):
        # frozen from the independent polar quadrature oracle
        tri = np.array([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]])
        centroid = tri.mean(axis=0)
        got = _pure._analytic_triangle_potential(centroid[None, :], tri[None, :, :])[0]
        assert got == pytest.approx(2.281037988902839, rel=1e-12)
        assert got == pytest.approx(quad_triangle_potential(centroid, tri), rel=1e-10)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_random_targets_vs_quadrature(self, seed):
        rng = np.random.default_rng(seed)
        tri = rng.normal(size=(3, 3))
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        n /= np.linalg.norm(n)
        centroid = tri.mean(axis=0)
        targets = [
            centroid,                                   # in-plane singular
            centroid + 0.4 * n,                         # just above
            centroid - 1.3 * n + rng.normal(size=3) * 0.2,
            centroid + 2.5 * (tri[0] - centroid),       # in-plane outside
            centroid + 10.0 * n,                        # far
        ]
        for t in targets:
            got = _pure._analytic_triangle_potential(np.asarray(t)[None, :],
                                                     tri[None, :, :])[0]
            want = quad_triangle_potential(np.asarray(t), tri)
            assert got == pytest.approx(want, rel=1e-8)

    def test_far_field_point_approximation(self):
        # entry ~ area / |c_i - c_j| when separation > 10 diameters
        tri = np.array([[0, 0, 0], [0.1, 0, 0], [0, 0.1, 0]])
        centroid = tri.mean(axis=0)
        area = 0.005
        target = centroid + np.array([2.0, 1.0, 1.5])
        got = _pure._analytic_triangle_potential(target[None, :], tri[None, :, :])[0]
        approx = area / np.linalg.norm(target - centroid)
        assert got == pytest.approx(approx, rel=0.01)


class TestBackendEquivalence:
    @needs_fast
    def test_potential_entries_match(self):
        mesh = bc.make_sphere_mesh(1.0, 2)
        pack = _triangle_pack(mesh)
        targets = np.ascontiguousarray(mesh.centroids)
        a = _pure.potential_entries(targets, *pack, 2.0)
        b = _fast.potential_entries(targets, *pack, 2.0)
        assert np.allclose(a, b, rtol=1e-12, atol=0)

    @needs_fast
    @pytest.mark.parametrize("z", [0.0, 0.01, 0.25, 1.1])
    def test_ewald_sums_match(self, z):
        rng = np.random.default_rng(17)
        p2 = np.ascontiguousarray(rng.uniform(z + 0.1, 40.0, 600))
        rn = np.ascontiguousarray(rng.uniform(0.5, 30.0, 250))
        ck = np.ascontiguousarray(rng.uniform(-1.0, 1.0, 250))
        a = _pure.ewald_sums(p2, z, 0.2821, rn, ck)
        b = _fast.ewald_sums(p2, z, 0.2821, rn, ck)
        assert a[0] == pytest.approx(b[0], rel=1e-12)
        assert a[1] == pytest.approx(b[1], rel=1e-10, abs=1e-16)

    @needs_fast
    def test_capacitance_q_backend_independent(self):
        mesh = bc.make_sphere_mesh(1.0, 1)
        pack = _triangle_pack(mesh)
        targets = np.ascontiguousarray(mesh.centroids)
        Sa = _pure.potential_entries(targets, *pack, 2.0)
        Sb = _fast.potential_entries(targets, *pack, 2.0)
        qa = np.linalg.solve(Sa, np.ones(len(Sa))) @ mesh.areas
        qb = np.linalg.solve(Sb, np.ones(len(Sb))) @ mesh.areas
        assert qa == pytest.approx(qb, rel=1e-10)


class TestAssemblyParallelism:
    def test_threaded_assembly_bit_identical(self):
        mesh = bc.make_sphere_mesh(1.0, 2)
        s1 = bc.assemble_single_layer(mesh, threads=1)
        s2 = bc.assemble_single_layer(mesh, threads=2)
        assert np.array_equal(s1, s2)
