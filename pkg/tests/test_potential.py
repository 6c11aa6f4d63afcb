import numpy as np
import pytest
from hypothesis import given, strategies as st

import cgptid as ci
from cgptid.errors import ContrastError, NearBoundaryError
from cgptid.potential import Density, solve_density

LAM = 3.5


class TestContrast:
    def test_reference_conductivity(self):
        # kappa = 4/3 maps to contrast 3.5 exactly
        assert ci.contrast_from_conductivity(4 / 3) == pytest.approx(3.5, abs=1e-14)

    def test_invalid_conductivity(self):
        for kappa in (0.0, -1.0, 1.0):
            with pytest.raises(ValueError):
                ci.contrast_from_conductivity(kappa)

    def test_contrast_range_enforced(self, unit_disk):
        with pytest.raises(ContrastError):
            ci.NpSystem(unit_disk, 0.4)


class TestOperatorMatrix:
    def test_disk_kernel_is_constant(self, unit_disk):
        # on a circle of radius rho the kernel equals 1/(4*pi*rho) identically
        k = ci.np_operator_matrix(unit_disk) / unit_disk.weights[None, :]
        assert np.abs(k - 1 / (4 * np.pi)).max() < 1e-12

    def test_disk_constant_density_maps_to_half(self, unit_disk):
        k = ci.np_operator_matrix(unit_disk)
        assert np.abs(k @ np.ones(unit_disk.n_nodes) - 0.5).max() < 1e-12

    def test_disk_annihilates_cosine(self, unit_disk):
        k = ci.np_operator_matrix(unit_disk)
        xi = 2 * np.pi * np.arange(unit_disk.n_nodes) / unit_disk.n_nodes
        assert np.abs(k @ np.cos(xi)).max() < 1e-12

    @given(st.integers(0, 2**31 - 1))
    def test_disk_annihilates_zero_mean_densities(self, seed):
        disk = ci.make_ellipse(1, 1, 256)
        k = ci.np_operator_matrix(disk)
        rng = np.random.default_rng(seed)
        phi = rng.standard_normal(256)
        phi -= (phi * disk.weights).sum() / disk.weights.sum()
        assert np.abs(k @ phi).max() <= 1e-10 * np.abs(phi).max()

    def test_coincident_nodes_rejected(self, unit_disk):
        from cgptid.errors import DegenerateGeometryError
        from cgptid.geometry import Boundary

        pts = unit_disk.points.copy()
        pts[1] = pts[0]
        bad = Boundary(
            points=pts,
            tangents=unit_disk.tangents.copy(),
            normals=unit_disk.normals.copy(),
            weights=unit_disk.weights.copy(),
            curvature=unit_disk.curvature.copy(),
            n_nodes=unit_disk.n_nodes,
        )
        with pytest.raises(DegenerateGeometryError):
            ci.np_operator_matrix(bad)


class TestSolveDensity:
    def test_disk_cosine_density(self, unit_disk):
        system = ci.NpSystem(unit_disk, LAM)
        xi = 2 * np.pi * np.arange(256) / 256
        rhs = Density(np.cos(xi), zero_mean=True)
        phi = solve_density(system, rhs)
        # the operator annihilates zero-mean densities on the disk
        assert np.abs(phi.values - np.cos(xi) / LAM).max() < 1e-12
        assert phi.zero_mean

    def test_zero_rhs(self, unit_disk):
        system = ci.NpSystem(unit_disk, LAM)
        phi = solve_density(system, Density(np.zeros(256)))
        assert np.abs(phi.values).max() == 0.0

    def test_zero_mean_preserved(self, ellipse):
        system = ci.NpSystem(ellipse, LAM)
        xi = 2 * np.pi * np.arange(ellipse.n_nodes) / ellipse.n_nodes
        rhs_vals = np.cos(xi) * ellipse.normals[:, 0]
        rhs_vals -= (rhs_vals * ellipse.weights).sum() / ellipse.weights.sum()
        phi = solve_density(system, Density(rhs_vals, zero_mean=True))
        assert abs((phi.values * ellipse.weights).sum()) < 1e-10

    def test_nonzero_mean_rejected(self, unit_disk):
        system = ci.NpSystem(unit_disk, LAM)
        with pytest.raises(ValueError):
            solve_density(system, Density(np.ones(256)))

    def test_quadrature_superalgebraic_convergence(self):
        # coarse-grid error of an integrated functional collapses by far more
        # than 100x per doubling while above the rounding floor
        ref = ci.compute_cgpt(ci.make_ellipse(1, 0.5, 512), LAM, 1).n2[0, 0].real
        err16 = abs(ci.compute_cgpt(ci.make_ellipse(1, 0.5, 16), LAM, 1).n2[0, 0].real - ref)
        err32 = abs(ci.compute_cgpt(ci.make_ellipse(1, 0.5, 32), LAM, 1).n2[0, 0].real - ref)
        assert err16 > 100 * max(err32, 5e-16)


class TestSingleLayer:
    def test_mean_value_identity(self, unit_disk):
        # unit-density single layer of the unit circle equals log|x| outside
        phi = Density(np.ones(256))
        assert ci.single_layer_eval(unit_disk, phi, (2.0, 0.0)) == pytest.approx(np.log(2), abs=1e-10)
        assert ci.single_layer_eval(unit_disk, phi, (np.e, 0.0)) == pytest.approx(1.0, abs=1e-10)

    def test_zero_density(self, unit_disk):
        assert ci.single_layer_eval(unit_disk, np.zeros(256), (2.0, 0.0)) == 0.0

    def test_near_boundary_rejected(self, unit_disk):
        with pytest.raises(NearBoundaryError):
            ci.single_layer_eval(unit_disk, np.ones(256), (1.0 + 1e-6, 0.0))

    def test_exterior_harmonicity(self, ellipse):
        system = ci.NpSystem(ellipse, LAM)
        xi = 2 * np.pi * np.arange(ellipse.n_nodes) / ellipse.n_nodes
        rhs = ellipse.normals[:, 0] * np.cos(2 * xi)
        rhs -= (rhs * ellipse.weights).sum() / ellipse.weights.sum()
        phi = Density(system.solve(rhs))
        x0 = np.array([1.8, 0.6])
        h = 1e-3
        stencil = [(0, 0), (h, 0), (-h, 0), (0, h), (0, -h)]
        vals = [ci.single_layer_eval(ellipse, phi, x0 + np.array(d)) for d in stencil]
        laplacian = (sum(vals[1:]) - 4 * vals[0]) / h**2
        assert abs(laplacian) < 1e-6


class TestGradFundamental:
    def test_axis_points(self):
        assert np.allclose(ci.grad_fundamental((1, 0), (0, 0)), [1 / (2 * np.pi), 0])
        assert np.allclose(ci.grad_fundamental((0, 2), (0, 0)), [0, 1 / (4 * np.pi)])

    def test_polar_form_identity(self):
        # gradient components match the polar expansion coefficients of the
        # log kernel at first order: d/dx1 = cos(theta)/(2*pi*r)
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.uniform(-3, 3, 2)
            if np.linalg.norm(x) < 0.1:
                continue
            g = ci.grad_fundamental(x, (0, 0))
            r = np.linalg.norm(x)
            theta = np.arctan2(x[1], x[0])
            assert g[0] == pytest.approx(np.cos(theta) / (2 * np.pi * r), rel=1e-12)
            assert g[1] == pytest.approx(np.sin(theta) / (2 * np.pi * r), rel=1e-12)

    def test_coincident_points_rejected(self):
        with pytest.raises(ValueError):
            ci.grad_fundamental((1, 1), (1, 1))


def test_kernel_dump(unit_disk, tmp_path):
    system = ci.NpSystem(unit_disk, LAM)
    path = tmp_path / "kernel.npy"
    system.dump_kernel(path)
    assert np.array_equal(np.load(path), system.kernel_matrix)
