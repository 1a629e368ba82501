import math

import numpy as np
import pytest

from oseenflow import GridSpec, Scenario, SolverConfig, VectorField, march
from oseenflow import diagnostics as dg
from oseenflow import kernels as k
from oseenflow.errors import CatalogError, DomainError, QuadratureError
from oseenflow.fields import divergence_ratio, fft3
from oseenflow.oracles import estimates, quadrature
from oseenflow.oracles.manufactured import CATALOG, manufactured_case, pde_residual, stokes_exact
from oseenflow.scenarios import gaussian_vortex_field, manufactured_scenario


class TestFourierQuadrature:
    def test_example_point(self):
        x, t, nu = np.array([1.0, 0.0, 0.0]), 0.5, 0.1
        Q = quadrature.numeric_G_quadrature(x, t, nu)
        assert quadrature.relative_entry_error(k.oseen_G(x, t, nu), Q) < 1e-3
        assert np.trace(Q) == pytest.approx(2 * k.heat_kernel(x, t, nu), rel=1e-6)
        assert np.max(np.abs(Q - Q.T)) < 1e-12 * np.max(np.abs(Q))

    def test_short_cutoff_rejected(self):
        with pytest.raises(QuadratureError):
            quadrature.numeric_G_quadrature(np.array([1.0, 0.0, 0.0]), 0.5, 0.1,
                                            quadrature.QuadratureSpec(r_max=5.0))

    def test_pinned_set_size(self):
        assert len(quadrature.PINNED_POINTS) >= 20


class TestRadialReduction:
    def test_inner_integral(self):
        from scipy.integrate import quad

        r, q = 2.3, 0.7
        re, _ = quad(lambda u: math.cos(r * q * u), -1, 1)
        assert quadrature.radial_inner(r, q) == pytest.approx(re, rel=1e-12)
        assert quadrature.radial_inner(r, q) == pytest.approx(2 * math.sin(r * q) / (r * q), rel=1e-14)

    def test_I2(self):
        x, t, nu = np.array([1.0, 0.5, -0.3]), 0.4, 0.2
        I2 = quadrature.numeric_I2(x, t, nu)
        assert quadrature.relative_entry_error(I2, k.OSEEN_PREFACTOR * k.oseen_J(x, t, nu)) < 1e-4

    def test_erf_identity_unit_pair(self):
        lhs, rhs = quadrature.erf_identity_sides(1.0, 1.0)
        assert abs(lhs - rhs) / rhs < 1e-8
        assert rhs == pytest.approx(math.pi / 2 * math.erf(0.5), rel=1e-14)


class TestFiniteDifferenceJ:
    def test_example(self):
        x, t, nu = np.array([1.0, 0.5, -0.3]), 0.4, 0.2
        D = quadrature.finite_difference_J(x, t, nu)
        assert quadrature.relative_entry_error(D, k.oseen_J(x, t, nu)) < 1e-6

    def test_second_order(self):
        x, t, nu = np.array([1.0, 0.5, -0.3]), 0.4, 0.2
        steps = 1e-2 * np.array([4.0, 2.0, 1.0, 0.5])
        errs, orders = quadrature.fd_convergence(x, t, nu, steps)
        assert np.all(np.abs(orders - 2) < 0.1)
        assert np.all(np.diff(errs) < 0)

    def test_on_axis(self):
        D = quadrature.finite_difference_J(np.array([0.0, 0.0, 0.9]), 0.3, 0.5)
        off = D - np.diag(np.diag(D))
        assert np.max(np.abs(off)) < 1e-6 * np.max(np.abs(D))

    def test_large_step_warns(self):
        with pytest.warns(quadrature.StepSizeWarning):
            quadrature.finite_difference_J(np.array([1.0, 0.5, -0.3]), 0.4, 0.2, h=0.1)

    def test_origin_rejected(self):
        with pytest.raises(DomainError):
            quadrature.finite_difference_J(np.zeros(3), 0.4, 0.2)


class TestKernelEstimates:
    def test_kernel_gradient_matches_fd(self):
        z, t, nu = np.array([[0.4, -0.7, 0.2]]), 0.3, 0.6
        G, dG = estimates.kernel_and_gradient(z, t, nu)
        assert np.allclose(G, k.oseen_G(z, t, nu), rtol=1e-13, atol=0)
        h = 1e-5
        for i, e in enumerate(np.eye(3)):
            fd = (k.oseen_G(z + h * e, t, nu) - k.oseen_G(z - h * e, t, nu)) / (2 * h)
            assert np.max(np.abs(dG[..., i, :, :] - fd)) < 1e-7 * np.max(np.abs(dG))

    @pytest.mark.parametrize("t,nu", [(0.01, 1.0), (1.0, 2.0)])
    def test_gradient_heat_integral(self, t, nu):
        val = estimates.gradient_heat_integral(t, nu)
        assert val == pytest.approx(2 / math.sqrt(math.pi * nu * t), rel=1e-6)

    def test_scan_requires_decade(self):
        with pytest.raises(DomainError):
            estimates.kernel_decay_scan([0.1, 0.5])

    def test_viscosity_rescales_time(self):
        times = np.array([0.05, 0.5])
        a = estimates.kernel_decay_scan(times, nu=1.0, candidates=((0.0, 0.0, 0.0),))
        b = estimates.kernel_decay_scan(times / 2, nu=2.0, candidates=((0.0, 0.0, 0.0),))
        assert np.allclose(a.M, b.M, rtol=1e-10)
        assert a.slope == pytest.approx(b.slope, abs=1e-10)

    def test_scaled_estimate_bounded(self):
        scan = estimates.kernel_decay_scan(np.logspace(-2, -1, 3))
        assert np.all(np.isfinite(scan.M * np.sqrt(scan.times)))
        assert -0.7 < scan.slope < -0.45


class TestJ12:
    @pytest.mark.parametrize("r,q", [(0.5, 2.0), (3.0, 3.0), (10.0, 0.2)])
    def test_shell_average_closed_form(self, r, q):
        assert estimates.shell_average_exact(r, q) == pytest.approx(estimates._shell_average(r, q), rel=1e-10)

    def test_decays(self):
        vals = [estimates.j12(q) for q in (1.0, 10.0, 100.0, 1000.0)]
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] < 0.1 * vals[0]

    def test_scan_range_enforced(self):
        with pytest.raises(DomainError):
            estimates.j12_bound_scan([0.5, 2.0])

    def test_tail_check(self):
        with pytest.raises(QuadratureError):
            estimates.j12(1.0, r_max=100.0)


class TestManufactured:
    def test_catalog(self):
        assert "taylor_green_gaussian" in CATALOG
        with pytest.raises(CatalogError):
            manufactured_case("kovasznay")

    def test_self_check_and_divergence(self):
        # box wide enough for the envelope to vanish at the seam, spectrum resolved
        g = GridSpec(6.0, 64)
        case = manufactured_case("taylor_green_gaussian", nu=0.1, amplitude=0.5)
        assert case.self_check(g, 0.4) < 1e-10
        assert divergence_ratio(g, fft3(case.velocity(g, 0.4).data)) < 1e-12

    def test_linear_limit(self):
        g = GridSpec(3.0, 16)
        small = manufactured_case("taylor_green_gaussian", amplitude=1e-8)
        f = small.forcing(g, 0.2)
        # the quadratic term is amplitude^2: forcing is linear in amplitude to rounding
        double = manufactured_case("taylor_green_gaussian", amplitude=2e-8).forcing(g, 0.2)
        assert np.max(np.abs(double - 2 * f)) < 1e-7 * np.max(np.abs(f))

    def test_residual_decreases(self):
        g = GridSpec(3.0, 24)
        case = manufactured_case("taylor_green_gaussian", nu=0.1, amplitude=0.3)
        sc = manufactured_scenario(case, g, 0.4)
        res = []
        for dt in (0.1, 0.05):
            traj, _ = march(sc, SolverConfig(dt=dt, tau=0.4), with_pressure=True)
            res.append(float(np.max(pde_residual(traj)["l2"])))
        assert res[1] < 0.5 * res[0]

    def test_residual_zero_scenario(self, small_grid):
        sc = Scenario(0.1, small_grid, VectorField.zeros(small_grid), 0.4)
        traj, _ = march(sc, SolverConfig(dt=0.1), with_pressure=True)
        assert np.all(pde_residual(traj)["l2"] == 0)

    def test_residual_needs_samples(self, small_grid):
        sc = Scenario(0.1, small_grid, VectorField.zeros(small_grid), 0.2)
        traj, _ = march(sc, SolverConfig(dt=0.1))
        with pytest.raises(DomainError):
            pde_residual(traj)


class TestStokesExact:
    def test_identity_at_zero(self, small_grid):
        sc = Scenario(0.1, small_grid, VectorField(small_grid, gaussian_vortex_field(small_grid)), 1.0)
        assert np.array_equal(stokes_exact(sc.v0_hat, 0.0, 0.1).data, sc.v0_hat.data)

    def test_energy_decay(self, small_grid):
        sc = Scenario(0.1, small_grid, VectorField(small_grid, gaussian_vortex_field(small_grid)), 1.0)
        t = 0.7
        expected = small_grid.volume * np.sum(np.abs(sc.v0_hat.data) ** 2
                                              * np.exp(-2 * 0.1 * small_grid.xi_squared * t))
        assert dg.energy_spectral(stokes_exact(sc.v0_hat, t, 0.1)) == pytest.approx(expected, rel=1e-13)
