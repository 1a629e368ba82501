import numpy as np
import pytest

from oseenflow import GridSpec, Scenario, SolverConfig, VectorField, march
from oseenflow.errors import ConfigurationError, ContractionError, DomainError
from oseenflow.fields import SpectralField, divergence_ratio, fft3, heat_propagate
from oseenflow.oracles.manufactured import manufactured_case
from oseenflow.scenarios import gaussian_vortex_field, manufactured_scenario
from oseenflow.solver import (
    assemble_F,
    duhamel_apply,
    estimate_window,
    initial_window,
    picard_deltas,
    picard_iterate,
    recover_pressure,
    time_nodes,
)


def _harmonic(grid):
    """Divergence-free single harmonic ``(0, sin(pi x1 / L), 0)``."""
    data = np.zeros((3, *grid.shape))
    data[1] = np.sin(np.pi * grid.coords[0] / grid.L)
    return data


def _vortex_scenario(grid, amplitude=0.1, T=0.5, forcing=None):
    v0 = VectorField(grid, gaussian_vortex_field(grid, amplitude=amplitude, sigma=0.6))
    return Scenario(0.1, grid, v0, T, forcing)


class TestConfig:
    def test_rejects_bad_tau(self):
        with pytest.raises(ConfigurationError):
            SolverConfig(tau="fast")
        with pytest.raises(ConfigurationError):
            SolverConfig(tau=0.01, dt=0.05)

    def test_rejects_bad_safety(self):
        with pytest.raises(ConfigurationError):
            SolverConfig(contraction_safety=1.0)

    def test_scenario_validation(self, small_grid):
        v0 = VectorField.zeros(small_grid)
        with pytest.raises(DomainError):
            Scenario(-1.0, small_grid, v0, 1.0)
        with pytest.raises(DomainError):
            Scenario(1.0, small_grid, v0, 1.0, decay_exponent=3.0)

    def test_initial_data_projected(self, small_grid):
        grad = np.gradient(np.exp(-small_grid.radius**2), small_grid.dx)
        sc = Scenario(0.1, small_grid, VectorField(small_grid, np.array(grad)), 1.0)
        assert divergence_ratio(small_grid, sc.v0_hat.data) < 1e-12

    def test_time_nodes(self):
        assert np.allclose(time_nodes(1.0, 0.3), np.linspace(0, 1, 5))


class TestAssembleF:
    def test_unforced_is_heat_flow(self, small_grid):
        sc = _vortex_scenario(small_grid)
        F = assemble_F(sc, [0.0, 0.25, 0.5])
        assert np.array_equal(F[0].data, sc.v0_hat.data)
        exact = heat_propagate(sc.v0_hat, 0.5, sc.nu).data
        assert np.max(np.abs(F[2].data - exact)) <= 1e-15 * np.max(np.abs(exact))

    def test_constant_harmonic_forcing(self, small_grid):
        g = small_grid
        f = _harmonic(g)
        sc = Scenario(0.2, g, VectorField.zeros(g), 1.0, lambda t: f)
        t = 0.8
        F = assemble_F(sc, [t], dt=0.1)[0].data
        k2 = (np.pi / g.L) ** 2
        exact = fft3(f) * (1 - np.exp(-sc.nu * k2 * t)) / (sc.nu * k2)
        assert np.max(np.abs(F - exact)) < 1e-14

    def test_zero(self, small_grid):
        sc = Scenario(0.2, small_grid, VectorField.zeros(small_grid), 1.0)
        assert all(np.all(F.data == 0) for F in assemble_F(sc, [0.0, 1.0]))

    def test_times_outside_horizon(self, small_grid):
        sc = Scenario(0.2, small_grid, VectorField.zeros(small_grid), 1.0)
        with pytest.raises(DomainError):
            assemble_F(sc, [2.0])


class TestDuhamel:
    def test_zero_source(self, small_grid):
        src = [SpectralField.zeros(small_grid)] * 3
        assert np.all(duhamel_apply(src, [0.0, 0.1, 0.2], 0.3).data == 0)

    def test_constant_single_mode(self, small_grid):
        g = small_grid
        fh = fft3(_harmonic(g))
        times = np.linspace(0.0, 0.6, 7)
        out = duhamel_apply([SpectralField(g, fh)] * len(times), times, 0.3).data
        k2 = (np.pi / g.L) ** 2
        assert np.max(np.abs(out - fh * (1 - np.exp(-0.3 * k2 * 0.6)) / (0.3 * k2))) < 1e-15

    def test_output_projected(self, small_grid, rng):
        src = [SpectralField(small_grid, fft3(rng.normal(size=(3, *small_grid.shape)))) for _ in range(4)]
        out = duhamel_apply(src, [0.0, 0.1, 0.2, 0.3], 0.5)
        assert divergence_ratio(small_grid, out.data) < 1e-14

    def test_nonuniform_nodes_rejected(self, small_grid):
        src = [SpectralField.zeros(small_grid)] * 3
        with pytest.raises(ConfigurationError):
            duhamel_apply(src, [0.0, 0.1, 0.3], 0.5)


class TestPicard:
    def test_zero_data(self, small_grid):
        sc = Scenario(0.1, small_grid, VectorField.zeros(small_grid), 1.0)
        v, trace = picard_iterate(initial_window(sc, 1.0, 0.1), SolverConfig(dt=0.1))
        assert trace.deltas == [0.0] and trace.converged
        assert np.all(v == 0)

    def test_contraction_below_safety(self, small_grid):
        sc = _vortex_scenario(small_grid, amplitude=0.3, T=2.0)
        cfg = SolverConfig(dt=0.05, contraction_safety=0.5)
        tau = estimate_window(initial_window(sc, 0.5, cfg.dt), cfg, sc.T)
        tau = cfg.dt * max(1, int(tau / cfg.dt))
        trace = picard_deltas(initial_window(sc, tau, cfg.dt), cfg, 8)
        assert max(trace.ratios) <= cfg.contraction_safety

    def test_amplitude_shrinks_window(self, small_grid):
        cfg = SolverConfig(dt=0.05)
        taus = []
        for amp in (0.5, 1.0):
            sc = _vortex_scenario(small_grid, amplitude=amp, T=8.0)
            taus.append(estimate_window(initial_window(sc, 0.5, cfg.dt), cfg, sc.T))
        assert 2.5 < taus[0] / taus[1] < 6.0

    def test_linear_window_is_horizon(self, small_grid):
        sc = _vortex_scenario(small_grid)
        cfg = SolverConfig(dt=0.05, linear=True)
        assert estimate_window(initial_window(sc, 0.25, cfg.dt), cfg, sc.T) == sc.T

    def test_failure_raises(self, small_grid):
        sc = _vortex_scenario(small_grid, amplitude=0.5, T=1.0)
        with pytest.raises(ContractionError) as err:
            picard_iterate(initial_window(sc, 1.0, 0.1), SolverConfig(dt=0.1, max_iters=2))
        assert err.value.window == (0.0, 1.0)


class TestMarch:
    def test_single_window_matches_picard(self, small_grid):
        sc = _vortex_scenario(small_grid, T=0.5)
        cfg = SolverConfig(dt=0.05, tau=1.0)
        traj, trace = march(sc, cfg)
        v, _ = picard_iterate(initial_window(sc, 0.5, 0.05), cfg)
        assert len(trace.windows) == 1
        assert all(np.array_equal(a.data, b) for a, b in zip(traj.states, v))

    def test_initial_state_exact(self, small_grid):
        sc = _vortex_scenario(small_grid)
        traj, _ = march(sc, SolverConfig(dt=0.05, tau=0.25))
        assert np.array_equal(traj.states[0].data, sc.v0_hat.data)

    def test_monotone_deltas_and_monitor(self, small_grid):
        case = manufactured_case("taylor_green_gaussian", nu=0.1, amplitude=0.3)
        sc = manufactured_scenario(case, small_grid, 1.0)
        traj, trace = march(sc, SolverConfig(dt=0.05, tau=0.5), times=[0.5, 1.0])
        assert list(traj.times) == [0.0, 0.5, 1.0]
        for w in trace.windows:
            d = w.deltas
            assert w.converged
            assert all(d[n + 1] <= d[n] for n in range(1, len(d) - 1))
            assert np.isfinite(w.sup_n1) and w.sup_n1 > 0
        assert not trace.n1_flagged
        assert trace.max_divergence < 1e-12

    def test_window_halving_on_failure(self, small_grid):
        sc = _vortex_scenario(small_grid, amplitude=1.0, T=1.0)
        traj, trace = march(sc, SolverConfig(dt=0.05, tau=1.0, max_iters=10))
        assert trace.windows[0].retries == 1
        assert trace.windows[0].t_end == pytest.approx(0.5)
        assert trace.converged

    def test_abort_after_retries(self, small_grid):
        sc = _vortex_scenario(small_grid, amplitude=0.5, T=1.0)
        with pytest.raises(ContractionError):
            march(sc, SolverConfig(dt=0.05, tau=1.0, max_iters=3, max_retries=1))

    def test_deterministic(self, small_grid):
        sc = _vortex_scenario(small_grid)
        a, _ = march(sc, SolverConfig(dt=0.05))
        b, _ = march(sc, SolverConfig(dt=0.05))
        assert all(np.array_equal(x.data, y.data) for x, y in zip(a.states, b.states))


class TestPressure:
    def test_shear_flow_has_no_pressure(self, small_grid):
        p = recover_pressure(VectorField(small_grid, _harmonic(small_grid)))
        assert np.max(np.abs(p.samples)) < 1e-14

    def test_zero_mean(self, small_grid, rng):
        v = VectorField(small_grid, rng.normal(size=(3, *small_grid.shape)))
        assert abs(np.mean(recover_pressure(v, rng.normal(size=(3, *small_grid.shape))).samples)) < 1e-14

    def test_manufactured_pressure(self):
        g = GridSpec(3.0, 32)
        case = manufactured_case("taylor_green_gaussian", nu=0.1, amplitude=0.5)
        t = 0.3
        p = recover_pressure(case.velocity(g, t), case.forcing(g, t)).samples
        exact = case.pressure(g, t).samples
        exact = exact - exact.mean()
        # limited by the dealiased convective term and the periodic truncation
        assert np.max(np.abs(p - exact)) < 2e-3 * np.max(np.abs(exact))
