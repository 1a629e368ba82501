"""
Exact solutions used to check the solver: manufactured flows and Stokes flow.

The catalog flow is a Taylor-Green cell under a Gaussian envelope,

    v(x, t) = a(t) curl(0, 0, psi),
    psi = E(x1) sin(k x1) * E(x2) sin(k x2) * E(x3) cos(k x3),
    E(s) = exp(-s^2 / (2 sigma^2)),
    a(t) = amplitude * (1 + modulation * sin(omega t)),

with pressure ``p = p_amplitude * a(t) * exp(-|x|^2 / (2 sigma_p^2))``.  Because
``psi`` is a product of one-dimensional factors, every derivative needed for
``f = v_t + (v . grad) v - nu Lap v + grad p`` is a product of closed-form 1D
derivatives; no field is differentiated numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CatalogError, DomainError
from ..fields import (
    GridSpec,
    ScalarField,
    SpectralField,
    VectorField,
    advection_array,
    fft3,
    gradient_array,
    heat_propagate,
    ifft3_real,
    project_array,
)


def _envelope_derivatives(s: np.ndarray, sigma: float, k: float, kind: str) -> list[np.ndarray]:
    """Value and first three derivatives of ``E(s) sin(ks)`` or ``E(s) cos(ks)``."""
    h = np.exp(-(s**2) / (2 * sigma**2) + 1j * k * s)
    q = -s / sigma**2 + 1j * k
    c = 1.0 / sigma**2
    series = [h, q * h, (q**2 - c) * h, (q**3 - 3 * c * q) * h]
    part = np.imag if kind == "sin" else np.real
    return [part(d) for d in series]


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form divergence-free flow with its analytically derived forcing."""

    name: str
    nu: float
    amplitude: float = 1.0
    wavenumber: float = 1.0
    sigma: float = 0.6
    omega: float = 2.0
    modulation: float = 0.5
    p_amplitude: float = 0.1
    sigma_p: float = 0.6

    def __post_init__(self) -> None:
        if self.nu <= 0 or self.sigma <= 0 or self.sigma_p <= 0:
            raise DomainError("nu, sigma and sigma_p must be positive")

    # time profile
    def a(self, t: float) -> float:
        return self.amplitude * (1.0 + self.modulation * np.sin(self.omega * t))

    def a_dot(self, t: float) -> float:
        return self.amplitude * self.modulation * self.omega * np.cos(self.omega * t)

    def _psi_derivs(self, grid: GridSpec):
        x1, x2, x3 = (grid.axis_coords,) * 3
        X = _envelope_derivatives(x1, self.sigma, self.wavenumber, "sin")
        Y = _envelope_derivatives(x2, self.sigma, self.wavenumber, "sin")
        Z = _envelope_derivatives(x3, self.sigma, self.wavenumber, "cos")

        def d(a: int, b: int, c: int) -> np.ndarray:
            return X[a][:, None, None] * Y[b][None, :, None] * Z[c][None, None, :]

        return d

    def _spatial(self, grid: GridSpec):
        """Unit-amplitude ``u``, ``grad u`` (``[j, m] = d_j u_m``) and ``Lap u``."""
        d = self._psi_derivs(grid)
        zero = np.zeros(grid.shape)
        e = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]

        def plus(a, b):
            return tuple(i + j for i, j in zip(a, b))

        u = np.array([d(0, 1, 0), -d(1, 0, 0), zero])
        grad = np.empty((3, 3, *grid.shape))
        for j in range(3):
            grad[j, 0] = d(*plus((0, 1, 0), e[j]))
            grad[j, 1] = -d(*plus((1, 0, 0), e[j]))
            grad[j, 2] = zero
        lap = np.array([
            sum(d(*plus(plus((0, 1, 0), e[j]), e[j])) for j in range(3)),
            -sum(d(*plus(plus((1, 0, 0), e[j]), e[j])) for j in range(3)),
            zero,
        ])
        return u, grad, lap

    def velocity(self, grid: GridSpec, t: float) -> VectorField:
        u, _, _ = self._spatial(grid)
        return VectorField(grid, self.a(t) * u, t)

    def velocity_gradient(self, grid: GridSpec, t: float) -> np.ndarray:
        _, grad, _ = self._spatial(grid)
        return self.a(t) * grad

    def pressure(self, grid: GridSpec, t: float) -> ScalarField:
        r2 = grid.radius**2
        return ScalarField(grid, self.p_amplitude * self.a(t) * np.exp(-r2 / (2 * self.sigma_p**2)), t)

    def pressure_gradient(self, grid: GridSpec, t: float) -> np.ndarray:
        p = self.pressure(grid, t).samples
        return -grid.coords / self.sigma_p**2 * p

    def forcing(self, grid: GridSpec, t: float) -> np.ndarray:
        """``f = a' u + a^2 (u . grad) u - nu a Lap u + grad p`` in closed form."""
        u, grad, lap = self._spatial(grid)
        adv = np.einsum("j...,jm...->m...", u, grad)
        a = self.a(t)
        return (self.a_dot(t) * u + a**2 * adv - self.nu * a * lap
                + self.pressure_gradient(grid, t))

    def forcing_function(self, grid: GridSpec):
        """``t -> forcing(grid, t)`` with the spatial factors precomputed."""
        u, grad, lap = self._spatial(grid)
        adv = np.einsum("j...,jm...->m...", u, grad)
        r2 = grid.radius**2
        gp_unit = -grid.coords / self.sigma_p**2 * self.p_amplitude * np.exp(-r2 / (2 * self.sigma_p**2))

        def f(t: float) -> np.ndarray:
            a = self.a(t)
            return self.a_dot(t) * u + a**2 * adv - self.nu * a * lap + a * gp_unit

        return f

    def self_check(self, grid: GridSpec, t: float) -> float:
        """
        Relative sup residual of the momentum equation with spatial derivatives
        taken spectrally from sampled fields; small only on a resolved box.
        """
        v = self.velocity(grid, t).data
        vh = fft3(v)
        grad = gradient_array(grid, vh)
        adv = np.einsum("j...,jm...->m...", v, grad)
        lap = ifft3_real(-grid.xi_squared * vh)
        ph = fft3(self.pressure(grid, t).samples)
        gp = ifft3_real(1j * grid.xi_derivative * ph)
        vt = self.a_dot(t) * self._spatial(grid)[0]
        res = vt + adv - self.nu * lap + gp - self.forcing(grid, t)
        return float(np.max(np.abs(res)) / np.max(np.abs(self.forcing(grid, t))))


CATALOG = ("taylor_green_gaussian",)


def manufactured_case(name: str, **params) -> ManufacturedCase:
    """Look up a manufactured flow by name; ``params`` override its defaults."""
    if name not in CATALOG:
        raise CatalogError(f"unknown manufactured case {name!r}; available: {', '.join(CATALOG)}")
    params.setdefault("nu", 0.1)
    return ManufacturedCase(name=name, **params)


def stokes_exact(v0: SpectralField, t: float, nu: float) -> SpectralField:
    """Stokes-limit solution: the divergence-free ``v0`` carried by the heat semigroup."""
    return heat_propagate(v0, t, nu)


def pde_residual(traj, forcing=None, pressure=None):
    """
    Residual of ``v_t + (v . grad) v + grad p - nu Lap v - f`` at interior times.

    ``v_t`` comes from the fourth-order central difference on uniformly
    spaced samples, so the first and last two samples are skipped.

    Parameters
    ----------
    traj : SolutionTrajectory
    forcing : callable, optional
        ``t -> (3, N, N, N)`` samples of ``f``; defaults to ``traj.forcing``.
    pressure : sequence of ScalarField, optional
        Defaults to ``traj.pressure``.

    Returns
    -------
    dict
        ``times``, ``l2``, ``sup`` and ``l2_projected`` (norm of the Leray
        projection of the residual) per interior time.
    """
    times = np.asarray(traj.times)
    if len(times) < 5:
        raise DomainError("pde_residual needs at least five time samples")
    steps = np.diff(times)
    h = steps.mean()
    if np.max(np.abs(steps - h)) > 1e-9 * h:
        raise DomainError("pde_residual needs uniformly spaced samples")
    forcing = traj.forcing if forcing is None else forcing
    pressure = traj.pressure if pressure is None else pressure
    grid = traj.grid
    out = {"times": [], "l2": [], "sup": [], "l2_projected": []}
    for i in range(2, len(times) - 2):
        s = [traj.states[i + j].data for j in (-2, -1, 1, 2)]
        vt_hat = (s[0] - 8 * s[1] + 8 * s[2] - s[3]) / (12 * h)
        vh = traj.states[i].data
        u = ifft3_real(vh)
        res_hat = vt_hat + advection_array(grid, u, gradient_array(grid, vh)) + traj.nu * grid.xi_squared * vh
        if pressure is not None:
            res_hat = res_hat + 1j * grid.xi_derivative * fft3(pressure[i].samples)
        if forcing is not None:
            res_hat = res_hat - fft3(np.asarray(forcing(times[i])))
        res = ifft3_real(res_hat)
        proj = ifft3_real(project_array(grid, res_hat))
        out["times"].append(float(times[i]))
        out["l2"].append(float(np.sqrt(np.sum(res**2) * grid.cell_volume)))
        out["sup"].append(float(np.max(np.abs(res))))
        out["l2_projected"].append(float(np.sqrt(np.sum(proj**2) * grid.cell_volume)))
    return {k: np.asarray(v) for k, v in out.items()}
