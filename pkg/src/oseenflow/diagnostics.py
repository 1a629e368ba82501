"""
Norms, energy budget and a-priori bounds evaluated on computed fields.

``N0`` is the sup of ``|v| + |grad v|`` and ``N1`` the same sup with the
weight ``1 + |x|`` (distance from the box center).  ``|grad v|`` is the
Frobenius norm of the full 3x3 gradient, which dominates any single partial
derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .fields import (
    GridSpec,
    SpectralField,
    VectorField,
    fft3,
    gradient_array,
    ifft3_real,
    value_plus_gradient,
)


class UnreliableFitWarning(UserWarning):
    """The decay fit is contaminated by the periodic box boundary."""


@dataclass
class NormReport:
    t: float | None
    N0: float
    N1: float
    location: tuple[float, float, float]


@dataclass
class EnergyReport:
    t: float
    E: float
    dissipation_cum: float
    forcing_cum: float
    residual: float


@dataclass
class BoundReport:
    """Energy bound with ``epsilon = 1/2`` plus the finiteness checks."""

    E0: float
    E_T: float
    forcing_norm_integral: float
    lhs: float
    rhs: float
    slack: float
    gradient_integral: float
    epsilon: float = 0.5

    @property
    def holds(self) -> bool:
        return self.slack >= 0

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.E_T) and np.isfinite(self.gradient_integral))


@dataclass
class Lemma1Report:
    times: np.ndarray
    M: np.ndarray
    c0: float
    c1: float
    forcing_precondition: float | None = None

    @property
    def envelope_valid(self) -> bool:
        return bool(np.all(self.M <= self.c0 + self.c1 * self.times))


@dataclass
class DecayFit:
    exponent: float
    radii: np.ndarray
    shell_values: np.ndarray
    local_exponents: np.ndarray
    lower_bound: bool = False
    reliable: bool = True
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# sup norms


def refine_spectral(grid: GridSpec, vh: np.ndarray, factor: int = 2) -> tuple[GridSpec, np.ndarray]:
    """Zero-pad coefficients onto a grid ``factor`` times finer (Nyquist dropped)."""
    n, m = grid.points, grid.points * factor
    fine = GridSpec(grid.half_width, m, grid.dealias_fraction)
    out = np.zeros(vh.shape[:-3] + fine.shape, dtype=np.complex128)
    keep = np.arange(-(n // 2) + 1, n // 2)
    src = np.ix_(keep % n, keep % n, keep % n)
    dst = np.ix_(keep % m, keep % m, keep % m)
    out[(...,) + dst] = vh[(...,) + src]
    return fine, out


def _magnitude(grid: GridSpec, vh: np.ndarray) -> np.ndarray:
    return value_plus_gradient(ifft3_real(vh), gradient_array(grid, vh))


def norms(v: VectorField, refine: bool = False) -> NormReport:
    """``N0`` and ``N1`` of ``v`` and the grid point where ``N1`` is attained."""
    grid, vh = v.grid, fft3(v.data)
    if refine:
        grid, vh = refine_spectral(grid, vh)
    mag = _magnitude(grid, vh)
    weighted = mag * (1.0 + grid.radius)
    idx = np.unravel_index(np.argmax(weighted), grid.shape)
    loc = tuple(float(grid.axis_coords[i]) for i in idx)
    return NormReport(v.t, float(mag.max()), float(weighted.max()), loc)


def norm_N0(v: VectorField, refine: bool = False) -> float:
    return norms(v, refine).N0


def norm_N1(v: VectorField, refine: bool = False) -> float:
    return norms(v, refine).N1


# ---------------------------------------------------------------------------
# energy


def energy(v: VectorField) -> float:
    """``int |v|^2 dx`` by the periodic trapezoid rule."""
    return float(np.sum(v.data**2) * v.grid.cell_volume)


def energy_spectral(vh: SpectralField) -> float:
    """Energy from coefficients (Parseval): ``V * sum |c_k|^2``."""
    return float(np.sum(np.abs(vh.data) ** 2) * vh.grid.volume)


def gradient_energy(vh: SpectralField) -> float:
    """``||grad v||^2 = sum_jm int |d_j v_m|^2 dx``."""
    g = vh.grid
    return float(np.sum(g.xi_squared * np.abs(vh.data) ** 2) * g.volume)


def _trapezoid_cumulative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _forcing_samples(traj, forcing):
    forcing = traj.forcing if forcing is None else forcing
    if forcing is None:
        return None
    return [np.asarray(forcing(float(t))) for t in traj.times]


def energy_balance(traj, forcing=None) -> list[EnergyReport]:
    """
    Integrated energy identity along a trajectory.

    ``residual = E(t) + 2 nu int_0^t ||grad v||^2 - E(0) - 2 int_0^t int f . v``
    with the time integrals taken by the trapezoid rule over the samples.
    """
    if len(traj.times) < 2:
        raise DomainError("energy_balance needs at least two time samples")
    t = np.asarray(traj.times)
    E = np.array([energy_spectral(s) for s in traj.states])
    D = np.array([2.0 * traj.nu * gradient_energy(s) for s in traj.states])
    fs = _forcing_samples(traj, forcing)
    if fs is None:
        W = np.zeros_like(E)
    else:
        cell = traj.grid.cell_volume
        W = np.array([2.0 * np.sum(f * ifft3_real(s.data)) * cell for f, s in zip(fs, traj.states)])
    Dc = _trapezoid_cumulative(t, D)
    Wc = _trapezoid_cumulative(t, W)
    res = E + Dc - E[0] - Wc
    return [EnergyReport(float(t[i]), float(E[i]), float(Dc[i]), float(Wc[i]), float(res[i]))
            for i in range(len(t))]


def energy_bound_check(traj, forcing=None, epsilon: float = 0.5) -> BoundReport:
    """Check ``(1 - eps) E_T <= E(0) + (1/eps) (int_0^T ||f|| dt)^2``."""
    t = np.asarray(traj.times)
    E = np.array([energy_spectral(s) for s in traj.states])
    fs = _forcing_samples(traj, forcing)
    if fs is None or len(t) < 2:
        fint = 0.0
    else:
        cell = traj.grid.cell_volume
        fn = np.array([np.sqrt(np.sum(f**2) * cell) for f in fs])
        fint = float(np.trapezoid(fn, t))
    grad_sq = np.array([gradient_energy(s) for s in traj.states])
    gint = float(np.trapezoid(grad_sq, t)) if len(t) > 1 else 0.0
    E_T = float(E.max())
    lhs = (1.0 - epsilon) * E_T
    rhs = float(E[0] + fint**2 / epsilon)
    return BoundReport(float(E[0]), E_T, fint, lhs, rhs, rhs - lhs, gint, epsilon)


# ---------------------------------------------------------------------------
# Fourier-space bound


def _density(vh: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Continuous transform density: ``v(x) = int e^{i xi x} v~(xi) dxi``."""
    return vh / grid.dxi**3


def affine_envelope(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Smallest ``c0 + c1 T`` (``c0, c1 >= 0``) with ``c0 + c1 t_i >= values_i``."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.all(values <= 0):
        return 0.0, 0.0
    T = float(times.max())
    A = -np.column_stack([np.ones_like(times), times])
    res = linprog([1.0, T], A_ub=A, b_ub=-values, bounds=[(0, None), (0, None)], method="highs")
    c1 = float(res.x[1]) if res.success else 0.0
    # re-tighten c0 so domination holds exactly on every sample
    c0 = float(max(0.0, np.max(values - c1 * times)))
    return c0, c1


def lemma1_check(traj, F_states=None) -> Lemma1Report:
    """
    ``M(t) = max_xi (1 + |xi|^2) |v~(xi, t)|^2`` and its affine envelope.

    ``F_states`` (spectral ``F`` at the trajectory times), when given, is used
    to report ``max |xi|^2 |F~|^2`` over all samples.
    """
    grid = traj.grid
    w = 1.0 + grid.xi_squared
    M = np.array([np.max(w * np.sum(np.abs(_density(s.data, grid)) ** 2, axis=0))
                  for s in traj.states])
    c0, c1 = affine_envelope(traj.times, M)
    pre = None
    if F_states is not None:
        pre = float(max(np.max(grid.xi_squared * np.sum(np.abs(_density(F.data, grid)) ** 2, axis=0))
                        for F in F_states))
    return Lemma1Report(np.asarray(traj.times), M, c0, c1, pre)


# ---------------------------------------------------------------------------
# decay profile


def decay_profile(v: VectorField, floor: float = 1e-3, shells: int = 16) -> DecayFit:
    """
    Fit ``|v| + |grad v| ~ (1 + |x|)^{-a}`` over shells in the outer half of the box.

    The shell maximum is used per shell, at the radius where it is attained.  Gradients are second-order finite
    differences so that the periodic wrap at the box edge does not pollute the
    outer shells.  When the boundary shell exceeds ``floor`` times the peak an
    :class:`UnreliableFitWarning` is issued; when local exponents keep growing
    outward the exponent is flagged as a lower bound (faster than any power).
    """
    grid = v.grid
    grads = np.array([np.gradient(v.data[m], grid.dx, axis=(0, 1, 2)) for m in range(3)])
    mag = np.sqrt(np.sum(v.data**2, axis=0)) + np.sqrt(np.sum(grads**2, axis=(0, 1)))
    r = grid.radius
    L = grid.half_width
    edges = np.linspace(0.5 * L, L, shells + 1)
    radii, vals = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (r >= lo) & (r < hi)
        if np.any(sel):
            i = np.argmax(mag[sel])
            if mag[sel][i] > 0:
                # radius where the shell maximum is attained
                radii.append(r[sel][i])
                vals.append(mag[sel][i])
    fit = DecayFit(float("nan"), np.asarray(radii), np.asarray(vals), np.array([]))
    peak = mag.max()
    if peak == 0:
        fit.exponent = 0.0
        fit.reliable = False
        fit.notes.append("zero field")
        return fit
    if len(vals) < 3:
        fit.reliable = False
        fit.notes.append("too few non-zero shells")
        return fit
    lr, lv = np.log1p(fit.radii), np.log(fit.shell_values)
    fit.exponent = float(-np.polyfit(lr, lv, 1)[0])
    fit.local_exponents = -np.diff(lv) / np.diff(lr)
    half = len(fit.local_exponents) // 2
    inner = np.mean(fit.local_exponents[:half])
    outer = np.mean(fit.local_exponents[half:])
    if inner > 0 and outer > 1.25 * inner:
        fit.lower_bound = True
        fit.notes.append("local exponent grows outward: decay faster than any power")
    if fit.shell_values[-1] > floor * peak:
        fit.reliable = False
        fit.notes.append("field above floor at the box boundary")
        warnings.warn(f"decay fit unreliable: boundary value {fit.shell_values[-1] / peak:.2e} "
                      f"of peak exceeds floor {floor:g}", UnreliableFitWarning, stacklevel=2)
    return fit


def norm_series(traj, refine: bool = False) -> list[NormReport]:
    return [norms(traj.physical(i), refine) for i in range(len(traj.times))]


def boundary_ratio(v: VectorField) -> float:
    """Largest ``|v|`` on the box faces relative to the largest ``|v|`` anywhere (0 for a zero field)."""
    mag = np.sqrt(np.sum(v.data**2, axis=0))
    peak = float(mag.max())
    if peak == 0.0:
        return 0.0
    # index 0 is the x = -L plane, which the periodic wrap identifies with x = +L
    faces = max(float(np.abs(np.take(mag, 0, axis=a)).max()) for a in range(3))
    return faces / peak


__all__ = [
    "NormReport",
    "EnergyReport",
    "BoundReport",
    "Lemma1Report",
    "DecayFit",
    "UnreliableFitWarning",
    "norms",
    "norm_N0",
    "norm_N1",
    "energy",
    "energy_spectral",
    "gradient_energy",
    "energy_balance",
    "energy_bound_check",
    "affine_envelope",
    "lemma1_check",
    "decay_profile",
    "boundary_ratio",
    "norm_series",
    "refine_spectral",
]
