"""
Brute-force evaluations of the kernels, independent of their closed forms.

* :func:`numeric_G_quadrature` integrates the Fourier representation
  ``(2 pi)^-3 int e^{i xi.x} (I - xi xi^T / |xi|^2) e^{-nu t |xi|^2} dxi``
  in spherical coordinates aligned with ``x``.
* :func:`numeric_I2` reduces the projector part to a one-dimensional radial
  integral and differentiates it numerically.
* :func:`finite_difference_J` differentiates :func:`erf_potential` twice.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..errors import DomainError, QuadratureError
from ..kernels import erf_potential, oseen_J

TAIL_TOL = 1e-12


class StepSizeWarning(UserWarning):
    """Two-step Richardson estimate says the difference step is poorly chosen."""


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Tensor-product rule over ``|xi| in [0, r_max]``, ``cos(theta)`` and ``phi``.

    Gauss-Legendre in the radius and polar cosine, trapezoid in azimuth
    (exact for the degree-two azimuthal dependence of the projector).
    ``r_max=None`` picks the smallest cutoff meeting the tail tolerance.
    """

    r_max: float | None = None
    radial_nodes: int = 384
    polar_nodes: int = 160
    azimuth_nodes: int = 8
    rule: str = "gauss"

    def __post_init__(self) -> None:
        if self.rule not in ("gauss", "midpoint"):
            raise DomainError(f"unknown quadrature rule {self.rule!r}")
        if min(self.radial_nodes, self.polar_nodes, self.azimuth_nodes) < 1:
            raise DomainError("node counts must be positive")

    def cutoff(self, nu: float, t: float) -> float:
        if self.r_max is not None:
            return float(self.r_max)
        return math.sqrt(-math.log(TAIL_TOL) / (nu * t)) * 1.05

    def nodes(self, a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        if self.rule == "gauss":
            x, w = np.polynomial.legendre.leggauss(n)
            return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w
        h = (b - a) / n
        return a + h * (np.arange(n) + 0.5), np.full(n, h)


def _frame(x: np.ndarray) -> np.ndarray:
    """Orthonormal rows ``(e1, e2, e3)`` with ``e3`` along ``x``."""
    e3 = x / np.linalg.norm(x)
    trial = np.eye(3)[np.argmin(np.abs(e3))]
    e1 = np.cross(e3, trial)
    e1 /= np.linalg.norm(e1)
    return np.array([e1, np.cross(e3, e1), e3])


def numeric_G_quadrature(x, t: float, nu: float, spec: QuadratureSpec | None = None) -> np.ndarray:
    """
    Quadrature of the Fourier integral for the Oseen-type tensor at one point.

    Raises
    ------
    QuadratureError
        If ``exp(-nu t r_max^2)`` exceeds the tail tolerance.
    """
    spec = spec or QuadratureSpec()
    x = np.asarray(x, dtype=np.float64)
    if t <= 0 or nu <= 0:
        raise DomainError("numeric_G_quadrature requires t > 0 and nu > 0")
    R = spec.cutoff(nu, t)
    tail = math.exp(-nu * t * R * R)
    if tail >= TAIL_TOL:
        raise QuadratureError(f"Gaussian tail exp(-nu t R^2) = {tail:.2e} >= {TAIL_TOL:g}; widen r_max")
    rx = float(np.linalg.norm(x))

    rho, wr = spec.nodes(0.0, R, spec.radial_nodes)
    u, wu = spec.nodes(-1.0, 1.0, spec.polar_nodes)
    phi = 2 * math.pi * np.arange(spec.azimuth_nodes) / spec.azimuth_nodes
    wphi = 2 * math.pi / spec.azimuth_nodes

    radial = wr * rho**2 * np.exp(-nu * t * rho**2)
    # the imaginary part integrates to zero by symmetry
    phase = np.cos(np.outer(rho, u) * rx)
    weight_u = radial @ phase * wu  # per polar node

    st = np.sqrt(1.0 - u**2)
    n_local = np.stack([
        st[:, None] * np.cos(phi)[None, :],
        st[:, None] * np.sin(phi)[None, :],
        np.broadcast_to(u[:, None], (u.size, phi.size)),
    ], axis=-1)
    nn = np.einsum("upj,upm,u->jm", n_local, n_local, weight_u) * wphi
    total = np.sum(weight_u) * 2 * math.pi
    local = total * np.eye(3) - nn
    if rx > 0:
        frame = _frame(x)
        local = frame.T @ local @ frame
    return local / (2 * math.pi) ** 3


# ---------------------------------------------------------------------------
# projector part via the radial reduction


def radial_inner(r: float, q: float) -> float:
    """``int_{-1}^{1} e^{i r q u} du = 2 sin(r q) / (r q)``."""
    z = r * q
    return 2.0 if z == 0 else 2.0 * math.sin(z) / z


def _reduced_potential(q: float, t: float, nu: float) -> float:
    """``(2 pi)^-2 int_0^inf e^{-nu t r^2} 2 sin(r q) / (r q) dr`` by adaptive quadrature."""
    upper = math.sqrt(-math.log(1e-18) / (nu * t))
    val, err = integrate.quad(lambda r: math.exp(-nu * t * r * r) * radial_inner(r, q),
                              0.0, upper, limit=400, epsabs=1e-15, epsrel=1e-13)
    return val / (2 * math.pi) ** 2


def numeric_I2(x, t: float, nu: float, h: float | None = None) -> np.ndarray:
    """
    Hessian of the radially reduced potential by central differences.

    Should agree with ``oseen_J / (2 pi^{3/2})``; the finite-difference step
    defaults to ``2e-3 * min(|x|, sqrt(4 nu t))``.
    """
    x = np.asarray(x, dtype=np.float64)
    r = float(np.linalg.norm(x))
    if r == 0:
        raise DomainError("numeric_I2: x must be nonzero")
    if t <= 0 or nu <= 0:
        raise DomainError("numeric_I2 requires t > 0 and nu > 0")
    h = h or 2e-3 * min(r, math.sqrt(4 * nu * t))
    return _hessian_fd(lambda y: _reduced_potential(float(np.linalg.norm(y)), t, nu), x, h)


# ---------------------------------------------------------------------------
# error-function identity


def erf_identity_sides(y: float, a: float) -> tuple[float, float]:
    """
    Both sides of ``int_0^inf sin(s y)/s e^{-a s^2} ds = (pi/2) Erf(y / (2 sqrt a))``,
    each by one-dimensional quadrature.
    """
    if a <= 0:
        raise DomainError("erf identity requires a > 0")
    upper = math.sqrt(-math.log(1e-20) / a)

    def lhs_integrand(s):
        return y * math.exp(-a * s * s) if s == 0 else math.sin(s * y) / s * math.exp(-a * s * s)

    lhs, _ = integrate.quad(lhs_integrand, 0.0, upper, limit=500, epsabs=1e-15, epsrel=1e-13)
    z = y / (2 * math.sqrt(a))
    inner, _ = integrate.quad(lambda s: math.exp(-s * s), 0.0, z, epsabs=1e-15, epsrel=1e-13)
    rhs = 0.5 * math.pi * (2 / math.sqrt(math.pi)) * inner
    return lhs, rhs


# ---------------------------------------------------------------------------
# finite-difference Hessian of the error-function potential


def _hessian_fd(func, x: np.ndarray, h: float) -> np.ndarray:
    e = np.eye(3) * h
    f0 = func(x)
    H = np.empty((3, 3))
    for j in range(3):
        H[j, j] = (func(x + e[j]) - 2 * f0 + func(x - e[j])) / h**2
        for m in range(j + 1, 3):
            H[j, m] = H[m, j] = (func(x + e[j] + e[m]) - func(x + e[j] - e[m])
                                 - func(x - e[j] + e[m]) + func(x - e[j] - e[m])) / (4 * h**2)
    return H


def default_step(x, t: float, nu: float) -> float:
    """``5e-4 * min(|x|, sqrt(4 nu t))``: truncation error near 1e-7, rounding near 1e-9."""
    return 5e-4 * min(float(np.linalg.norm(x)), math.sqrt(4 * nu * t))


def finite_difference_J(x, t: float, nu: float, h: float | None = None,
                        tol: float = 1e-6) -> np.ndarray:
    """
    Central second differences of ``b(|x| / sqrt(4 nu t)) / |x|``.

    A step-``2h`` evaluation gives the Richardson error estimate
    ``|D_h - D_2h| / 3``; a :class:`StepSizeWarning` is issued when it exceeds
    ``tol`` relative to the largest entry.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.linalg.norm(x) == 0:
        raise DomainError("finite_difference_J: x must be nonzero")
    if t <= 0 or nu <= 0:
        raise DomainError("finite_difference_J requires t > 0 and nu > 0")
    h = default_step(x, t, nu) if h is None else float(h)
    if h <= 0:
        raise DomainError("step h must be positive")

    def func(y):
        return float(erf_potential(y, t, nu))

    D1 = _hessian_fd(func, x, h)
    D2 = _hessian_fd(func, x, 2 * h)
    estimate = np.max(np.abs(D1 - D2)) / 3.0 / np.max(np.abs(D1))
    if estimate > tol:
        warnings.warn(f"finite-difference step h={h:.3g} gives Richardson error estimate "
                      f"{estimate:.2e} > {tol:g}", StepSizeWarning, stacklevel=2)
    return D1


def relative_entry_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Largest entry difference relative to the largest entry of ``exact``."""
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))


def fd_convergence(x, t: float, nu: float, steps) -> tuple[np.ndarray, np.ndarray]:
    """Errors of :func:`finite_difference_J` against :func:`oseen_J` and observed orders."""
    exact = oseen_J(np.asarray(x, dtype=np.float64), t, nu)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        errs = np.array([relative_entry_error(finite_difference_J(x, t, nu, h), exact) for h in steps])
    steps = np.asarray(steps, dtype=np.float64)
    orders = np.log(errs[:-1] / errs[1:]) / np.log(steps[:-1] / steps[1:])
    return errs, orders


# Pinned (x, t, nu) sample points: generic directions, on-axis points, both
# sides of the series switch and a range of similarity variables.
PINNED_POINTS: tuple[tuple[tuple[float, float, float], float, float], ...] = (
    ((1.0, 0.0, 0.0), 0.5, 0.1),
    ((1.0, 0.5, -0.3), 0.4, 0.2),
    ((0.3, -0.2, 0.1), 0.5, 0.1),
    ((0.05, 0.02, -0.01), 0.5, 0.1),
    ((0.0, 0.0, 0.7), 0.3, 0.5),
    ((0.0, 1.2, 0.0), 1.0, 0.1),
    ((-0.8, 0.6, 0.4), 0.2, 0.3),
    ((0.2, 0.2, 0.2), 0.1, 1.0),
    ((1.5, -1.0, 0.5), 0.8, 0.25),
    ((2.0, 0.3, -0.4), 1.0, 0.5),
    ((-0.4, -0.9, 1.1), 0.6, 0.15),
    ((0.6, 0.0, 0.8), 0.05, 1.0),
    ((0.1, 0.4, -0.2), 0.25, 0.2),
    ((-1.0, 1.0, -1.0), 0.5, 0.4),
    ((0.25, -0.5, 0.75), 0.15, 0.6),
    ((0.9, 0.1, 0.0), 0.7, 0.05),
    ((-0.3, 0.7, -0.6), 0.35, 0.35),
    ((1.2, 0.8, 0.2), 2.0, 0.1),
    ((0.02, -0.03, 0.04), 0.2, 0.2),
    ((-2.0, -0.5, 0.3), 1.5, 0.3),
    ((0.45, 0.45, -0.45), 0.45, 0.45),
    ((0.7, -0.1, 0.3), 0.1, 0.8),
)
