"""
Closed-form kernels of the time-dependent Stokes problem in free space.

All physical-space kernels take positions ``x`` of shape ``(..., 3)`` and
broadcast over leading axes; tensors come back with shape ``(..., 3, 3)``.
Throughout, ``sigma = sqrt(4 nu t)`` is the diffusion length and
``s = |x| / sigma`` the similarity variable.

The Oseen-type tensor is split as

    G_jm = delta_jm g + J_jm / (2 pi^{3/2}),

where ``J`` is the Hessian of the error-function potential
``b(|x| / sigma) / |x|`` *without* the ``1 / (2 pi^{3/2})`` factor.  Only
:func:`oseen_G` (and :func:`pressure_kernel_grad`) apply that factor.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .errors import DomainError, SingularEvaluationError

SQRT_PI = math.sqrt(math.pi)
B_INFINITY = 0.5 * SQRT_PI
OSEEN_PREFACTOR = 1.0 / (2.0 * math.pi**1.5)

# Below this value of s the closed form of the Hessian loses ~eps / s^3 to
# cancellation; the Taylor series of b(s)/s is used instead.
SERIES_SWITCH = 0.25
_SERIES_TERMS = 18


def _positions(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 3:
        raise DomainError(f"positions must have trailing dimension 3, got shape {x.shape}")
    return x, np.sqrt(np.sum(x**2, axis=-1))


def _check_nu(nu) -> None:
    if not np.all(np.asarray(nu) > 0):
        raise DomainError("viscosity nu must be positive")


def _check_regular(r: np.ndarray, t: np.ndarray, name: str) -> None:
    if np.any(t == 0):
        raise DomainError(f"{name} requires t != 0 (the t -> 0+ limit is a distribution)")
    if np.any((r == 0) & (t > 0)):
        raise SingularEvaluationError(f"{name} is singular at x = 0")


def heat_kernel(x, t, nu) -> np.ndarray:
    """
    Gaussian heat kernel ``exp(-|x|^2 / (4 nu t)) / (4 pi nu t)^{3/2}``.

    Zero for ``t < 0``; at ``t = 0`` the kernel is the delta function, so the
    value is 0 away from the origin and the origin raises
    :class:`SingularEvaluationError`.
    """
    _check_nu(nu)
    x, r = _positions(x)
    r, t = np.broadcast_arrays(r, np.asarray(t, dtype=np.float64))
    if np.any((t == 0) & (r == 0)):
        raise SingularEvaluationError("heat kernel at x = 0, t = 0 is the delta function")
    out = np.zeros(r.shape)
    pos = t > 0
    four_nu_t = 4.0 * nu * t[pos]
    out[pos] = np.exp(-r[pos] ** 2 / four_nu_t) / (math.pi * four_nu_t) ** 1.5
    return out[()] if out.ndim == 0 else out


def b_integral(s) -> np.ndarray:
    """``b(s) = int_0^s exp(-u^2) du = (sqrt(pi)/2) erf(s)`` for ``s >= 0``."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise DomainError("b_integral is defined for s >= 0")
    out = B_INFINITY * erf(s)
    return out[()] if out.ndim == 0 else out


def erf_potential(x, t, nu) -> np.ndarray:
    """``b(|x| / sqrt(4 nu t)) / |x|``; its Hessian is :func:`oseen_J`."""
    _check_nu(nu)
    x, r = _positions(x)
    r, t = np.broadcast_arrays(r, np.asarray(t, dtype=np.float64))
    if np.any(t < 0):
        raise DomainError("erf_potential requires t > 0")
    _check_regular(r, t, "erf_potential")
    sigma = np.sqrt(4.0 * nu * t)
    out = b_integral(r / sigma) / r
    return out


def _series_derivatives(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of ``h(u) = b(sqrt u) / sqrt u``."""
    d1 = np.zeros_like(u)
    d2 = np.zeros_like(u)
    # h(u) = sum (-1)^n u^n / (n! (2n + 1))
    for n in range(_SERIES_TERMS, 0, -1):
        c1 = (-1) ** n / (math.factorial(n - 1) * (2 * n + 1))
        d1 = d1 + c1 * u ** (n - 1)
        if n >= 2:
            c2 = (-1) ** n / (math.factorial(n - 2) * (2 * n + 1))
            d2 = d2 + c2 * u ** (n - 2)
    return d1, d2


def _hessian(x: np.ndarray, r: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    xx = x[..., :, None] * x[..., None, :]
    s = r / sigma
    out = np.empty(x.shape[:-1] + (3, 3))

    far = s >= SERIES_SWITCH
    if np.any(far):
        rf, sf, xf = r[far][:, None, None], sigma[far][:, None, None], xx[far]
        gauss = np.exp(-(rf / sf) ** 2)
        b = b_integral(rf / sf)
        out[far] = gauss * (
            eye / (rf**2 * sf) - 3.0 * xf / (rf**4 * sf) - 2.0 * xf / (rf**2 * sf**3)
        ) + b * (3.0 * xf / rf**5 - eye / rf**3)

    near = ~far
    if np.any(near):
        sn = sigma[near][:, None, None]
        d1, d2 = _series_derivatives(s[near] ** 2)
        out[near] = (2.0 * d1[:, None, None] * eye / sn**3
                     + 4.0 * d2[:, None, None] * xx[near] / sn**5)
    return out


def oseen_J(x, t, nu) -> np.ndarray:
    """
    Hessian ``d_j d_m ( b(|x| / sqrt(4 nu t)) / |x| )``.

    Evaluated by the explicit differentiated formula for ``s >= SERIES_SWITCH``
    and by the Taylor series of ``b(s)/s`` below it.  No ``1/(2 pi^{3/2})``
    factor is applied here.
    """
    _check_nu(nu)
    x, r = _positions(x)
    r, t = np.broadcast_arrays(r, np.asarray(t, dtype=np.float64))
    x = np.broadcast_to(x, r.shape + (3,))
    if np.any(t < 0):
        raise DomainError("oseen_J requires t > 0")
    _check_regular(r, t, "oseen_J")
    sigma = np.sqrt(4.0 * nu * t)
    return _hessian(x, r, sigma)


def oseen_G(x, t, nu) -> np.ndarray:
    """
    Oseen-type tensor ``delta_jm g + J_jm / (2 pi^{3/2})``; zero for ``t < 0``.

    Raises :class:`SingularEvaluationError` at ``x = 0`` for ``t > 0``.
    """
    _check_nu(nu)
    x, r = _positions(x)
    r, t = np.broadcast_arrays(r, np.asarray(t, dtype=np.float64))
    x = np.broadcast_to(x, r.shape + (3,))
    _check_regular(r, t, "oseen_G")
    out = np.zeros(r.shape + (3, 3))
    pos = t > 0
    if np.any(pos):
        sigma = np.sqrt(4.0 * nu * t[pos])
        g = np.exp(-(r[pos] / sigma) ** 2) / (SQRT_PI * sigma) ** 3
        out[pos] = g[:, None, None] * np.eye(3) + OSEEN_PREFACTOR * _hessian(x[pos], r[pos], sigma)
    return out


def fourier_H(xi, t, nu) -> np.ndarray:
    """``(2 pi)^{-3} (delta_jm - xi_j xi_m / |xi|^2) exp(-nu |xi|^2 t)``; zero for ``t < 0``."""
    _check_nu(nu)
    xi, k = _positions(xi)
    k, t = np.broadcast_arrays(k, np.asarray(t, dtype=np.float64))
    xi = np.broadcast_to(xi, k.shape + (3,))
    if np.any(k == 0):
        raise DomainError("fourier_H: projector undefined at xi = 0")
    proj = np.eye(3) - xi[..., :, None] * xi[..., None, :] / (k**2)[..., None, None]
    decay = np.where(t >= 0, np.exp(-nu * k**2 * np.maximum(t, 0.0)), 0.0)
    return (2.0 * math.pi) ** -3 * proj * decay[..., None, None]


def pressure_kernel_grad(x, t, nu) -> np.ndarray:
    """Gradient of ``erf_potential / (2 pi^{3/2})`` with respect to ``x``; shape ``(..., 3)``."""
    _check_nu(nu)
    x, r = _positions(x)
    r, t = np.broadcast_arrays(r, np.asarray(t, dtype=np.float64))
    x = np.broadcast_to(x, r.shape + (3,))
    if np.any(t < 0):
        raise DomainError("pressure_kernel_grad requires t > 0")
    _check_regular(r, t, "pressure_kernel_grad")
    sigma = np.sqrt(4.0 * nu * t)
    s = r / sigma
    radial = np.empty(r.shape)  # phi'(r) / r
    far = s >= SERIES_SWITCH
    rf, sf = r[far], sigma[far]
    radial[far] = (np.exp(-(rf / sf) ** 2) / (sf * rf) - b_integral(rf / sf) / rf**2) / rf
    d1, _ = _series_derivatives(s[~far] ** 2)
    radial[~far] = 2.0 * d1 / sigma[~far] ** 3
    return OSEEN_PREFACTOR * radial[..., None] * x


__all__ = [
    "heat_kernel",
    "b_integral",
    "erf_potential",
    "oseen_J",
    "oseen_G",
    "fourier_H",
    "pressure_kernel_grad",
    "SERIES_SWITCH",
    "OSEEN_PREFACTOR",
]
