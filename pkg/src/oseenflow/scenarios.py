"""
Named analytic families of initial data and forcing.

Every family returns divergence-free, rapidly decaying fields centered in
the box, so the periodic truncation of free space is harmless when ``L`` is
a few widths.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import CatalogError, DomainError
from .fields import GridSpec, VectorField
from .oracles.manufactured import ManufacturedCase, manufactured_case
from .solver import Scenario


def _unit(axis) -> np.ndarray:
    a = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(a)
    if a.shape != (3,) or n == 0:
        raise DomainError("axis must be a nonzero 3-vector")
    return a / n


def gaussian_vortex_field(grid: GridSpec, amplitude: float = 0.1, sigma: float = 0.6,
                          axis=(1.0, 0.5, 0.3), center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``amplitude * curl(psi a)`` with ``psi = exp(-|x - c|^2 / (2 sigma^2))``."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    a = _unit(axis)
    x = grid.coords - np.asarray(center, dtype=np.float64)[:, None, None, None]
    psi = np.exp(-np.sum(x**2, axis=0) / (2 * sigma**2))
    grad = -x / sigma**2 * psi
    # curl(psi a) = grad(psi) x a
    return amplitude * np.cross(grad, a[:, None, None, None], axis=0)


def zero_field(grid: GridSpec) -> np.ndarray:
    return np.zeros((3, *grid.shape))


INITIAL_FAMILIES = ("zero", "gaussian_vortex", "taylor_green_gaussian", "raw")
FORCING_FAMILIES = ("zero", "gaussian_vortex", "manufactured")


def initial_field(grid: GridSpec, family: str, **params) -> VectorField:
    """Initial velocity of a named family."""
    if family == "zero":
        data = zero_field(grid)
    elif family == "gaussian_vortex":
        data = gaussian_vortex_field(grid, **params)
    elif family == "taylor_green_gaussian":
        params = {"nu": 1.0, "modulation": 0.0, **params}
        data = manufactured_case("taylor_green_gaussian", **params).velocity(grid, 0.0).data
    elif family == "raw":
        data = np.load(params["path"])
        if data.shape != (3, *grid.shape):
            raise DomainError(f"raw field has shape {data.shape}, expected {(3, *grid.shape)}")
    else:
        raise CatalogError(f"unknown initial family {family!r}; available: {', '.join(INITIAL_FAMILIES)}")
    return VectorField(grid, data, 0.0)


def forcing_function(grid: GridSpec, family: str, nu: float | None = None,
                     **params) -> Callable[[float], np.ndarray] | None:
    """
    ``t -> (3, N, N, N)`` forcing samples of a named family, ``None`` for zero.

    ``gaussian_vortex`` forcing is the vortex field times
    ``1 + modulation * sin(omega t)``.
    """
    if family == "zero":
        return None
    if family == "gaussian_vortex":
        omega = params.pop("omega", 0.0)
        modulation = params.pop("modulation", 0.0)
        shape = gaussian_vortex_field(grid, **params)
        return lambda t: (1.0 + modulation * np.sin(omega * t)) * shape
    if family == "manufactured":
        name = params.pop("case", "taylor_green_gaussian")
        return manufactured_case(name, nu=nu, **params).forcing_function(grid)
    raise CatalogError(f"unknown forcing family {family!r}; available: {', '.join(FORCING_FAMILIES)}")


def manufactured_scenario(case: ManufacturedCase, grid: GridSpec, T: float) -> Scenario:
    """Scenario whose exact solution is ``case``: its velocity at 0 and its forcing."""
    return Scenario(case.nu, grid, case.velocity(grid, 0.0), T, case.forcing_function(grid),
                    name=f"manufactured:{case.name}")


__all__ = [
    "INITIAL_FAMILIES",
    "FORCING_FAMILIES",
    "gaussian_vortex_field",
    "initial_field",
    "forcing_function",
    "manufactured_scenario",
]
