"""
Vector fields on a truncated periodic box and their spectral operators.

The free-space problem is computed on the cube [-L, L]^3 with N points per
axis.  Grid point ``i`` along an axis sits at ``x_i = -L + i * dx`` with
``dx = 2L / N``, so the box center (index ``N // 2``) is the origin.

Spectral coefficients are plain Fourier-series coefficients,

    v(x) = sum_k  c_k exp(i xi_k . (x + L)),      xi_k = (pi / L) k,

with ``k`` the signed integer frequency.  With this normalization the
convolution of a field with the Oseen tensor over a time lag ``tau`` is
exactly the coefficient-wise product with ``P(xi) exp(-nu |xi|^2 tau)``,
where ``P = I - xi xi^T / |xi|^2`` and ``P(0) = I``.  The phase offset from
``x + L`` is irrelevant to every multiplier used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import DomainError, InvalidFieldError, SymmetryError

_AXES = (-3, -2, -1)
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """
    Truncated periodic box [-L, L]^3 with N points per axis.

    Parameters
    ----------
    half_width : float
        Box half width L.
    points : int
        Points per axis N (even, at least 4).
    dealias_fraction : float
        Radius of the spherical dealiasing mask as a fraction of the Nyquist
        index ``N / 2``.  ``2/3`` is the classical rule, ``1`` disables it.
    """

    half_width: float
    points: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        if int(self.points) != self.points or self.points < 4 or self.points % 2:
            raise DomainError(f"points must be an even integer >= 4, got {self.points}")
        if not 0 < self.dealias_fraction <= 1:
            raise DomainError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def N(self) -> int:
        return self.points

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.points,) * 3

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** 3

    @property
    def dxi(self) -> float:
        """Spacing of the wavevector lattice, ``pi / L``."""
        return np.pi / self.half_width

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.points)

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical coordinates, shape ``(3, N, N, N)``."""
        return np.array(np.meshgrid(*(self.axis_coords,) * 3, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """``|x|`` measured from the box center."""
        return np.sqrt(np.sum(self.coords**2, axis=0))

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Signed integer frequency per index along one axis."""
        return np.fft.fftfreq(self.points, d=1.0 / self.points)

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavevectors, shape ``(3, N, N, N)``, Nyquist included."""
        k1 = self.dxi * self.frequencies
        return np.array(np.meshgrid(k1, k1, k1, indexing="ij"))

    @cached_property
    def xi_derivative(self) -> np.ndarray:
        """Wavevectors used for odd derivatives: the Nyquist component is zeroed."""
        k1 = self.dxi * self.frequencies
        k1[self.points // 2] = 0.0
        return np.array(np.meshgrid(k1, k1, k1, indexing="ij"))

    @cached_property
    def xi_squared(self) -> np.ndarray:
        return np.sum(self.xi**2, axis=0)

    @cached_property
    def xi_squared_safe(self) -> np.ndarray:
        """``|xi|^2`` with the zero mode replaced by 1 (for divisions)."""
        k2 = self.xi_squared.copy()
        k2[0, 0, 0] = 1.0
        return k2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        if self.dealias_fraction >= 1.0:
            return np.ones(self.shape, dtype=bool)
        kk = np.array(np.meshgrid(*(self.frequencies,) * 3, indexing="ij"))
        kmag = np.sqrt(np.sum(kk**2, axis=0))
        return kmag < self.dealias_fraction * (self.points // 2)


def _check_shape(grid: GridSpec, data: np.ndarray, ncomp: int | None) -> None:
    expected = grid.shape if ncomp is None else (ncomp, *grid.shape)
    if data.shape != expected:
        raise InvalidFieldError(f"expected array of shape {expected}, got {data.shape}")


@dataclass
class VectorField:
    """Three real components sampled on ``grid``; ``data`` has shape ``(3, N, N, N)``."""

    grid: GridSpec
    data: np.ndarray
    t: float | None = None

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        _check_shape(self.grid, self.data, 3)
        if not np.all(np.isfinite(self.data)):
            raise InvalidFieldError("vector field contains non-finite samples")

    @classmethod
    def zeros(cls, grid: GridSpec, t: float | None = None) -> "VectorField":
        return cls(grid, np.zeros((3, *grid.shape)), t)

    @classmethod
    def from_function(cls, grid: GridSpec, func, t: float | None = None) -> "VectorField":
        """Sample ``func(x1, x2, x3) -> (v1, v2, v3)`` on the grid."""
        x1, x2, x3 = grid.coords
        comps = func(x1, x2, x3)
        return cls(grid, np.array([np.broadcast_to(c, grid.shape) for c in comps]), t)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.data + other.data, self.t)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.data - other.data, self.t)

    def __mul__(self, scale: float) -> "VectorField":
        return VectorField(self.grid, self.data * scale, self.t)

    __rmul__ = __mul__


@dataclass
class SpectralField:
    """Fourier coefficients of a real vector field, ``data`` of shape ``(3, N, N, N)``."""

    grid: GridSpec
    data: np.ndarray
    t: float | None = None

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.complex128)
        _check_shape(self.grid, self.data, 3)

    @classmethod
    def zeros(cls, grid: GridSpec, t: float | None = None) -> "SpectralField":
        return cls(grid, np.zeros((3, *grid.shape), dtype=np.complex128), t)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.data + other.data, self.t)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.data - other.data, self.t)

    def __mul__(self, scale) -> "SpectralField":
        return SpectralField(self.grid, self.data * scale, self.t)

    __rmul__ = __mul__


@dataclass
class ScalarField:
    """One real sample per grid point (pressure)."""

    grid: GridSpec
    samples: np.ndarray
    t: float | None = None

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        _check_shape(self.grid, self.samples, None)
        if not np.all(np.isfinite(self.samples)):
            raise InvalidFieldError("scalar field contains non-finite samples")


# ---------------------------------------------------------------------------
# raw array kernels (no validation); used on the solver hot path


def fft3(a: np.ndarray) -> np.ndarray:
    return scipy.fft.fftn(a, axes=_AXES, norm="forward", workers=-1)


def ifft3_real(a: np.ndarray) -> np.ndarray:
    return scipy.fft.ifftn(a, axes=_AXES, norm="forward", workers=-1).real


def conjugate_reflection(a: np.ndarray) -> np.ndarray:
    """Return ``conj(a[-k])`` for coefficient arrays indexed by frequency."""
    flipped = np.flip(a, axis=_AXES)
    return np.conj(np.roll(flipped, 1, axis=_AXES))


def symmetry_defect(a: np.ndarray) -> float:
    """Largest ``|a(k) - conj(a(-k))|`` relative to ``max |a|``."""
    scale = np.max(np.abs(a))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(a - conjugate_reflection(a))) / scale)


def project_array(grid: GridSpec, ah: np.ndarray) -> np.ndarray:
    xi = grid.xi
    div = np.sum(xi * ah, axis=0) / grid.xi_squared_safe
    return ah - xi * div


def gradient_array(grid: GridSpec, ah: np.ndarray) -> np.ndarray:
    """Spectral ``grad[j, m] = d_j a_m`` in physical space, shape ``(3, 3, N, N, N)``."""
    ik = 1j * grid.xi_derivative
    return ifft3_real(ik[:, None] * ah[None, :])


def advection_array(grid: GridSpec, u: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Dealiased spectral coefficients of ``(u . grad) u`` from physical ``u`` and ``grad``."""
    prod = np.einsum("j...,jm...->m...", u, grad)
    return fft3(prod) * grid.dealias_mask


def value_plus_gradient(u: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Pointwise ``|u| + |grad u|_F`` (Euclidean value, Frobenius gradient)."""
    return np.sqrt(np.sum(u**2, axis=0)) + np.sqrt(np.sum(grad**2, axis=(0, 1)))


def divergence_ratio(grid: GridSpec, ah: np.ndarray) -> float:
    """``max |xi . a(xi)|`` over ``max |xi| |a(xi)|``; zero for a null field."""
    num = np.max(np.abs(np.sum(grid.xi * ah, axis=0)))
    den = np.max(np.sqrt(grid.xi_squared) * np.sqrt(np.sum(np.abs(ah) ** 2, axis=0)))
    if den == 0:
        return 0.0
    return float(num / den)


# ---------------------------------------------------------------------------
# public operations


def forward_transform(v: VectorField) -> SpectralField:
    if not np.all(np.isfinite(v.data)):
        raise InvalidFieldError("cannot transform a field with non-finite samples")
    return SpectralField(v.grid, fft3(v.data), v.t)


def inverse_transform(vh: SpectralField, tol: float = SYMMETRY_TOL) -> VectorField:
    """Inverse transform; raises :class:`SymmetryError` when the result would be complex."""
    defect = symmetry_defect(vh.data)
    if defect > tol:
        raise SymmetryError(f"coefficients violate conjugate symmetry (defect {defect:.3e})")
    return VectorField(vh.grid, ifft3_real(vh.data), vh.t)


def leray_project(vh: SpectralField) -> SpectralField:
    """Apply ``I - xi xi^T / |xi|^2`` mode by mode; the zero mode passes through."""
    return SpectralField(vh.grid, project_array(vh.grid, vh.data), vh.t)


def derivative(vh: SpectralField, axis: int) -> SpectralField:
    """Spectral derivative along ``axis`` in 1..3."""
    if axis not in (1, 2, 3):
        raise DomainError(f"axis must be 1, 2 or 3, got {axis}")
    return SpectralField(vh.grid, 1j * vh.grid.xi_derivative[axis - 1] * vh.data, vh.t)


def divergence(vh: SpectralField) -> np.ndarray:
    """Spectral coefficients of ``div v`` (scalar array)."""
    return np.sum(1j * vh.grid.xi_derivative * vh.data, axis=0)


def nonlinear_term(v: VectorField) -> VectorField:
    """
    Convective term ``(v . grad) v`` evaluated pseudo-spectrally.

    Derivatives are spectral, the product is formed in physical space and the
    dealiasing mask is applied to the product before returning.
    """
    grid = v.grid
    grad = gradient_array(grid, fft3(v.data))
    return VectorField(grid, ifft3_real(advection_array(grid, v.data, grad)), v.t)


def heat_factor(grid: GridSpec, dt: float, nu: float) -> np.ndarray:
    return np.exp(-nu * grid.xi_squared * dt)


def heat_propagate(vh: SpectralField, dt: float, nu: float) -> SpectralField:
    """Multiply every coefficient by ``exp(-nu |xi|^2 dt)``."""
    if dt < 0:
        raise DomainError(f"dt must be non-negative, got {dt}")
    if nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    t = None if vh.t is None else vh.t + dt
    return SpectralField(vh.grid, vh.data * heat_factor(vh.grid, dt, nu), t)


__all__ = [
    "GridSpec",
    "VectorField",
    "SpectralField",
    "ScalarField",
    "forward_transform",
    "inverse_transform",
    "leray_project",
    "derivative",
    "divergence",
    "nonlinear_term",
    "heat_propagate",
    "divergence_ratio",
]
