"""
Numerical scans of the weighted kernel estimates.

``kernel_decay_scan`` measures how ``sup_x`` of value plus gradient of
``int |G(x - y, t)| (1 + |y|)^-1 dy`` scales with ``t``.  ``|G|`` is the
entrywise absolute tensor; the final number is its largest row sum, an upper
bound for any contraction against a vector.

``j12_bound_scan`` evaluates the far-field piece of
``J_1(q) = int b(|z|) |z|^-3 (1 + |x + z|)^-1 dz`` (``q = |x|``) split at
``|z| = 1`` and compares it with ``ln(3 + q) / (2 + q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..errors import DomainError, QuadratureError
from ..kernels import B_INFINITY, b_integral

_SERIES_TERMS = 34
_SERIES_LIMIT = 1.0


def _h_derivatives(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """First three derivatives of ``h(u) = b(sqrt u)/sqrt u`` at ``u = s^2``."""
    s = np.asarray(s, dtype=np.float64)
    d = [np.empty_like(s) for _ in range(3)]
    near = s < _SERIES_LIMIT
    if np.any(near):
        u = s[near] ** 2
        for k in range(1, 4):
            acc = np.zeros_like(u)
            for n in range(_SERIES_TERMS, k - 1, -1):
                c = (-1) ** n / (math.factorial(n - k) * (2 * n + 1))
                acc = acc * u + c
            d[k - 1][near] = acc
    far = ~near
    if np.any(far):
        x = s[far]
        e = np.exp(-x * x)
        b = b_integral(x)
        d[0][far] = e / (2 * x**2) - b / (2 * x**3)
        d[1][far] = -e * (4 * x**3 + 6 * x) / (8 * x**5) + 3 * b / (4 * x**5)
        d[2][far] = e * (8 * x**5 + 20 * x**3 + 30 * x) / (16 * x**7) - 15 * b / (8 * x**7)
    return d[0], d[1], d[2]


def kernel_and_gradient(z: np.ndarray, t: float, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """
    ``G(z, t)`` (shape ``(..., 3, 3)``) and ``d_i G_jm`` (shape ``(..., 3, 3, 3)``).

    Both are smooth at ``z = 0`` for ``t > 0``; the small-radius branch uses
    the power series of the potential.
    """
    z = np.asarray(z, dtype=np.float64)
    sigma = math.sqrt(4 * nu * t)
    r = np.sqrt(np.sum(z**2, axis=-1))
    h1, h2, h3 = _h_derivatives(r / sigma)
    eye = np.eye(3)
    pref = 1.0 / (2 * math.pi**1.5)
    g = np.exp(-(r / sigma) ** 2) / (math.sqrt(math.pi) * sigma) ** 3
    zz = z[..., :, None] * z[..., None, :]
    G = g[..., None, None] * eye + pref * (2 * h1[..., None, None] * eye / sigma**3
                                           + 4 * h2[..., None, None] * zz / sigma**5)
    sym = (np.einsum("...i,jm->...ijm", z, eye) + np.einsum("...j,im->...ijm", z, eye)
           + np.einsum("...m,ij->...ijm", z, eye))
    zzz = np.einsum("...i,...j,...m->...ijm", z, z, z)
    dG = (pref * (4 * h2[..., None, None, None] * sym / sigma**5
                  + 8 * h3[..., None, None, None] * zzz / sigma**7)
          + np.einsum("...i,jm->...ijm", -2 * z / sigma**2 * g[..., None], eye))
    return G, dG


@dataclass(frozen=True)
class SphericalRule:
    """Nodes and weights of a rule for ``int_{R^3} F(z) dz``."""

    points: np.ndarray
    weights: np.ndarray
    r_max: float


def spherical_rule(scale: float, r_max: float = 64.0, panel_nodes: int = 16,
                   polar_nodes: int = 32, azimuth_nodes: int = 32,
                   tail_nodes: int = 32) -> SphericalRule:
    """
    Composite rule adapted to structure at ``scale`` and algebraic tails.

    The radius uses Gauss-Legendre panels on geometrically growing intervals
    ``[0, scale/4], [scale/4, scale/2], ...`` up to ``r_max`` plus the map
    ``r = r_max / v`` for ``r > r_max``; polar cosine is Gauss-Legendre and
    azimuth is trapezoidal.
    """
    gx, gw = np.polynomial.legendre.leggauss(panel_nodes)
    edges = [0.0, scale / 4]
    while edges[-1] < r_max:
        edges.append(min(2 * edges[-1], r_max))
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rs.append(0.5 * (b - a) * gx + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * gw)
    tx, tw = np.polynomial.legendre.leggauss(tail_nodes)
    v = 0.5 * tx + 0.5
    rs.append(r_max / v)
    ws.append(0.5 * tw * r_max / v**2)
    r = np.concatenate(rs)
    wr = np.concatenate(ws) * r**2

    u, wu = np.polynomial.legendre.leggauss(polar_nodes)
    phi = 2 * math.pi * np.arange(azimuth_nodes) / azimuth_nodes
    st = np.sqrt(1 - u**2)
    dirs = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                     np.outer(u, np.ones_like(phi))], axis=-1).reshape(-1, 3)
    wd = np.repeat(wu, azimuth_nodes) * (2 * math.pi / azimuth_nodes)
    pts = r[:, None, None] * dirs[None, :, :]
    w = wr[:, None] * wd[None, :]
    return SphericalRule(pts.reshape(-1, 3), w.reshape(-1), r_max)


def gradient_heat_integral(t: float, nu: float, rule: SphericalRule | None = None) -> float:
    """``int |grad g(x, t)| dx`` by 3D quadrature (exact value ``2 / sqrt(pi nu t)``)."""
    sigma = math.sqrt(4 * nu * t)
    rule = rule or spherical_rule(sigma)
    r = np.linalg.norm(rule.points, axis=-1)
    g = np.exp(-(r / sigma) ** 2) / (math.sqrt(math.pi) * sigma) ** 3
    return float(np.sum(rule.weights * 2 * r / sigma**2 * g))


def weighted_kernel_norms(x, t: float, nu: float, rule: SphericalRule | None = None,
                          chunk: int = 20000) -> tuple[float, float]:
    """
    Row-sum sup of ``int |G(z)| w(x - z) dz`` and of ``int |grad G(z)| w(x - z) dz``.

    ``w(y) = (1 + |y|)^-1`` and ``|grad G_jm|`` is the Euclidean norm over the
    derivative index.
    """
    sigma = math.sqrt(4 * nu * t)
    rule = rule or spherical_rule(sigma)
    x = np.asarray(x, dtype=np.float64)
    val = np.zeros((3, 3))
    grad = np.zeros((3, 3))
    for k in range(0, rule.weights.size, chunk):
        z = rule.points[k:k + chunk]
        w = rule.weights[k:k + chunk] / (1.0 + np.linalg.norm(x - z, axis=-1))
        G, dG = kernel_and_gradient(z, t, nu)
        val += np.einsum("n,njm->jm", w, np.abs(G))
        grad += np.einsum("n,njm->jm", w, np.sqrt(np.sum(dG**2, axis=1)))
    return float(val.sum(axis=1).max()), float(grad.sum(axis=1).max())


@dataclass
class DecayScan:
    times: np.ndarray
    M: np.ndarray
    value_part: np.ndarray
    gradient_part: np.ndarray
    slope: float
    constant: float
    gradient_slope: float


DEFAULT_CANDIDATES = ((0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (1.0, 0.0, 0.0), (0.5, 0.5, 0.5))


def kernel_decay_scan(t_list, nu: float = 1.0, candidates=DEFAULT_CANDIDATES,
                      truncation_tol: float = 1e-3) -> DecayScan:
    """
    Scan ``M(t) = sup_x`` of the weighted value and gradient integrals over ``t``.

    Fits ``log M = log c + slope * log t``.  The gradient part alone is fitted
    too, since that is the term singular as ``t -> 0``.  The far-field tail
    contribution is checked by doubling ``r_max``.

    Raises
    ------
    QuadratureError
        If doubling the radial cutoff changes ``M`` by more than ``truncation_tol``.
    """
    t_list = np.asarray(sorted(t_list), dtype=np.float64)
    if np.any(t_list <= 0):
        raise DomainError("kernel_decay_scan requires t > 0")
    if t_list[-1] / t_list[0] < 10 * (1 - 1e-12):
        raise DomainError("kernel_decay_scan requires t_list to span at least one decade")
    vals, grads = [], []
    for t in t_list:
        sigma = math.sqrt(4 * nu * t)
        rule = spherical_rule(sigma)
        best = (0.0, 0.0)
        for x in candidates:
            v, g = weighted_kernel_norms(x, t, nu, rule)
            if v + g > sum(best):
                best = (v, g)
        vals.append(best[0])
        grads.append(best[1])
    vals, grads = np.array(vals), np.array(grads)
    M = vals + grads

    # truncation check at the most diffuse time
    t = t_list[-1]
    sigma = math.sqrt(4 * nu * t)
    wide = spherical_rule(sigma, r_max=2 * spherical_rule(sigma).r_max)
    v2, g2 = weighted_kernel_norms(candidates[0], t, nu, wide)
    v1, g1 = weighted_kernel_norms(candidates[0], t, nu, spherical_rule(sigma))
    change = abs((v2 + g2) - (v1 + g1)) / (v1 + g1)
    if change > truncation_tol:
        raise QuadratureError(f"decay scan truncation changes M by {change:.2e}; widen the box")

    lt = np.log(t_list)
    slope, logc = np.polyfit(lt, np.log(M), 1)
    gslope, _ = np.polyfit(lt, np.log(grads), 1)
    return DecayScan(t_list, M, vals, grads, float(slope), float(math.exp(logc)), float(gslope))


# ---------------------------------------------------------------------------
# J_12 bound


def _shell_average(r: float, q: float) -> float:
    """``int_{-1}^{1} du / (1 + sqrt(r^2 + q^2 - 2 r q u))`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda u: 1.0 / (1.0 + math.sqrt(max(r * r + q * q - 2 * r * q * u, 0.0))),
                            -1.0, 1.0, points=[1.0] if abs(r - q) < 1e-12 else None,
                            epsabs=1e-14, epsrel=1e-12)
    return val


def shell_average_exact(r: float, q: float) -> float:
    """Closed form of :func:`_shell_average` via ``rho = |x + z|``."""
    if q == 0 or r == 0:
        return 2.0 / (1.0 + r + q)

    def F(rho):
        return rho - math.log1p(rho)

    return (F(r + q) - F(abs(r - q))) / (r * q)


def _radial_integral(func, a: float, b: float, q: float) -> float:
    """``int_a^b func(r) dr`` split at ``r = q``; long ranges use ``r = lo / w``."""
    edges = [a] + [p for p in (q, 2 * q + 2) if a < p < b] + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > 10 * max(lo, 1.0):
            v, _ = integrate.quad(lambda w: func(lo / w) * lo / w**2, lo / hi, 1.0,
                                  limit=200, epsabs=1e-14, epsrel=1e-11)
        else:
            v, _ = integrate.quad(func, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-11)
        total += v
    return total


def j12(q: float, r_max: float = 1e12, tail_tol: float = 1e-8) -> float:
    """
    ``2 pi int_1^R b(r) / r int_{-1}^{1} du / (1 + |x + z|) dr`` with ``|x| = q``.

    For ``r >= 2q`` the shell average is below ``4 / r``, so the neglected
    tail is at most ``8 pi b_inf / R``; it must be below ``tail_tol`` relative.
    """
    if q < 0:
        raise DomainError("q must be nonnegative")
    if r_max <= 2 * q + 2:
        raise QuadratureError("r_max must exceed 2 q + 2")
    val = 2 * math.pi * _radial_integral(lambda r: b_integral(r) / r * _shell_average(r, q), 1.0, r_max, q)
    tail = 8 * math.pi * B_INFINITY / r_max
    if tail > tail_tol * val:
        raise QuadratureError(f"J12 tail bound {tail:.2e} exceeds {tail_tol:g} relative; widen r_max")
    return val


def j11(q: float) -> float:
    """Near-field piece ``2 pi int_0^1 b(r)/r int du / (1 + |x + z|) dr``."""
    return 2 * math.pi * _radial_integral(lambda r: (b_integral(r) / r if r > 0 else 1.0)
                                          * _shell_average(r, q), 0.0, 1.0, q)


@dataclass
class J12Scan:
    q: np.ndarray
    j12: np.ndarray
    ratio: np.ndarray
    j11: np.ndarray
    j11_exponent: float

    @property
    def spread(self) -> float:
        return float(self.ratio.max() / self.ratio.min())


def j12_bound_scan(q_list) -> J12Scan:
    """
    Tabulate ``J12(q) (2 + q) / ln(3 + q)`` and the decay of ``J11``.

    ``j11_exponent`` is the fitted ``a`` in ``J11 ~ (1 + q)^-a``.
    """
    q = np.asarray(q_list, dtype=np.float64)
    if np.any(q < 1) or np.any(q > 100):
        raise DomainError("q_list must lie in [1, 100]")
    v12 = np.array([j12(float(x)) for x in q])
    v11 = np.array([j11(float(x)) for x in q])
    ratio = v12 * (2 + q) / np.log(3 + q)
    big = q >= 10
    sel = big if big.sum() >= 2 else np.ones_like(q, dtype=bool)
    a = -np.polyfit(np.log1p(q[sel]), np.log(v11[sel]), 1)[0]
    return J12Scan(q, v12, ratio, v11, float(a))
