"""
Oracle suite: every closed-form kernel and estimate against an independent
numerical evaluation.

Each check returns a :class:`Check` row.  Checks are grouped in suites
(``kernels``, ``identities``, ``estimates``) so that ``verify --only`` can
select them.  The kernels used are looked up through a :class:`KernelSet`,
which lets tests substitute a deliberately wrong copy as a negative control.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels as _k
from .oracles import estimates, quadrature

#: Fitted-slope window for the weighted kernel estimate.
DECAY_SLOPE_RANGE = (-0.55, -0.45)


@dataclass(frozen=True)
class KernelSet:
    heat_kernel: Callable = _k.heat_kernel
    erf_potential: Callable = _k.erf_potential
    oseen_J: Callable = _k.oseen_J
    oseen_G: Callable = _k.oseen_G
    pressure_kernel_grad: Callable = _k.pressure_kernel_grad


DEFAULT_KERNELS = KernelSet()


@dataclass
class Check:
    """
    One oracle comparison.

    ``status`` is ``"pass"``, ``"fail"`` or ``"xfail"``; the last marks a
    check whose stated target is known not to be met by the exact quantity
    (see ``detail``) and does not count as a suite failure.
    """

    suite: str
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""
    known_deviation: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "xfail" if self.known_deviation else "fail"


def _points():
    return [(np.array(x), t, nu) for x, t, nu in quadrature.PINNED_POINTS]


# ---------------------------------------------------------------------------
# kernels


def check_G_quadrature(ks: KernelSet = DEFAULT_KERNELS, tol: float = 1e-3) -> Check:
    worst = 0.0
    for x, t, nu in _points():
        G = ks.oseen_G(x, t, nu)
        Q = quadrature.numeric_G_quadrature(x, t, nu)
        worst = max(worst, quadrature.relative_entry_error(G, Q))
    return Check("kernels", "G closed form vs Fourier quadrature", worst, tol, worst < tol,
                 f"{len(quadrature.PINNED_POINTS)} pinned points")


def check_J_finite_difference(ks: KernelSet = DEFAULT_KERNELS, tol: float = 1e-6,
                              order_min: float = 1.9) -> Check:
    worst = 0.0
    for x, t, nu in _points():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", quadrature.StepSizeWarning)
            D = _fd_hessian(ks.erf_potential, x, t, nu)
        worst = max(worst, quadrature.relative_entry_error(D, ks.oseen_J(x, t, nu)))
    x, t, nu = _points()[1]
    scale = quadrature.default_step(x, t, nu) / 5e-4
    steps = scale * np.array([0.04, 0.02, 0.01, 0.005])
    exact = ks.oseen_J(x, t, nu)
    errs = np.array([quadrature.relative_entry_error(_fd_hessian(ks.erf_potential, x, t, nu, h), exact)
                     for h in steps])
    orders = np.log2(errs[:-1] / errs[1:])
    ok = worst < tol and bool(np.all(orders > order_min))
    return Check("kernels", "J closed form vs finite differences", worst, tol, ok,
                 "orders " + " ".join(f"{o:.3f}" for o in orders), extra={"orders": orders.tolist()})


def _fd_hessian(potential, x, t, nu, h=None):
    h = quadrature.default_step(x, t, nu) if h is None else h
    return quadrature._hessian_fd(lambda y: float(potential(y, t, nu)), np.asarray(x), h)


def check_trace_identity(ks: KernelSet = DEFAULT_KERNELS, tol: float = 1e-10) -> Check:
    # random extras keep s = |x| / sqrt(4 nu t) <= 3: beyond that g falls below
    # the eps / |x|^3 rounding of the cancelling Hessian terms
    rng = np.random.default_rng(7)
    pts = _points()
    extra = []
    for _ in range(100):
        t, nu = rng.uniform(0.05, 2.0), rng.uniform(0.05, 1.0)
        d = rng.normal(size=3)
        extra.append((d / np.linalg.norm(d) * rng.uniform(0.01, 3.0) * math.sqrt(4 * nu * t), t, nu))
    worst = 0.0
    for x, t, nu in pts + extra:
        g = float(ks.heat_kernel(x, t, nu))
        tr = float(np.trace(ks.oseen_G(x, t, nu)))
        worst = max(worst, abs(tr - 2 * g) / (abs(g) + np.finfo(float).eps))
    return Check("kernels", "trace G = 2 g", worst, tol, worst <= tol, f"{len(pts) + len(extra)} points")


def check_heat_normalization(ks: KernelSet = DEFAULT_KERNELS, tol: float = 1e-8) -> Check:
    """Periodic trapezoid sum of ``g`` on a box many diffusion lengths wide."""
    t, nu, L, n = 0.5, 0.2, 6.0, 64
    ax = -L + 2 * L / n * np.arange(n)
    X = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)
    total = float(np.sum(ks.heat_kernel(X, t, nu)) * (2 * L / n) ** 3)
    err = abs(total - 1.0)
    return Check("kernels", "integral of g equals 1", err, tol, err < tol, f"box [-{L},{L}]^3, N={n}")


def check_I2(ks: KernelSet = DEFAULT_KERNELS, tol: float = 1e-4) -> Check:
    worst = 0.0
    for x, t, nu in _points()[::3]:
        I2 = quadrature.numeric_I2(x, t, nu)
        worst = max(worst, quadrature.relative_entry_error(I2, _k.OSEEN_PREFACTOR * ks.oseen_J(x, t, nu)))
    return Check("kernels", "radial I2 vs J / (2 pi^1.5)", worst, tol, worst < tol)


def check_pressure_gradient(ks: KernelSet = DEFAULT_KERNELS, tol: float = 1e-8) -> Check:
    worst = 0.0
    for x, t, nu in _points():
        h = 1e-5 * min(np.linalg.norm(x), math.sqrt(4 * nu * t))
        fd = np.array([(ks.erf_potential(x + h * e, t, nu) - ks.erf_potential(x - h * e, t, nu)) / (2 * h)
                       for e in np.eye(3)]) * _k.OSEEN_PREFACTOR
        grad = ks.pressure_kernel_grad(x, t, nu)
        worst = max(worst, float(np.max(np.abs(grad - fd)) / np.max(np.abs(grad))))
    return Check("kernels", "pressure kernel gradient vs finite differences", worst, tol, worst < tol)


# ---------------------------------------------------------------------------
# identities and estimates

ERF_PAIRS = ((1.0, 1.0), (0.5, 2.0), (3.0, 0.1), (10.0, 1.0), (0.1, 0.01), (2.0, 0.5))


def check_erf_identity(tol: float = 1e-8) -> Check:
    worst = 0.0
    for y, a in ERF_PAIRS:
        lhs, rhs = quadrature.erf_identity_sides(y, a)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return Check("identities", "sine-Gaussian integral equals (pi/2) Erf", worst, tol, worst < tol,
                 f"{len(ERF_PAIRS)} (y, a) pairs")


def check_gradient_heat_integral(tol: float = 1e-6) -> Check:
    worst = 0.0
    for t in (0.01, 0.1, 1.0):
        for nu in (1.0, 2.0):
            val = estimates.gradient_heat_integral(t, nu)
            worst = max(worst, abs(val - 2 / math.sqrt(math.pi * nu * t)) / val)
    return Check("estimates", "integral |grad g| = 2 / sqrt(pi nu t)", worst, tol, worst < tol)


DECAY_NOTE = ("weight scale 1 vs diffusion length 2 sqrt(nu t) in [0.2, 2]: the exact "
              "quantity is c t^-1/2 (1 - O(sqrt t)), so the fitted slope is steeper than -1/2 "
              "on this range; the t^-1/2 bound itself is checked separately")


def check_decay_slope(times=None, nu: float = 1.0) -> tuple[Check, Check]:
    """Fitted slope (target range) and the bound ``sup_t sqrt(t) M(t)`` (finite, attained as t -> 0)."""
    times = np.logspace(-2, 0, 9) if times is None else times
    scan = estimates.kernel_decay_scan(times, nu)
    lo, hi = DECAY_SLOPE_RANGE
    slope = Check("estimates", "weighted kernel estimate: fitted slope in [-0.55, -0.45]",
                  scan.slope, 0.05, lo <= scan.slope <= hi,
                  f"slope {scan.slope:.4f} (gradient part {scan.gradient_slope:.4f}); " + DECAY_NOTE,
                  known_deviation=True, extra={"scan": scan})
    scaled = scan.M * np.sqrt(scan.times)
    # bounded by c t^-1/2 and still approaching the limit from below
    ok = bool(np.all(np.isfinite(scaled)) and scaled[0] == scaled.max())
    bound = Check("estimates", "weighted kernel estimate: sqrt(t) M(t) bounded", float(scaled.max()),
                  float("inf"), ok, "max at smallest t; values " + " ".join(f"{v:.3f}" for v in scaled))
    return slope, bound


def check_j12(q_list=(1, 2, 5, 10, 20, 50, 100), limit: float = 20.0) -> tuple[Check, Check]:
    scan = estimates.j12_bound_scan(q_list)
    spread = scan.spread
    c1 = Check("estimates", "J12 (2+q)/ln(3+q) bounded", spread, limit,
               bool(np.all(np.isfinite(scan.ratio))) and spread < limit,
               "ratios " + " ".join(f"{r:.3f}" for r in scan.ratio))
    c2 = Check("estimates", "J11 decays like (1+q)^-1", abs(scan.j11_exponent - 1.0), 0.05,
               abs(scan.j11_exponent - 1.0) < 0.05, f"exponent {scan.j11_exponent:.4f}")
    return c1, c2


SUITES = ("kernels", "identities", "estimates")


def run_suite(only: str | None = None, ks: KernelSet | None = None) -> list[Check]:
    """Run the selected suite (all suites when ``only`` is ``None``)."""
    ks = ks or DEFAULT_KERNELS
    chosen = SUITES if only in (None, "all") else (only,)
    checks: list[Check] = []
    if "kernels" in chosen:
        checks += [check_G_quadrature(ks), check_J_finite_difference(ks), check_trace_identity(ks),
                   check_heat_normalization(ks), check_I2(ks), check_pressure_gradient(ks)]
    if "identities" in chosen:
        checks.append(check_erf_identity())
    if "estimates" in chosen:
        checks.append(check_gradient_heat_integral())
        checks.extend(check_decay_slope())
        checks.extend(check_j12())
    return checks


__all__ = ["Check", "KernelSet", "DEFAULT_KERNELS", "SUITES", "run_suite"]
