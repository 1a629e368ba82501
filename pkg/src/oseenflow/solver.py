"""
Picard/Duhamel solver for the integral form of the Navier-Stokes problem.

The unknown velocity satisfies

    v(t) = F(t) - int_0^t S(t - s) [(v . grad) v](s) ds,
    F(t) = exp(nu Delta t) v0 + int_0^t S(t - s) f(s) ds,

with ``S(tau)`` the Oseen convolution, i.e. the spectral multiplier
``P(xi) exp(-nu |xi|^2 tau)``.  Time integrals use product integration:
the source is interpolated linearly between nodes and the exponential is
integrated exactly, which is second order in ``dt`` and exact for sources
constant in time.

The time axis is cut into windows on which the Picard map contracts.  The
solved history enters the next window only through the known term

    F_1(t) = F(t) - exp(nu Delta (t - t0)) [F(t0) - v(t0)],

which is the history integral over ``[0, t0]`` carried forward by the
semigroup.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractionError, DomainError
from .fields import (
    GridSpec,
    ScalarField,
    SpectralField,
    VectorField,
    advection_array,
    divergence_ratio,
    fft3,
    gradient_array,
    ifft3_real,
    project_array,
    value_plus_gradient,
)

log = logging.getLogger(__name__)

Forcing = Callable[[float], np.ndarray]

#: Relative spectral divergence accepted for the loaded initial field.
DIVERGENCE_TOL = 1e-10


@dataclass
class Scenario:
    """
    Physical problem: viscosity, box, initial field, forcing and horizon.

    ``v0`` is projected onto divergence-free fields at construction.
    ``forcing`` maps a time to physical samples of shape ``(3, N, N, N)``;
    ``None`` means ``f = 0``.
    """

    nu: float
    grid: GridSpec
    v0: VectorField
    T: float
    forcing: Forcing | None = None
    decay_exponent: float = 4.0
    name: str = "custom"
    v0_hat: SpectralField = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise DomainError(f"nu must be positive, got {self.nu}")
        if self.T <= 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if self.decay_exponent <= 3:
            raise DomainError(f"decay exponent must exceed 3, got {self.decay_exponent}")
        if self.v0.grid != self.grid:
            raise DomainError("v0 lives on a different grid")
        projected = project_array(self.grid, fft3(self.v0.data))
        ratio = divergence_ratio(self.grid, projected)
        if ratio > DIVERGENCE_TOL:
            raise DomainError(f"projected v0 not divergence-free (ratio {ratio:.2e})")
        self.v0_hat = SpectralField(self.grid, projected, 0.0)

    def forcing_hat(self, t: float) -> np.ndarray | None:
        if self.forcing is None:
            return None
        return fft3(np.asarray(self.forcing(t), dtype=np.float64))


@dataclass(frozen=True)
class SolverConfig:
    """
    Iteration and time-discretization settings.

    ``tau`` is a window length or ``"adaptive"``; ``dt`` is the spacing of
    the Duhamel quadrature nodes.  ``linear=True`` switches the convective term
    off (Stokes limit).
    """

    picard_tol: float = 1e-10
    max_iters: int = 60
    tau: float | str = "adaptive"
    dt: float = 0.05
    contraction_safety: float = 0.5
    linear: bool = False
    max_retries: int = 6
    probe_window: float | None = None
    n1_growth_flag: float = 10.0

    def __post_init__(self) -> None:
        if self.picard_tol <= 0:
            raise ConfigurationError("picard_tol must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if not 0 < self.contraction_safety < 1:
            raise ConfigurationError("contraction_safety must lie in (0, 1)")
        if isinstance(self.tau, str):
            if self.tau != "adaptive":
                raise ConfigurationError(f"tau must be a number or 'adaptive', got {self.tau!r}")
        elif self.tau <= 0:
            raise ConfigurationError("tau must be positive")
        elif self.dt > self.tau * (1 + 1e-12):
            raise ConfigurationError("dt must not exceed tau")


@dataclass
class WindowTrace:
    """Picard diagnostics for one window."""

    t_start: float
    t_end: float
    deltas: list[float] = field(default_factory=list)
    n1: list[float] = field(default_factory=list)
    divergence: list[float] = field(default_factory=list)
    converged: bool = False
    retries: int = 0

    @property
    def ratios(self) -> list[float]:
        d = self.deltas
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]

    @property
    def sup_n1(self) -> float:
        return max(self.n1) if self.n1 else 0.0


@dataclass
class ConvergenceTrace:
    """Per-window traces of a full march plus the bounded-iterates monitor."""

    windows: list[WindowTrace] = field(default_factory=list)
    n1_flagged: bool = False

    @property
    def converged(self) -> bool:
        return all(w.converged for w in self.windows)

    @property
    def max_divergence(self) -> float:
        return max((max(w.divergence) for w in self.windows if w.divergence), default=0.0)


@dataclass
class SolutionTrajectory:
    """Sampled solution; ``states[i]`` is the spectral velocity at ``times[i]``."""

    grid: GridSpec
    nu: float
    times: np.ndarray
    states: list[SpectralField]
    pressure: list[ScalarField] | None = None
    forcing: Forcing | None = None

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.times) != len(self.states):
            raise DomainError("times and states differ in length")
        if len(self.times) and (self.times[0] != 0 or np.any(np.diff(self.times) <= 0)):
            raise DomainError("trajectory times must start at 0 and increase strictly")

    def physical(self, i: int) -> VectorField:
        return VectorField(self.grid, ifft3_real(self.states[i].data), float(self.times[i]))


# ---------------------------------------------------------------------------
# product-integration weights


def _phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``phi1 = (e^z - 1)/z`` and ``phi2 = (e^z - 1 - z)/z^2`` for ``z <= 0``."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    phi1 = np.where(small, 0.0, em1 / zs)
    phi2 = np.where(small, 0.0, (em1 - zs) / zs**2)
    zt = np.where(small, z, 0.0)
    s1 = np.zeros_like(z)
    s2 = np.zeros_like(z)
    for n in range(9, -1, -1):
        s1 = s1 * zt + 1.0 / math.factorial(n + 1)
        s2 = s2 * zt + 1.0 / math.factorial(n + 2)
    return np.where(small, s1, phi1), np.where(small, s2, phi2)


@dataclass(frozen=True)
class StepWeights:
    """Exponential factor and product-trapezoid weights for one step ``h``."""

    decay: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @classmethod
    def build(cls, grid: GridSpec, nu: float, h: float) -> "StepWeights":
        z = -nu * grid.xi_squared * h
        phi1, phi2 = _phi_functions(z)
        return cls(np.exp(z), h * (phi1 - phi2), h * phi2)


def _duhamel_cumulative(grid: GridSpec, w: StepWeights, src: np.ndarray) -> np.ndarray:
    """Projected ``int_{s_0}^{s_k} S(s_k - s) src(s) ds`` at every node ``k``."""
    out = np.empty_like(src)
    acc = np.zeros_like(src[0])
    out[0] = acc
    for k in range(len(src) - 1):
        acc = w.decay * acc + w.left * src[k] + w.right * src[k + 1]
        out[k + 1] = project_array(grid, acc)
    return out


def _uniform_step(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or len(times) < 2:
        raise ConfigurationError("Duhamel quadrature needs at least two nodes")
    steps = np.diff(times)
    h = float(steps.mean())
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(h, 1.0):
        raise ConfigurationError("Duhamel quadrature nodes must be uniformly spaced and increasing")
    return h


def duhamel_apply(source: Sequence[SpectralField], times, nu: float) -> SpectralField:
    """
    ``int_{times[0]}^{times[-1]} P exp(-nu |xi|^2 (t - s)) source(s) ds`` at ``t = times[-1]``.

    ``source`` holds spectral samples at uniformly spaced ``times``.
    """
    times = np.asarray(times, dtype=np.float64)
    h = _uniform_step(times)
    if len(source) != len(times):
        raise ConfigurationError("one source sample is required per quadrature node")
    grid = source[0].grid
    src = np.array([s.data for s in source])
    out = _duhamel_cumulative(grid, StepWeights.build(grid, nu, h), src)
    return SpectralField(grid, out[-1], float(times[-1]))


# ---------------------------------------------------------------------------
# forcing term F


def time_nodes(T: float, dt: float) -> np.ndarray:
    """Uniform nodes on ``[0, T]`` with spacing as close to ``dt`` as divides ``T``."""
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    return np.linspace(0.0, T, steps + 1)


class _ForcingIntegral:
    """Incremental evaluation of F at consecutive uniform nodes."""

    def __init__(self, scenario: Scenario, h: float):
        self.scenario = scenario
        self.h = h
        self.grid = scenario.grid
        self.w = StepWeights.build(self.grid, scenario.nu, h)
        self._k = 0
        self._acc = np.zeros((3, *self.grid.shape), dtype=np.complex128)
        self._f = scenario.forcing_hat(0.0)
        self._cache: dict[int, np.ndarray] = {0: self._value()}

    def _value(self) -> np.ndarray:
        t = self._k * self.h
        decay = np.exp(-self.scenario.nu * self.grid.xi_squared * t)
        return decay * self.scenario.v0_hat.data + project_array(self.grid, self._acc)

    def at(self, k: int) -> np.ndarray:
        while self._k < k:
            if self._f is not None:
                f_next = self.scenario.forcing_hat((self._k + 1) * self.h)
                self._acc = self.w.decay * self._acc + self.w.left * self._f + self.w.right * f_next
                self._f = f_next
            self._k += 1
            self._cache[self._k] = self._value()
        return self._cache[k]

    def release_before(self, k: int) -> None:
        for key in [key for key in self._cache if key < k]:
            del self._cache[key]


def assemble_F(scenario: Scenario, times, dt: float | None = None) -> list[SpectralField]:
    """
    Known term ``F`` at each of ``times``.

    The forcing integral is accumulated on uniform nodes of spacing ``dt``
    (default: the smallest gap in ``times``); every requested time must be a
    node.
    """
    times = np.asarray(times, dtype=np.float64)
    if np.any(times < 0) or np.any(times > scenario.T * (1 + 1e-12)):
        raise DomainError(f"times must lie in [0, {scenario.T}]")
    if dt is None:
        gaps = np.diff(np.unique(np.concatenate([[0.0], times])))
        dt = float(gaps.min()) if len(gaps) else scenario.T
    nodes = time_nodes(scenario.T, dt)
    h = nodes[1] - nodes[0]
    idx = _node_indices(nodes, times)
    integ = _ForcingIntegral(scenario, h)
    return [SpectralField(scenario.grid, integ.at(k).copy(), float(nodes[k])) for k in idx]


def _node_indices(nodes: np.ndarray, times) -> list[int]:
    h = nodes[1] - nodes[0] if len(nodes) > 1 else 1.0
    idx = []
    for t in np.atleast_1d(times):
        k = int(round(t / h))
        if k < 0 or k >= len(nodes) or abs(nodes[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ConfigurationError(f"time {t} is not a quadrature node (spacing {h})")
        idx.append(k)
    return idx


# ---------------------------------------------------------------------------
# Picard iteration on one window


@dataclass
class WindowProblem:
    """Known term ``F_1`` on the uniform nodes ``t0 + k h`` of one window."""

    grid: GridSpec
    nu: float
    h: float
    t0: float
    F: np.ndarray  # (nodes, 3, N, N, N) complex

    @property
    def t_end(self) -> float:
        return self.t0 + self.h * (len(self.F) - 1)


def _node_physics(grid: GridSpec, vh: np.ndarray):
    u = ifft3_real(vh)
    grad = gradient_array(grid, vh)
    return u, grad


def _picard(problem: WindowProblem, cfg: SolverConfig, iterations: int | None, strict: bool):
    grid = problem.grid
    weight = 1.0 + grid.radius
    weights = StepWeights.build(grid, problem.nu, problem.h)
    trace = WindowTrace(problem.t0, problem.t_end)
    v = problem.F.copy()
    nodes = len(v)
    limit = cfg.max_iters if iterations is None else iterations

    phys = [_node_physics(grid, v[k]) for k in range(nodes)]
    trace.divergence.append(max(divergence_ratio(grid, v[k]) for k in range(nodes)))
    for n in range(limit):
        trace.n1.append(max(float(np.max(value_plus_gradient(u, g) * weight)) for u, g in phys))
        if cfg.linear:
            v_new = problem.F.copy()
        else:
            src = np.array([advection_array(grid, u, g) for u, g in phys])
            v_new = problem.F - _duhamel_cumulative(grid, weights, src)
        delta = 0.0
        new_phys = []
        for k in range(nodes):
            u, g = _node_physics(grid, v_new[k])
            du, dg = u - phys[k][0], g - phys[k][1]
            delta = max(delta, float(np.max(value_plus_gradient(du, dg))))
            new_phys.append((u, g))
        if not np.isfinite(delta):
            raise ContractionError("Picard iterates became non-finite", float("inf"),
                                   (problem.t0, problem.t_end))
        trace.deltas.append(delta)
        trace.divergence.append(max(divergence_ratio(grid, v_new[k]) for k in range(nodes)))
        v, phys = v_new, new_phys
        if delta <= cfg.picard_tol:
            trace.converged = True
            break
        r = trace.ratios
        if strict and len(r) >= 3 and min(r[-3:]) >= 1.0:
            raise ContractionError(
                f"Picard iteration diverging on [{problem.t0:g}, {problem.t_end:g}] "
                f"(ratio {r[-1]:.3g})", r[-1], (problem.t0, problem.t_end))
    return v, trace


def picard_iterate(problem: WindowProblem, cfg: SolverConfig):
    """
    Iterate ``v_{n+1} = F_1 - Duhamel[(v_n . grad) v_n]`` from ``v_1 = F_1``.

    Returns the node values of the last iterate and the window trace.  Raises
    :class:`ContractionError` when ``N0(v_{n+1} - v_n)`` has not fallen below
    ``picard_tol`` after ``max_iters`` iterations.
    """
    v, trace = _picard(problem, cfg, None, strict=True)
    if not trace.converged:
        r = trace.ratios
        ratio = r[-1] if r else float("nan")
        raise ContractionError(
            f"no convergence on [{problem.t0:g}, {problem.t_end:g}] after {cfg.max_iters} "
            f"iterations (last delta {trace.deltas[-1]:.3e}, ratio {ratio:.3g})",
            ratio, (problem.t0, problem.t_end))
    return v, trace


def probe_ratio(problem: WindowProblem, cfg: SolverConfig) -> tuple[float, float]:
    """Deltas ``(d_1, d_2)`` of the first two Picard steps on ``problem``."""
    _, trace = _picard(problem, cfg, 2, strict=False)
    d = trace.deltas + [0.0] * (2 - len(trace.deltas))
    return d[0], d[1]


def estimate_window(problem: WindowProblem, cfg: SolverConfig, horizon: float) -> float:
    """
    Empirical contraction window.

    With ``r = d_2 / d_1`` measured on the probe window ``tau_trial`` (the
    span of ``problem``), return ``tau_trial * (safety / r)^2`` clamped to
    ``[h, horizon]``.  A linear problem (``d_1 = 0``) returns ``horizon``.
    """
    if cfg.linear:
        return horizon
    d1, d2 = probe_ratio(problem, cfg)
    if d1 <= cfg.picard_tol * 1e-3 or d2 == 0:
        return horizon
    tau_trial = problem.t_end - problem.t0
    tau = tau_trial * (cfg.contraction_safety * d1 / d2) ** 2
    return float(min(max(tau, problem.h), horizon))


# ---------------------------------------------------------------------------
# windowed march


def _window_problem(scenario: Scenario, integ: _ForcingIntegral, nodes: np.ndarray,
                    k0: int, k1: int, history: np.ndarray) -> WindowProblem:
    grid = scenario.grid
    t0 = nodes[k0]
    F1 = np.empty((k1 - k0 + 1, 3, *grid.shape), dtype=np.complex128)
    for i, k in enumerate(range(k0, k1 + 1)):
        lag = nodes[k] - t0
        F1[i] = integ.at(k) - np.exp(-scenario.nu * grid.xi_squared * lag) * history
    return WindowProblem(grid, scenario.nu, integ.h, float(t0), F1)


def initial_window(scenario: Scenario, tau: float, dt: float) -> WindowProblem:
    """Window problem on ``[0, tau]`` with node spacing ``dt`` (``F_1 = F``)."""
    if tau > scenario.T * (1 + 1e-12):
        raise DomainError("window exceeds the scenario horizon")
    steps = max(1, int(round(tau / dt)))
    if abs(steps * dt - tau) > 1e-9 * max(1.0, tau):
        raise ConfigurationError("tau must be a multiple of dt")
    integ = _ForcingIntegral(scenario, dt)
    nodes = dt * np.arange(steps + 1)
    return _window_problem(scenario, integ, nodes, 0, steps,
                           np.zeros((3, *scenario.grid.shape), dtype=np.complex128))


def picard_deltas(problem: WindowProblem, cfg: SolverConfig, iterations: int) -> "WindowTrace":
    """Run exactly ``iterations`` Picard steps (or fewer if converged) and return the trace."""
    return _picard(problem, cfg, iterations, strict=False)[1]


def march(scenario: Scenario, cfg: SolverConfig, times=None, with_pressure: bool = False):
    """
    Solve on ``[0, T]`` window by window.

    Parameters
    ----------
    times : sequence of float, optional
        Output times; each must be a quadrature node.  Defaults to every node.
    with_pressure : bool
        Also recover the pressure at each output time.

    Returns
    -------
    (SolutionTrajectory, ConvergenceTrace)
    """
    grid = scenario.grid
    nodes = time_nodes(scenario.T, cfg.dt)
    h = float(nodes[1] - nodes[0])
    K = len(nodes) - 1
    wanted = list(range(K + 1)) if times is None else sorted(set(_node_indices(nodes, times)))
    if wanted[0] != 0:
        wanted.insert(0, 0)
    wanted_set = set(wanted)

    integ = _ForcingIntegral(scenario, h)
    history = np.zeros((3, *grid.shape), dtype=np.complex128)
    states: dict[int, np.ndarray] = {0: scenario.v0_hat.data.copy()}
    trace = ConvergenceTrace()

    fixed_steps = None
    if not isinstance(cfg.tau, str):
        fixed_steps = max(1, int(round(cfg.tau / h)))

    k0 = 0
    while k0 < K:
        if fixed_steps is not None:
            steps = fixed_steps
        elif cfg.linear:
            steps = K - k0
        else:
            probe = cfg.probe_window or max(2 * h, scenario.T / 4)
            probe_steps = max(1, min(K - k0, int(round(probe / h))))
            pp = _window_problem(scenario, integ, nodes, k0, k0 + probe_steps, history)
            tau = estimate_window(pp, cfg, scenario.T)
            steps = max(1, int(math.floor(tau / h + 1e-9)))
            log.debug("window at t=%g: estimated tau=%g (%d steps)", nodes[k0], tau, steps)
        steps = min(steps, K - k0)

        retries = 0
        while True:
            k1 = k0 + steps
            problem = _window_problem(scenario, integ, nodes, k0, k1, history)
            try:
                v, wtrace = picard_iterate(problem, cfg)
                break
            except ContractionError as exc:
                if retries >= cfg.max_retries or steps == 1:
                    raise
                retries += 1
                steps = max(1, steps // 2)
                log.info("contraction failure on %s (ratio %.3g); retrying with %d steps",
                         exc.window, exc.ratio, steps)
        wtrace.retries = retries
        trace.windows.append(wtrace)

        for i, k in enumerate(range(k0, k1 + 1)):
            if k in wanted_set and k not in states:
                states[k] = v[i].copy()
        history = integ.at(k1) - v[-1]
        integ.release_before(k1)
        k0 = k1

    first = trace.windows[0].sup_n1 if trace.windows else 0.0
    if first > 0 and any(w.sup_n1 > cfg.n1_growth_flag * first for w in trace.windows):
        trace.n1_flagged = True
        log.warning("sup N1(v_n) grew by more than %g across windows", cfg.n1_growth_flag)

    out_times = nodes[wanted]
    out_states = [SpectralField(grid, states[k], float(nodes[k])) for k in wanted]
    pressure = None
    if with_pressure:
        pressure = []
        for k, st in zip(wanted, out_states):
            f = scenario.forcing(nodes[k]) if scenario.forcing is not None else None
            pressure.append(recover_pressure(VectorField(grid, ifft3_real(st.data), nodes[k]), f))
    traj = SolutionTrajectory(grid, scenario.nu, out_times, out_states, pressure, scenario.forcing)
    return traj, trace


# ---------------------------------------------------------------------------
# pressure


def recover_pressure(v: VectorField, f: VectorField | np.ndarray | None = None) -> ScalarField:
    """
    Pressure from ``Delta p = div(f - (v . grad) v)``, zero mean.

    ``p_hat = -i xi . (f_hat - N_hat) / |xi|^2`` for ``xi != 0`` and
    ``p_hat(0) = 0``.
    """
    grid = v.grid
    vh = fft3(v.data)
    rhs = -advection_array(grid, v.data, gradient_array(grid, vh))
    if f is not None:
        fdata = f.data if isinstance(f, VectorField) else np.asarray(f, dtype=np.float64)
        rhs = rhs + fft3(fdata)
    ph = -1j * np.sum(grid.xi_derivative * rhs, axis=0) / grid.xi_squared_safe
    ph[0, 0, 0] = 0.0
    return ScalarField(grid, ifft3_real(ph), v.t)


__all__ = [
    "Scenario",
    "SolverConfig",
    "WindowTrace",
    "ConvergenceTrace",
    "SolutionTrajectory",
    "WindowProblem",
    "StepWeights",
    "time_nodes",
    "assemble_F",
    "duhamel_apply",
    "picard_iterate",
    "probe_ratio",
    "estimate_window",
    "march",
    "initial_window",
    "picard_deltas",
    "recover_pressure",
]
