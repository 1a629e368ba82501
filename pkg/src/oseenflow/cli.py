"""
Command-line interface.

    oseenflow solve SCENARIO.yaml [--linear] [--tau T|adaptive] [--dt DT]
                                  [--grid N] [--box L] [--out DIR]
    oseenflow verify [--only kernels|identities|estimates] [--out DIR]
    oseenflow kernels tabulate [--points FILE | --point X1,X2,X3 ...] --t T --nu NU

Exit codes: 0 success, 1 failed checks (or every tabulated row failed),
2 invalid input, 3 Picard contraction failure after all retries.
The default output directory comes from ``OSEENFLOW_OUT`` (else
``./oseenflow-out``).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import os
import sys
from pathlib import Path
from typing import Any, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import __version__, diagnostics, kernels, verification
from .errors import ContractionError, OseenFlowError
from .fields import GridSpec, ifft3_real
from .scenarios import FORCING_FAMILIES, INITIAL_FAMILIES, forcing_function, initial_field
from .solver import Scenario, SolverConfig, assemble_F, march, time_nodes

ENV_OUT = "OSEENFLOW_OUT"
EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_CONTRACTION = 0, 1, 2, 3
DIAGNOSTICS = ("norms", "energy", "lemma1", "trace", "bound", "pressure")


# ---------------------------------------------------------------------------
# scenario file schema


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridModel(_Strict):
    half_width: float = Field(gt=0)
    points: int = Field(ge=4)
    dealias_fraction: float = Field(2.0 / 3.0, gt=0, le=1)

    @field_validator("points")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("points must be even")
        return v


class InitialModel(_Strict):
    family: str
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known(cls, v: str) -> str:
        if v not in INITIAL_FAMILIES:
            raise ValueError(f"unknown initial family {v!r}; choose from {', '.join(INITIAL_FAMILIES)}")
        return v


class ForcingModel(_Strict):
    family: str = "zero"
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known(cls, v: str) -> str:
        if v not in FORCING_FAMILIES:
            raise ValueError(f"unknown forcing family {v!r}; choose from {', '.join(FORCING_FAMILIES)}")
        return v


class SolverModel(_Strict):
    picard_tol: float = Field(1e-10, gt=0)
    max_iters: int = Field(60, ge=1)
    tau: Union[Literal["adaptive"], float] = "adaptive"
    dt: float = Field(0.05, gt=0)
    contraction_safety: float = Field(0.5, gt=0, lt=1)
    linear: bool = False
    max_retries: int = Field(6, ge=0)

    @field_validator("tau")
    @classmethod
    def _positive(cls, v):
        if not isinstance(v, str) and v <= 0:
            raise ValueError("tau must be positive or 'adaptive'")
        return v


class OutputModel(_Strict):
    times: list[float] | None = None
    snapshots: bool = True
    diagnostics: list[Literal["norms", "energy", "lemma1", "trace", "bound", "pressure"]] = Field(
        default_factory=lambda: ["norms", "energy", "lemma1", "trace", "bound"])
    directory: str | None = None


class ScenarioFile(_Strict):
    name: str = "scenario"
    nu: float = Field(gt=0)
    T: float = Field(gt=0)
    decay_exponent: float = Field(4.0, gt=3)
    grid: GridModel
    initial: InitialModel
    forcing: ForcingModel = Field(default_factory=ForcingModel)
    solver: SolverModel = Field(default_factory=SolverModel)
    output: OutputModel = Field(default_factory=OutputModel)


class InputError(Exception):
    """Invalid scenario input; carries field-level messages."""

    def __init__(self, messages: list[str]):
        super().__init__("; ".join(messages))
        self.messages = messages


def _set(doc: dict, path: tuple[str, ...], value) -> None:
    node = doc
    for key in path[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise InputError([f"{'.'.join(path[:-1])}: expected a mapping"])
    node[path[-1]] = value


def load_scenario_file(path: str | Path, overrides: dict[tuple[str, ...], Any] | None = None) -> ScenarioFile:
    """Parse and validate a scenario file, applying command-line overrides first."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError([f"cannot read {path}: {exc.strerror}"]) from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InputError([f"malformed YAML: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise InputError(["top level must be a mapping"])
    for key, value in (overrides or {}).items():
        _set(doc, key, value)
    try:
        return ScenarioFile.model_validate(doc)
    except ValidationError as exc:
        raise InputError([f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}"
                          for e in exc.errors()]) from exc


def build_run(model: ScenarioFile) -> tuple[Scenario, SolverConfig, np.ndarray]:
    """Scenario, solver config and output times; raises :class:`InputError`."""
    try:
        grid = GridSpec(model.grid.half_width, model.grid.points, model.grid.dealias_fraction)
        v0 = initial_field(grid, model.initial.family, **model.initial.params)
        f = forcing_function(grid, model.forcing.family, nu=model.nu, **dict(model.forcing.params))
        scenario = Scenario(model.nu, grid, v0, model.T, f, model.decay_exponent, model.name)
        s = model.solver
        cfg = SolverConfig(picard_tol=s.picard_tol, max_iters=s.max_iters, tau=s.tau, dt=s.dt,
                           contraction_safety=s.contraction_safety, linear=s.linear,
                           max_retries=s.max_retries)
    except (OseenFlowError, ValueError, KeyError) as exc:
        raise InputError([str(exc)]) from exc
    except TypeError as exc:
        raise InputError([f"family parameters: {exc}"]) from exc
    nodes = time_nodes(model.T, cfg.dt)
    if model.output.times is None:
        times = nodes
    else:
        h = nodes[1] - nodes[0]
        times = []
        for t in model.output.times:
            k = round(t / h)
            if t < 0 or t > model.T * (1 + 1e-12) or abs(k * h - t) > 1e-9 * max(1.0, t):
                raise InputError([f"output.times: {t} is not a quadrature node in [0, T] (spacing {h:g})"])
            times.append(nodes[k])
        times = np.unique(np.concatenate([[0.0], times]))
    return scenario, cfg, np.asarray(times)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path | io.TextIOBase, header, rows) -> None:
    """CSV with shortest round-trip float formatting."""
    own = not hasattr(path, "write")
    fh = open(path, "w", newline="", encoding="utf-8") if own else path
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if own:
            fh.close()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _output_dir(flag: str | None, configured: str | None) -> Path:
    return Path(flag or configured or os.environ.get(ENV_OUT) or "oseenflow-out")


def _window_summary(trace) -> list[dict]:
    return [{"t_start": w.t_start, "t_end": w.t_end, "iterations": len(w.deltas),
             "final_delta": w.deltas[-1] if w.deltas else 0.0, "converged": w.converged,
             "retries": w.retries, "sup_N1": w.sup_n1,
             "max_divergence": max(w.divergence) if w.divergence else 0.0}
            for w in trace.windows]


def _write_outputs(out: Path, model: ScenarioFile, scenario: Scenario, cfg: SolverConfig,
                   traj, trace) -> dict:
    wanted = set(model.output.diagnostics)
    flags = {"converged": trace.converged, "divergence_free": trace.max_divergence <= 1e-10,
             "n1_flagged": trace.n1_flagged,
             "boundary_ratio": max(diagnostics.boundary_ratio(traj.physical(i)) for i in range(len(traj.times)))}
    if model.output.snapshots:
        snap = out / "snapshots"
        snap.mkdir(exist_ok=True)
        for i, t in enumerate(traj.times):
            np.save(snap / f"velocity_{i:04d}.npy", ifft3_real(traj.states[i].data))
        write_csv(out / "snapshots.csv", ["index", "t", "file"],
                  [(i, t, f"snapshots/velocity_{i:04d}.npy") for i, t in enumerate(traj.times)])
    if "norms" in wanted:
        rows = [(r.t, r.N0, r.N1, *r.location) for r in diagnostics.norm_series(traj)]
        write_csv(out / "norms.csv", ["t", "N0", "N1", "x1", "x2", "x3"], rows)
    if "energy" in wanted and len(traj.times) >= 2:
        rep = diagnostics.energy_balance(traj)
        write_csv(out / "energy.csv", ["t", "E", "dissipation_cum", "forcing_cum", "residual"],
                  [(r.t, r.E, r.dissipation_cum, r.forcing_cum, r.residual) for r in rep])
    if "bound" in wanted:
        b = diagnostics.energy_bound_check(traj)
        write_csv(out / "energy_bound.csv",
                  ["E0", "E_T", "forcing_norm_integral", "lhs", "rhs", "slack", "gradient_integral"],
                  [(b.E0, b.E_T, b.forcing_norm_integral, b.lhs, b.rhs, b.slack, b.gradient_integral)])
        flags["energy_bound"] = b.holds
    if "lemma1" in wanted:
        F = assemble_F(scenario, traj.times, dt=cfg.dt)
        lem = diagnostics.lemma1_check(traj, F)
        write_csv(out / "lemma1.csv", ["t", "M", "envelope"],
                  [(t, m, lem.c0 + lem.c1 * t) for t, m in zip(lem.times, lem.M)])
        flags["lemma1_envelope"] = lem.envelope_valid
        flags["lemma1_c0"], flags["lemma1_c1"] = lem.c0, lem.c1
        flags["forcing_precondition"] = lem.forcing_precondition
    if "trace" in wanted:
        _write_trace(out / "trace.csv", trace)
    if "pressure" in wanted and traj.pressure is not None:
        (out / "snapshots").mkdir(exist_ok=True)
        for i, p in enumerate(traj.pressure):
            np.save(out / "snapshots" / f"pressure_{i:04d}.npy", p.samples)
    return flags


def _write_trace(path: Path, trace) -> None:
    rows = []
    for wi, w in enumerate(trace.windows):
        for n, d in enumerate(w.deltas):
            rows.append((wi, w.t_start, w.t_end, n + 1, d, w.n1[n], w.divergence[n + 1],
                         w.converged, w.retries))
    write_csv(path, ["window", "t_start", "t_end", "iteration", "delta", "N1", "divergence",
                     "converged", "retries"], rows)


def cmd_solve(args) -> int:
    overrides = {}
    if args.linear:
        overrides[("solver", "linear")] = True
    if args.tau is not None:
        overrides[("solver", "tau")] = args.tau if args.tau == "adaptive" else _number(args.tau)
    if args.dt is not None:
        overrides[("solver", "dt")] = args.dt
    if args.grid is not None:
        overrides[("grid", "points")] = args.grid
    if args.box is not None:
        overrides[("grid", "half_width")] = args.box
    try:
        model = load_scenario_file(args.scenario, overrides)
        scenario, cfg, times = build_run(model)
    except InputError as exc:
        for m in exc.messages:
            print(f"{args.scenario}: error: {m}", file=sys.stderr)
        return EXIT_INVALID

    out = _output_dir(args.out, model.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"code_version": __version__, "scenario_file": str(args.scenario),
                "config": model.model_dump(mode="json"), "start": _now()}
    status = EXIT_OK
    try:
        traj, trace = march(scenario, cfg, times, with_pressure="pressure" in model.output.diagnostics)
    except ContractionError as exc:
        manifest.update(status="contraction_failure", message=str(exc),
                        failure={"ratio": exc.ratio, "window": list(exc.window)})
        status = EXIT_CONTRACTION
        print(f"error: {exc}", file=sys.stderr)
    else:
        flags = _write_outputs(out, model, scenario, cfg, traj, trace)
        manifest.update(status="ok" if trace.converged else "not_converged",
                        windows=_window_summary(trace), acceptance=flags)
    manifest["end"] = _now()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n",
                                       encoding="utf-8")
    if status == EXIT_OK:
        print(f"solved {model.name} on [0, {model.T:g}] in {len(trace.windows)} window(s); output in {out}")
    return status


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _number(text: str) -> float | str:
    try:
        return float(text)
    except ValueError:
        return text


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args, ks: verification.KernelSet | None = None) -> int:
    checks = verification.run_suite(args.only, ks)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{c.status.upper():5s}  {c.suite:10s}  {c.name:{width}s}  {c.value:.3e}  {c.detail}")
    out = _output_dir(args.out, None)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "verify.csv", ["suite", "check", "status", "value", "tolerance", "detail"],
              [(c.suite, c.name, c.status, c.value, c.tolerance, c.detail) for c in checks])
    failed = [c for c in checks if c.status == "fail"]
    if failed:
        print("failing checks: " + ", ".join(c.name for c in failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# kernels tabulate


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(parts)


def _read_points(path: str) -> list[tuple[tuple[float, float, float], float, float]]:
    pts = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            pts.append(((float(row["x1"]), float(row["x2"]), float(row["x3"])),
                        float(row["t"]), float(row["nu"])))
    return pts


def tabulate_rows(points) -> tuple[list[tuple], int]:
    """Long-format rows for g, G and H at each point and the count of error rows."""
    rows, errors = [], 0
    for x, t, nu in points:
        xa = np.asarray(x, dtype=np.float64)
        base = (*x, t, nu)
        blocks = [("g", lambda: np.array([[kernels.heat_kernel(xa, t, nu)]])),
                  ("G", lambda: kernels.oseen_G(xa, t, nu)),
                  ("H", lambda: kernels.fourier_H(xa, t, nu))]
        for name, fn in blocks:
            try:
                val = np.atleast_2d(fn())
            except (OseenFlowError, ValueError) as exc:
                count = 1 if name == "g" else 9
                labels = ["g"] if name == "g" else [f"{name}{j}{m}" for j in (1, 2, 3) for m in (1, 2, 3)]
                rows += [(*base, lab, f"error: {exc}") for lab in labels]
                errors += count
                continue
            if name == "g":
                rows.append((*base, "g", float(val[0, 0])))
            else:
                rows += [(*base, f"{name}{j + 1}{m + 1}", float(val[j, m])) for j in range(3) for m in range(3)]
    return rows, errors


def cmd_tabulate(args) -> int:
    try:
        if args.points:
            points = _read_points(args.points)
        else:
            if not args.point or args.t is None or args.nu is None:
                raise ValueError("give --points FILE or at least one --point with --t and --nu")
            points = [(_parse_triple(p), args.t, args.nu) for p in args.point]
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rows, errors = tabulate_rows(points)
    header = ["x1", "x2", "x3", "t", "nu", "component_jm", "value"]
    if args.out:
        write_csv(Path(args.out), header, rows)
    else:
        write_csv(sys.stdout, header, rows)
    return EXIT_FAIL if rows and errors == len(rows) else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oseenflow", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the windowed Picard solver on a scenario file")
    s.add_argument("scenario", help="YAML scenario file")
    s.add_argument("--linear", action="store_true", help="drop the convective term (Stokes limit)")
    s.add_argument("--tau", help="window length or 'adaptive'")
    s.add_argument("--dt", type=float, help="Duhamel quadrature spacing")
    s.add_argument("--grid", type=int, help="points per axis")
    s.add_argument("--box", type=float, help="box half-width L")
    s.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./oseenflow-out)")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run the kernel and estimate oracle suite")
    v.add_argument("--only", choices=verification.SUITES, help="run a single suite")
    v.add_argument("--out", help="directory for verify.csv")
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("kernels", help="kernel utilities")
    ksub = k.add_subparsers(dest="kernels_command", required=True)
    t = ksub.add_parser("tabulate", help="tabulate g, G at x and H at xi = the same triple")
    t.add_argument("--points", help="CSV with columns x1,x2,x3,t,nu")
    t.add_argument("--point", action="append", help="x1,x2,x3 (repeatable)")
    t.add_argument("--t", type=float, help="time for --point rows")
    t.add_argument("--nu", type=float, help="viscosity for --point rows")
    t.add_argument("--out", help="CSV file (default stdout)")
    t.set_defaults(func=cmd_tabulate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
