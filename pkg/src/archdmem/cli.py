"""Command-line front end: ``archdmem modal|pushover|sweep|validate|export-mesh``.

Exit codes: 0 success, 1 input error, 2 solver non-convergence, 3 internal
error. ``ARCHDMEM_THREADS`` caps the number of sweep workers.
"""

from __future__ import annotations

import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import exports
from .arch_model import MeshError
from .model_io import Model, ModelFileError, load_model, model_from_dict, set_parameter, set_thickness_ratio, with_overrides
from .solver import (
    MechanismError,
    StaticResult,
    detect_hinges,
    evaluate,
    hinge_timeline,
    near_null_mode,
    peak_load,
    residual_plateau,
    run_static,
    solve_modal,
    ultimate_load,
)

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_INTERNAL = 0, 1, 2, 3

SWEEP_PARAMETERS = {"mu": "mu", "x": "x_over_span", "x_over_span": "x_over_span", "f_t": "f_t", "G_t": "G_t", "t_over_R": "t_over_R"}


# --------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter study: a pushover per value, ultimate load read at ``criterion`` (mm)."""

    parameter: str
    values: tuple
    criterion: float
    base: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}")
        if len(self.values) == 0:
            raise ValueError("sweep values must not be empty")
        name = SWEEP_PARAMETERS[self.parameter]
        for v in self.values:
            if math.isnan(v):
                raise ValueError("sweep values must not be NaN")
            if name in ("mu", "f_t", "G_t") and v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
            if name == "x_over_span" and not 0 < v < 1:
                raise ValueError(f"x/L must lie in (0, 1), got {v}")
            if name == "t_over_R" and not 0 < v < 2:
                raise ValueError(f"t/R must lie in (0, 2), got {v}")
        if not self.criterion >= 0:
            raise ValueError("criterion displacement must be >= 0")

    @property
    def field_name(self) -> str:
        return SWEEP_PARAMETERS[self.parameter]


@dataclass
class SweepRow:
    index: int
    value: float
    ultimate_load: float = math.nan  # kN at the criterion displacement
    peak_load: float = math.nan  # kN
    hinge_count: int = 0
    sliding: bool = False
    reached_criterion: bool = False
    termination: str = ""
    status: str = "ok"
    message: str = ""


def summarise(result: StaticResult, criterion: float, slip_tol: float = 1e-6) -> dict:
    """Scalar outcome of a pushover: loads, hinge count and sliding flag at the last step."""
    F_u, truncated = ultimate_load(result.curve, criterion)
    F_peak = peak_load(result.curve)[0] if result.curve.load else math.nan
    hinges = detect_hinges(result.structure, result.snapshots[-1], slip_tol=slip_tol) if result.snapshots else []
    return dict(
        ultimate_load=F_u,
        peak_load=F_peak,
        hinge_count=sum(1 for h in hinges if h.side is not None),
        sliding=bool(np.any(np.abs(result.state.u_p) > slip_tol)),
        reached_criterion=not truncated,
        termination=result.termination,
    )


def _sweep_one(args) -> SweepRow:
    index, value, data, field_name, criterion = args
    row = SweepRow(index, float(value))
    try:
        model = model_from_dict(set_parameter(data, field_name, value), f"sweep value {value}")
        protocol = model.protocol
        if protocol.target_displacement < criterion:
            protocol.target_displacement = criterion
        result = run_static(model.mesh, protocol, model.options)
        for k, v in summarise(result, criterion).items():
            setattr(row, k, v)
        if not result.converged:
            row.status = "failed"
            row.message = result.termination
    except (ModelFileError, MeshError, ValueError) as exc:
        row.status, row.termination, row.message = "failed", "input error", str(exc)
    except Exception as exc:  # recorded per row; the sweep continues
        row.status, row.termination, row.message = "failed", "internal error", f"{type(exc).__name__}: {exc}"
    return row


def worker_limit(requested: Optional[int] = None) -> int:
    """Worker count: the request (default: CPU count) capped by ``ARCHDMEM_THREADS``."""
    n = requested or os.cpu_count() or 1
    env = os.environ.get("ARCHDMEM_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ValueError(f"ARCHDMEM_THREADS must be a positive integer, got {env!r}") from exc
        if cap < 1:
            raise ValueError(f"ARCHDMEM_THREADS must be a positive integer, got {env!r}")
        n = min(n, cap)
    return max(1, n)


def run_sweep(spec: SweepSpec, workers: Optional[int] = 1) -> list[SweepRow]:
    """Run every value of ``spec``; rows come back in input order whatever the worker count."""
    tasks = [(i, v, spec.base, spec.field_name, spec.criterion) for i, v in enumerate(spec.values)]
    n = min(worker_limit(workers), len(tasks))
    if n <= 1:
        return [_sweep_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_sweep_one, tasks))


def write_sweep(path, spec: SweepSpec, rows: list[SweepRow], full_precision: bool = False) -> Path:
    header = (
        "index",
        spec.field_name,
        "ultimate_load_kN",
        "peak_load_kN",
        "hinge_count",
        "sliding",
        "reached_criterion",
        "termination",
        "status",
        "message",
    )
    data = (
        (r.index, r.value, r.ultimate_load, r.peak_load, r.hinge_count, r.sliding, r.reached_criterion, r.termination, r.status, r.message)
        for r in rows
    )
    return exports.write_csv(path, header, data, full_precision)


def shear_study(data: dict, t_over_R: list[float], n_modes: int) -> list[tuple]:
    """Frequencies with finite and rigid shear for each thickness ratio.

    Rows ``(t/R, mode, f_finite Hz, f_rigid Hz, increase %)``.
    """
    rows = []
    for ratio in t_over_R:
        d = set_thickness_ratio(data, ratio) if ratio is not None else data
        finite = solve_modal(model_from_dict(with_overrides(d, {"rigid_shear": False})).mesh, n_modes)
        rigid_model = model_from_dict(with_overrides(d, {"rigid_shear": True}))
        rigid = solve_modal(rigid_model.mesh, n_modes, rigid_model.options)
        for k, (f0, f1) in enumerate(zip(finite.frequencies, rigid.frequencies)):
            rows.append((ratio if ratio is not None else math.nan, k + 1, float(f0), float(f1), 100.0 * (f1 / f0 - 1.0)))
    return rows


# --------------------------------------------------------------------------- click plumbing


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _guard(fn):
    """Map exceptions to exit codes with a one-line diagnostic on stderr."""

    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs) or EXIT_OK
        except _Fail as exc:
            click.echo(f"error: {exc}", err=True)
            code = exc.code
        except ModelFileError as exc:
            click.echo(f"error: invalid model file {exc.source}", err=True)
            for d in exc.diagnostics:
                click.echo(f"  {d}", err=True)
            code = EXIT_INPUT
        except (MeshError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_INPUT
        except MechanismError as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_CONVERGENCE
        except Exception:  # pragma: no cover - defensive
            click.echo("internal error:", err=True)
            click.echo(traceback.format_exc(), err=True)
            code = EXIT_INTERNAL
        sys.exit(code)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


_model_arg = click.argument("model_file", type=click.Path(dir_okay=False))
_out_opt = click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True, help="Directory for CSV outputs.")
_precision_opt = click.option("--full-precision", is_flag=True, help="Write full double precision instead of 6 significant digits.")


@click.group()
@click.version_option(package_name="archdmem")
def main():
    """Discrete macro-element analysis of plane masonry arches."""


@main.command()
@_model_arg
@_out_opt
@click.option("--n-modes", type=int, default=None, help="Number of modes (default: file, then 4).")
@click.option("--rigid-shear", is_flag=True, default=None, help="Constrain the element shear distortion (G -> infinity).")
@click.option("--compare-rigid-shear", is_flag=True, help="Paired table of finite vs rigid shear frequencies.")
@click.option("--t-over-r", "t_over_r", type=float, multiple=True, help="Thickness ratios for --compare-rigid-shear (circular arches).")
@_precision_opt
@_guard
def modal(model_file, out_dir, n_modes, rigid_shear, compare_rigid_shear, t_over_r, full_precision):
    """Natural frequencies and periods of the initial elastic model."""
    model = load_model(model_file, {"n_modes": n_modes, "rigid_shear": rigid_shear})
    n = model.analysis["n_modes"]
    if n < 0:
        raise _Fail(EXIT_INPUT, "--n-modes must be >= 0")
    out = Path(out_dir)
    if compare_rigid_shear:
        rows = shear_study(model.data, list(t_over_r) or [None], n)
        path = exports.write_csv(
            out / "modal_shear_study.csv", ("t_over_R", "mode", "frequency_Hz", "frequency_rigid_shear_Hz", "increase_pct"), rows, full_precision
        )
        click.echo(f"{'t/R':>8} {'mode':>4} {'f (Hz)':>10} {'f rigid (Hz)':>13} {'increase %':>10}")
        for ratio, k, f0, f1, pct in rows:
            click.echo(f"{ratio:8.3g} {k:4d} {f0:10.4g} {f1:13.4g} {pct:10.3g}")
        click.echo(f"wrote {path}")
        return EXIT_OK
    result = solve_modal(model.mesh, n, model.options)
    path = exports.write_modal(out / "modal.csv", result, full_precision)
    ref = model.reference.get("frequencies")
    if ref:
        click.echo(f"{'mode':>4} {'f (Hz)':>10} {'reference':>10} {'error %':>8}")
        for k, f in enumerate(result.frequencies):
            r = ref[k] if k < len(ref) else math.nan
            click.echo(f"{k + 1:4d} {f:10.4g} {r:10.4g} {100 * (f / r - 1):8.3g}")
    else:
        click.echo(f"{'mode':>4} {'f (Hz)':>10} {'T (s)':>10}")
        for k, f in enumerate(result.frequencies):
            click.echo(f"{k + 1:4d} {f:10.4g} {1 / f:10.4g}")
    click.echo(f"wrote {path}")
    return EXIT_OK


def _pushover_outputs(model: Model, result: StaticResult, out: Path, magnification: float, damage_steps: str, full_precision: bool) -> list[Path]:
    s = result.structure
    paths = [exports.write_capacity_curve(out / "capacity_curve.csv", result.curve, full_precision)]
    if result.snapshots:
        paths.append(exports.write_hinge_timeline(out / "hinge_timeline.csv", hinge_timeline(s, result.snapshots), full_precision))
        last = result.snapshots[-1]
        paths += exports.write_hinges_at_steps(out, s, result.snapshots, [last.step], full_precision)
        paths.append(exports.write_deformed_shape(out / "deformed_shape.csv", model.mesh, last.d, magnification, full_precision))
        if damage_steps == "all":
            chosen = result.snapshots
        elif damage_steps == "last":
            chosen = [last]
        else:
            chosen = []
        for snap in chosen:
            paths.append(exports.write_damage_map(out / f"damage_step_{snap.step}.csv", s, snap, full_precision))
    mode = result.mechanism
    if mode is None and result.curve.load:
        K = evaluate(s, result.state, result.state.d).K[: s.n_free, : s.n_free]
        mode = near_null_mode(K)[1]
    if mode is not None:
        paths.append(exports.write_mechanism(out / "mechanism.csv", mode, full_precision))
    return paths


@main.command()
@_model_arg
@_out_opt
@click.option("--step", type=float, default=None, help="Displacement increment (mm).")
@click.option("--target", "target_displacement", type=float, default=None, help="Target monitored displacement (mm).")
@click.option("--criterion", type=float, default=None, help="Displacement (mm) at which the ultimate load is read.")
@click.option("--gravity-steps", type=int, default=None)
@click.option("--tol", type=float, default=None, help="Relative residual tolerance.")
@click.option("--magnification", type=float, default=100.0, show_default=True, help="Deformed-shape magnification factor.")
@click.option("--damage-steps", type=click.Choice(["none", "last", "all"]), default="last", show_default=True, help="Steps with a per-fiber damage map.")
@_precision_opt
@_guard
def pushover(model_file, out_dir, step, target_displacement, criterion, gravity_steps, tol, magnification, damage_steps, full_precision):
    """Gravity then displacement-controlled pushover up to the target displacement."""
    model = load_model(
        model_file, {"step": step, "target_displacement": target_displacement, "criterion": criterion, "gravity_steps": gravity_steps, "tol": tol}
    )
    result = run_static(model.mesh, model.protocol, model.options)
    out = Path(out_dir)
    paths = _pushover_outputs(model, result, out, magnification, damage_steps, full_precision)
    crit = model.analysis["criterion"]
    summary = summarise(result, crit)
    click.echo(f"termination: {result.termination}")
    if result.curve.load and len(result.curve.load) > 1:
        F_peak, u_peak = peak_load(result.curve)
        click.echo(f"peak load: {F_peak:.6g} kN at {u_peak:.6g} mm")
        click.echo(f"residual load: {residual_plateau(result.curve, model.analysis['residual_window']):.6g} kN")
        note = "" if summary["reached_criterion"] else " (curve ends before the criterion: last load)"
        click.echo(f"ultimate load at {crit:.6g} mm: {summary['ultimate_load']:.6g} kN{note}")
        click.echo(f"hinges: {summary['hinge_count']}, sliding: {'yes' if summary['sliding'] else 'no'}")
    for p in paths:
        click.echo(f"wrote {p}")
    if not result.converged:
        for k, v in result.diagnostic.items():
            if k != "residual_history":
                click.echo(f"  {k}: {v}", err=True)
        raise _Fail(EXIT_CONVERGENCE, f"analysis stopped: {result.termination}")
    return EXIT_OK


@main.command()
@_model_arg
@_out_opt
@click.option("--parameter", type=click.Choice(sorted(SWEEP_PARAMETERS)), required=True, help="Parameter to vary.")
@click.option("--values", "values_text", default=None, help="Comma-separated values; 'inf' allowed for G_t.")
@click.option("--range", "value_range", type=(float, float, float), default=None, help="START STOP STEP (inclusive).")
@click.option("--criterion", type=float, default=None, help="Displacement (mm) for the ultimate load.")
@click.option("--target", "target_displacement", type=float, default=None, help="Target monitored displacement (mm).")
@click.option("--step", type=float, default=None, help="Displacement increment (mm).")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel analyses (capped by ARCHDMEM_THREADS).")
@_precision_opt
@_guard
def sweep(model_file, out_dir, parameter, values_text, value_range, criterion, target_displacement, step, workers, full_precision):
    """One pushover per parameter value; writes sweep.csv ordered by input."""
    if (values_text is None) == (value_range is None):
        raise _Fail(EXIT_INPUT, "give exactly one of --values or --range")
    if values_text is not None:
        try:
            values = tuple(float(v) for v in values_text.split(",") if v.strip())
        except ValueError as exc:
            raise _Fail(EXIT_INPUT, f"--values: {exc}") from exc
    else:
        start, stop, inc = value_range
        if not inc > 0 or stop < start:
            raise _Fail(EXIT_INPUT, "--range needs STEP > 0 and STOP >= START")
        n = int(math.floor((stop - start) / inc + 1e-9)) + 1
        values = tuple(round(start + k * inc, 12) for k in range(n))
    if workers < 1:
        raise _Fail(EXIT_INPUT, "--workers must be >= 1")
    model = load_model(model_file, {"criterion": criterion, "target_displacement": target_displacement, "step": step})
    spec = SweepSpec(parameter, values, model.analysis["criterion"], model.data)
    rows = run_sweep(spec, workers)
    path = write_sweep(Path(out_dir) / "sweep.csv", spec, rows, full_precision)
    click.echo(f"{spec.field_name:>12} {'F_u (kN)':>10} {'hinges':>6} {'sliding':>7}  status")
    for r in rows:
        click.echo(f"{r.value:12.6g} {r.ultimate_load:10.6g} {r.hinge_count:6d} {('yes' if r.sliding else 'no'):>7}  {r.status} {r.message}")
    click.echo(f"wrote {path}")
    if all(r.status != "ok" for r in rows):
        raise _Fail(EXIT_CONVERGENCE, "every analysis of the sweep failed")
    return EXIT_OK


@main.command()
@_model_arg
@_guard
def validate(model_file):
    """Check a model file against the schema and the mesh invariants."""
    model = load_model(model_file)
    click.echo(
        f"{model_file}: valid ({model.mesh.n_elements} elements, {len(model.mesh.interfaces)} interfaces, "
        f"{sum(itf.n_f for itf in model.mesh.interfaces)} fibers)"
    )
    return EXIT_OK


@main.command("export-mesh")
@_model_arg
@_out_opt
@_precision_opt
@_guard
def export_mesh(model_file, out_dir, full_precision):
    """Write element vertices and interface end points as CSV."""
    model = load_model(model_file)
    for p in exports.write_mesh(out_dir, model.mesh, full_precision):
        click.echo(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    main()
