"""Shared helpers for the benchmark scripts."""

import json
import math

from archdmem.cli import SweepSpec, run_sweep
from archdmem.model_io import fixture_path, with_overrides


def fixture_data(name: str, **analysis) -> dict:
    data = json.loads(fixture_path(name).read_text())
    return with_overrides(data, analysis) if analysis else data


def sweep_loads(parameter: str, values, criterion: float, base: dict, workers: int = 1):
    """Ultimate loads (NaN for failed analyses) and the raw sweep rows."""
    rows = run_sweep(SweepSpec(parameter, tuple(values), criterion, base=base), workers)
    return [r.ultimate_load if r.status == "ok" else math.nan for r in rows], rows
