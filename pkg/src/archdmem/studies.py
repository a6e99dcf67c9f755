"""Reductions of parametric studies to the scalar quantities that are compared with published data.

All functions are pure: they take already computed sweep values and loads.
The analyses themselves are run with :func:`archdmem.cli.run_sweep` or
:func:`archdmem.solver.run_static`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class FrictionStudy:
    """Ultimate load against friction coefficient for one load position."""

    mu: np.ndarray
    load: np.ndarray  # kN, NaN where the analysis failed
    sliding: np.ndarray  # bool, sliding in the final state

    def __post_init__(self):
        self.mu = np.asarray(self.mu, float)
        self.load = np.asarray(self.load, float)
        self.sliding = np.asarray(self.sliding, bool)
        order = np.argsort(self.mu)
        self.mu, self.load, self.sliding = self.mu[order], self.load[order], self.sliding[order]

    @property
    def plateau(self) -> float:
        """Load at the largest friction coefficient (the flexural-collapse plateau)."""
        return float(self.load[np.isfinite(self.load)][-1])

    def critical_mu(self, rel_tol: float = 0.01) -> float:
        """Smallest coefficient from which every larger one reaches the plateau within ``rel_tol``."""
        ok = np.isfinite(self.load) & (np.abs(self.load - self.plateau) <= rel_tol * self.plateau)
        idx = len(ok)
        while idx > 0 and ok[idx - 1]:
            idx -= 1
        return float(self.mu[idx]) if idx < len(ok) else math.nan

    def subcritical(self, rel_tol: float = 0.01):
        """Coefficients and loads of the converged analyses below the critical value."""
        mask = np.isfinite(self.load) & (self.mu < self.critical_mu(rel_tol))
        return self.mu[mask], self.load[mask]


def r_squared(x, y) -> float:
    """Coefficient of determination of the least-squares straight line through ``(x, y)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 3:
        return math.nan
    coef = np.polyfit(x, y, 1)
    res = y - np.polyval(coef, x)
    tot = y - y.mean()
    return float(1.0 - res @ res / (tot @ tot))


def relative_error(value: float, reference: float) -> float:
    return (value - reference) / reference


def is_non_decreasing(values, rel_tol: float = 0.0) -> bool:
    v = np.asarray(values, float)
    return bool(np.all(np.diff(v) >= -rel_tol * np.abs(v[:-1])))


def is_strictly_increasing(values) -> bool:
    return bool(np.all(np.diff(np.asarray(values, float)) > 0))
