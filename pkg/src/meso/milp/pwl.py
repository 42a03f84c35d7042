"""Secant (piecewise-linear) over-approximation of convex quadratic costs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NonconvexError


@dataclass(frozen=True)
class PiecewiseLinear:
    breakpoints: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    c2: float
    c1: float
    c0: float

    @property
    def segments(self):
        return self.slopes.size

    @property
    def error_bound(self) -> float:
        """Worst overestimate of the quadratic on one segment: ``c2 * h**2 / 4``."""
        h = self.breakpoints[1] - self.breakpoints[0] if self.breakpoints.size > 1 else 0.0
        return self.c2 * h * h / 4.0

    def quadratic(self, p):
        p = np.asarray(p, dtype=float)
        return self.c2 * p * p + self.c1 * p + self.c0

    def __call__(self, p):
        """Epigraph value ``max_j (slope_j * p + intercept_j)``."""
        p = np.asarray(p, dtype=float)
        return np.max(np.multiply.outer(p, self.slopes) + self.intercepts, axis=-1)


def linearize_convex_quadratic(c2, c1, c0, p_max, segments=8, p_min=0.0) -> PiecewiseLinear:
    if c2 < 0:
        raise NonconvexError(f"quadratic coefficient {c2} < 0")
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if not (math.isfinite(p_max) and p_max > p_min):
        raise ValueError("need a finite range with p_max > p_min")
    if c2 == 0:
        segments = 1
    bp = np.linspace(p_min, p_max, segments + 1)
    f = c2 * bp * bp + c1 * bp + c0
    slopes = np.diff(f) / np.diff(bp)
    intercepts = f[:-1] - slopes * bp[:-1]
    return PiecewiseLinear(bp, slopes, intercepts, float(c2), float(c1), float(c0))


def add_epigraph(model, pwl: PiecewiseLinear, power, flag=None, name="fuel"):
    """Cost variable ``z >= slope_j * power + intercept_j * flag`` for every segment.

    With ``flag`` (the dispatch state) the intercepts are gated so ``z`` may
    drop to zero when the unit is off and ``power`` is forced to zero.
    """
    lo = float(np.min(pwl(pwl.breakpoints)))
    hi = float(np.max(pwl(pwl.breakpoints)))
    z = model.add_var(name, min(0.0, lo), max(0.0, hi))
    for j, (s, b) in enumerate(zip(pwl.slopes, pwl.intercepts)):
        rhs = z - s * power
        if flag is None:
            model.add(rhs, ">=", b, f"{name}.seg{j}")
        else:
            model.add(rhs - b * flag, ">=", 0.0, f"{name}.seg{j}")
    return z
