"""One-dimensional minimization helpers: golden section and grid bracketing."""

from __future__ import annotations

import numpy as np

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0  # 0.618...


def golden_section(f, lo: float, hi: float, xtol: float = 1e-6) -> tuple[float, float]:
    """Minimize a unimodal function on [lo, hi]; returns (argmin, min value).

    One evaluation per step after the first two; stops when the bracket is
    narrower than xtol.
    """
    a, b = float(lo), float(hi)
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > xtol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


def grid_bracket(f, lo: float, hi: float, n: int) -> tuple[float, float, list[float]]:
    """Evaluate f on an n-point grid and return the bracket around the best point.

    Non-finite values are tolerated (they simply lose the argmin); if the grid
    shows several interior local minima it is refined once at double density
    before choosing, since a single golden-section pass assumes unimodality.
    """
    if n < 3:
        raise ValueError("grid needs at least 3 points")

    def scan(k):
        xs = np.linspace(lo, hi, k)
        return xs, np.array([f(x) for x in xs])

    xs, vals = scan(n)
    finite = np.isfinite(vals)
    if not finite.any():
        raise RuntimeError("objective failed everywhere on the bracket grid")
    interior_minima = [
        i
        for i in range(1, len(xs) - 1)
        if finite[i] and vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]
    ]
    if len(interior_minima) > 1:
        xs, vals = scan(2 * n - 1)
        finite = np.isfinite(vals)
    best = int(np.nanargmin(np.where(finite, vals, np.nan)))
    left = xs[max(best - 1, 0)]
    right = xs[min(best + 1, len(xs) - 1)]
    return float(left), float(right), vals.tolist()
