"""Golden-section search and grid-then-refine minimization in one dimension."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, a, b, tol, max_iter=500):
    """Minimize a unimodal ``f`` on ``[a, b]`` until the bracket is below ``tol``.

    Returns ``(x, f(x))`` for the best point evaluated.
    """
    if b < a:
        a, b = b, a
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    return (c, fc) if fc <= fd else (d, fd)


def grid_refine_min(f_vec, f, lo, hi, n_grid, tol):
    """Evaluate ``f_vec`` on a uniform grid, then golden-refine the best cell.

    ``f_vec`` evaluates an array of points, ``f`` a single point.  The result
    is never worse than the best grid point.
    """
    if hi <= lo:
        return lo, float(f(lo))
    xs = np.linspace(lo, hi, n_grid)
    vals = f_vec(xs)
    i = int(np.argmin(vals))
    x_best, f_best = float(xs[i]), float(vals[i])
    left = xs[max(i - 1, 0)]
    right = xs[min(i + 1, n_grid - 1)]
    x_ref, f_ref = golden_section_min(f, float(left), float(right), tol)
    if f_ref < f_best:
        return float(x_ref), float(f_ref)
    return x_best, f_best
