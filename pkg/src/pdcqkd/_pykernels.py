"""Pure-Python/numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them statement
for statement.
"""

from __future__ import annotations

import math

import numpy as np

from .golden import grid_refine_min


def h2(e):
    """Binary entropy in bits with H2(0) = H2(1) = 0 (scalar or array)."""
    e = np.asarray(e, dtype=float)
    inside = (e > 0.0) & (e < 1.0)
    safe = np.where(inside, e, 0.5)
    out = -safe * np.log2(safe) - (1.0 - safe) * np.log2(1.0 - safe)
    return np.where(inside, out, 0.0)


def _h2_scalar(e):
    if e <= 0.0 or e >= 1.0:
        return 0.0
    return -e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e)


def bracket_objective(x, c0, c1, r0, r1, r2, r, E_t, E_nt):
    """c0*x + c1*xi(x)*[1 - H2(eps(x))] on an array of vacuum fractions.

    xi <= 0 removes the single-photon credit; eps is clamped into [0, 1/2].
    """
    x = np.asarray(x, dtype=float)
    xi = (r2 - r - (r2 - r0) * x) / (r2 - r1)
    pos = xi > 0.0
    xi_safe = np.where(pos, xi, 1.0)
    eps_t = (2.0 * r * E_t - r0 * x) / (2.0 * r1 * xi_safe)
    eps_nt = (2.0 * E_nt - x) / (2.0 * xi_safe)
    eps = np.clip(np.minimum(eps_t, eps_nt), 0.0, 0.5)
    single = np.where(pos, c1 * xi_safe * (1.0 - h2(eps)), 0.0)
    return c0 * x + single


def bracket_objective_scalar(x, c0, c1, r0, r1, r2, r, E_t, E_nt):
    xi = (r2 - r - (r2 - r0) * x) / (r2 - r1)
    if xi <= 0.0:
        return c0 * x
    eps_t = (2.0 * r * E_t - r0 * x) / (2.0 * r1 * xi)
    eps_nt = (2.0 * E_nt - x) / (2.0 * xi)
    eps = min(eps_t, eps_nt)
    eps = min(max(eps, 0.0), 0.5)
    return c0 * x + c1 * xi * (1.0 - _h2_scalar(eps))


def minimize_bracket(c0, c1, r0, r1, r2, r, E_t, E_nt, x_hi, n_grid, rel_tol):
    """Grid + golden minimization of the bracket objective over [0, x_hi]."""
    args = (c0, c1, r0, r1, r2, r, E_t, E_nt)
    return grid_refine_min(
        lambda xs: bracket_objective(xs, *args),
        lambda x: bracket_objective_scalar(x, *args),
        0.0,
        x_hi,
        n_grid,
        rel_tol * x_hi,
    )


def tally_pulses(u, cdf_n, gamma, cat_cdf, p_d, attack_Y, attack_e, counts):
    """Classify a batch of pulses from their uniforms and add to ``counts``.

    ``u`` has six uniforms per pulse: photon number, trigger, photon
    arrival category (or attack detection), right-detector background
    (or attack error), wrong-detector background, double-click bit.
    ``counts`` has shape (2, n_max + 1, 3): trigger flag, photon number,
    outcome (0 none, 1 correct click, 2 erroneous click).
    """
    n_top = len(cdf_n) - 1
    n = np.searchsorted(cdf_n, u[:, 0], side="right")
    np.minimum(n, n_top, out=n)
    trig = u[:, 1] < gamma[n]
    if attack_Y is not None:
        det = u[:, 2] < attack_Y[n]
        err = det & (u[:, 3] < attack_e[n])
    else:
        cc = cat_cdf[n]
        cat = (
            (u[:, 2] >= cc[:, 0]).astype(np.int64)
            + (u[:, 2] >= cc[:, 1])
            + (u[:, 2] >= cc[:, 2])
        )
        right = (cat >= 2) | (u[:, 3] < p_d)
        wrong = (cat == 1) | (cat == 3) | (u[:, 4] < p_d)
        det = right | wrong
        err = wrong & (~right | (u[:, 5] < 0.5))
    outcome = det.astype(np.int64) + err
    flat = (trig.astype(np.int64) * (n_top + 1) + n) * 3 + outcome
    counts += np.bincount(flat, minlength=counts.size).reshape(counts.shape)
