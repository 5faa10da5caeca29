"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it was built; otherwise
the numpy implementations in ``_pykernels`` are used.  :func:`set_backend`
switches explicitly (benchmarks and cross-backend tests do this).
"""

from __future__ import annotations

from . import _pykernels
from .errors import ValidationError

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("compiled", "python")

_active = _ckernels if _ckernels is not None else _pykernels


def compiled_available() -> bool:
    return _ckernels is not None


def get_backend() -> str:
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def set_backend(name: str) -> str:
    """Select ``"compiled"``, ``"python"`` or ``"auto"``; returns the active name."""
    global _active
    if name == "auto":
        _active = _ckernels if _ckernels is not None else _pykernels
    elif name == "compiled":
        if _ckernels is None:
            raise ValidationError("compiled kernels are not built; reinstall with a C compiler and Cython")
        _active = _ckernels
    elif name == "python":
        _active = _pykernels
    else:
        raise ValidationError(f"unknown backend {name!r}; expected auto, compiled or python")
    return get_backend()


def minimize_bracket(c0, c1, r0, r1, r2, r, E_t, E_nt, x_hi, n_grid, rel_tol):
    return _active.minimize_bracket(
        float(c0), float(c1), float(r0), float(r1), float(r2), float(r),
        float(E_t), float(E_nt), float(x_hi), int(n_grid), float(rel_tol),
    )


def tally_pulses(u, cdf_n, gamma, cat_cdf, p_d, attack_Y, attack_e, counts):
    _active.tally_pulses(u, cdf_n, gamma, cat_cdf, float(p_d), attack_Y, attack_e, counts)


bracket_objective = _pykernels.bracket_objective
h2 = _pykernels.h2
