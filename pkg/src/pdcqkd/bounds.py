"""Single-photon bounds and key rates for the triggered/nontriggered analysis.

Comparing the observed ratio ``r = Q_t / Q_nt`` with the fixed odds
``r_0 < r_1 < r_2 < ...`` bounds the single-photon part of the detections.
With the unknown vacuum fraction ``x = Q_nt_0 / Q_nt`` the single-photon
fraction of the nontriggered detections is at least ``xi(x)`` and the
single-photon QBER is at most ``eps(x)``; the key rate takes the worst case
over the feasible ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ChannelParams, RateSummary, error_weighted_yield_n, yield_n
from .errors import DegenerateObservablesError, UndefinedBoundError, ValidationError
from .source import SourceStats

__all__ = [
    "ProtocolConstants",
    "MinimizerPolicy",
    "StrategyRate",
    "KeyRateResult",
    "binary_entropy",
    "xi",
    "eps_bound",
    "x_range",
    "key_rate_triggered",
    "key_rate_both",
    "key_rate_conventional",
    "key_rate_ideal_single_photon",
    "final_rate",
]


@dataclass(frozen=True)
class ProtocolConstants:
    """Sifting efficiency ``q`` and error-correction inefficiency ``f_ec``.

    ``f_ec`` may be a number or a callable of the QBER.
    """

    q: float = 0.5
    f_ec: float | object = 1.22

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValidationError(f"q must lie in (0, 1], got {self.q}")
        if not callable(self.f_ec) and not self.f_ec >= 1.0:
            raise ValidationError(f"f_ec must be >= 1, got {self.f_ec}")

    def f(self, E: float) -> float:
        if callable(self.f_ec):
            value = float(self.f_ec(E))
            if not value >= 1.0:
                raise ValidationError(f"f_ec({E}) = {value} < 1")
            return value
        return float(self.f_ec)


@dataclass(frozen=True)
class MinimizerPolicy:
    grid_points: int = 4097
    rel_tol: float = 1e-12

    def __post_init__(self):
        if self.grid_points < 3:
            raise ValidationError("grid_points must be >= 3")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValidationError("rel_tol must lie in (0, 1)")


def binary_entropy(e):
    """H2(e) in bits, with H2(0) = H2(1) = 0."""
    if np.ndim(e) == 0:
        e = float(e)
        if not 0.0 <= e <= 1.0:
            raise ValidationError(f"binary entropy needs e in [0, 1], got {e}")
        return float(kernels.h2(e))
    return kernels.h2(e)


def xi(x, obs: RateSummary, r0: float, r1: float, r2: float):
    """Lower bound on Q_nt_1 / Q_nt given vacuum fraction ``x`` (may be negative)."""
    return (r2 - obs.r - (r2 - r0) * np.asarray(x, dtype=float)[()]) / (r2 - r1)


def eps_bound(x: float, obs: RateSummary, r0: float, r1: float, xi_val: float, clamp: bool = True) -> float:
    """Upper bound on the single-photon QBER e_1.

    The smaller of the triggered and nontriggered bounds; clamped into
    ``[0, 1/2]`` unless ``clamp`` is false.
    """
    if not xi_val > 0:
        raise UndefinedBoundError(f"xi = {xi_val} <= 0 gives no single-photon bound")
    eps_t = (2.0 * obs.r * obs.E_t - r0 * x) / (2.0 * r1 * xi_val)
    eps_nt = (2.0 * obs.E_nt - x) / (2.0 * xi_val)
    eps = min(eps_t, eps_nt)
    if clamp:
        eps = min(max(eps, 0.0), 0.5)
    return float(eps)


def x_range(obs: RateSummary, r0: float) -> float:
    """Upper end of the feasible vacuum fraction, min{2 E_t r / r0, 2 E_nt}."""
    hi = 2.0 * obs.E_nt
    if r0 > 0:
        hi = min(hi, 2.0 * obs.E_t * obs.r / r0)
    return hi


@dataclass(frozen=True)
class StrategyRate:
    """Key rate of one post-processing strategy plus its term breakdown.

    ``rate`` already includes the factor q.  ``ec_cost`` is the (positive)
    error-correction leak; ``vacuum_gain`` and ``single_gain`` are the two
    credited terms at the minimizing ``x_star``.
    """

    strategy: str
    rate: float
    x_star: float
    x_hi: float
    xi_at_min: float
    eps_at_min: float
    ec_cost: float
    vacuum_gain: float
    single_gain: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _odds(src: SourceStats):
    r0, r1, r2 = src.r(0), src.r(1), src.r(2)
    if not r0 < r1 < r2:
        raise ValidationError(
            f"need r0 < r1 < r2 (eta_A > 0); got {r0}, {r1}, {r2}"
        )
    return r0, r1, r2


def _strategy(name, obs, src, consts, minimizer, c0_shift, ec_cost):
    if not obs.Q_nt > 0:
        raise DegenerateObservablesError("Q_nt")
    r0, r1, r2 = _odds(src)
    c0, c1 = r0 + c0_shift, r1 + c0_shift
    x_hi = x_range(obs, r0)
    pol = minimizer or MinimizerPolicy()
    x_star, f_star = kernels.minimize_bracket(
        c0, c1, r0, r1, r2, obs.r, obs.E_t, obs.E_nt, x_hi, pol.grid_points, pol.rel_tol
    )
    xi_star = float(xi(x_star, obs, r0, r1, r2))
    if xi_star > 0:
        eps_star = eps_bound(x_star, obs, r0, r1, xi_star)
        single = c1 * xi_star * (1.0 - float(kernels.h2(eps_star)))
    else:
        eps_star = math.nan
        single = 0.0
    q = consts.q
    return StrategyRate(
        strategy=name,
        rate=q * (obs.Q_nt * f_star - ec_cost),
        x_star=float(x_star),
        x_hi=float(x_hi),
        xi_at_min=xi_star,
        eps_at_min=eps_star,
        ec_cost=q * ec_cost,
        vacuum_gain=q * obs.Q_nt * c0 * x_star,
        single_gain=q * obs.Q_nt * single,
    )


def key_rate_triggered(obs: RateSummary, src: SourceStats, consts: ProtocolConstants | None = None,
                       minimizer: MinimizerPolicy | None = None) -> StrategyRate:
    """Key rate distilled from the triggered events only."""
    consts = consts or ProtocolConstants()
    ec = obs.Q_t * consts.f(obs.E_t) * float(kernels.h2(obs.E_t))
    return _strategy("t", obs, src, consts, minimizer, 0.0, ec)


def key_rate_both(obs: RateSummary, src: SourceStats, consts: ProtocolConstants | None = None,
                  minimizer: MinimizerPolicy | None = None) -> StrategyRate:
    """Key rate with separate error correction but joint privacy amplification."""
    consts = consts or ProtocolConstants()
    ec = obs.Q_t * consts.f(obs.E_t) * float(kernels.h2(obs.E_t))
    if obs.Q_nt > 0:
        ec += obs.Q_nt * consts.f(obs.E_nt) * float(kernels.h2(obs.E_nt))
    return _strategy("both", obs, src, consts, minimizer, 1.0, ec)


def key_rate_conventional(obs: RateSummary, src: SourceStats, consts: ProtocolConstants | None = None) -> float:
    """Worst-case rate using only triggered data and Q_t_n <= p_t_n for n >= 2.

    No vacuum credit is given.  When Q_t <= p_t_multi the single-photon
    bound is vacuous and only the (negative) error-correction term remains.
    """
    consts = consts or ProtocolConstants()
    ec = obs.Q_t * consts.f(obs.E_t) * float(kernels.h2(obs.E_t))
    q1_lower = obs.Q_t - src.p_t_multi
    if q1_lower <= 0:
        return -consts.q * ec
    e1 = min(obs.Q_t * obs.E_t / q1_lower, 0.5)
    return consts.q * (q1_lower * (1.0 - float(kernels.h2(e1))) - ec)


def key_rate_ideal_single_photon(ch: ChannelParams, consts: ProtocolConstants | None = None) -> float:
    """Rate when every pulse carries exactly one photon (no multi-photon or vacuum)."""
    consts = consts or ProtocolConstants()
    Q = yield_n(ch, 1)
    if Q == 0:
        return 0.0
    E = error_weighted_yield_n(ch, 1) / Q
    h = float(kernels.h2(E))
    return consts.q * Q * (1.0 - h - consts.f(E) * h)


@dataclass(frozen=True)
class KeyRateResult:
    """Both strategies for one operating point and the selected final rate.

    Negative strategy rates are kept for diagnostics; ``R_final`` is
    clamped at zero.  ``R_both`` is None for protocols without it.
    """

    R_t: float
    R_both: float | None
    R_final: float
    selected: str
    x_star_t: float | None = None
    x_star_both: float | None = None
    xi_at_min: float | None = None
    eps_at_min: float | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def raw(self) -> float:
        """Best unclamped rate (what the mu optimizer maximizes)."""
        if self.R_both is None:
            return self.R_t
        return max(self.R_t, self.R_both)

    @property
    def x_star(self) -> float | None:
        return self.x_star_both if self.selected == "both" else self.x_star_t


def final_rate(rt: StrategyRate, rboth: StrategyRate) -> KeyRateResult:
    """R = max{R_both, R_t}, clamped at zero."""
    best = rboth if rboth.rate > rt.rate else rt
    return KeyRateResult(
        R_t=rt.rate,
        R_both=rboth.rate,
        R_final=max(rt.rate, rboth.rate, 0.0),
        selected=best.strategy,
        x_star_t=rt.x_star,
        x_star_both=rboth.x_star,
        xi_at_min=best.xi_at_min,
        eps_at_min=best.eps_at_min,
        diagnostics={"t": rt.as_dict(), "both": rboth.as_dict()},
    )
