"""Photon-number statistics of a heralded parametric down-conversion source.

The source emits n photon pairs with the thermal probability
``p_n = mu**n / (1 + mu)**(n + 1)``.  One photon of every pair goes to Alice's
threshold trigger detector D_A (efficiency ``eta_A``, dark-count probability
``d_A``), which clicks with probability ``gamma_n = 1 - (1 - d_A)(1 - eta_A)**n``.
Every pulse therefore lands either in the triggered ensemble
(``p_t_n = p_n gamma_n``) or in the nontriggered one (``p_nt_n = p_n (1 -
gamma_n)``), and the per-n odds ``r_n = gamma_n / (1 - gamma_n)`` are fixed by
Alice's hardware alone.

Loss between the crystal and D_A is assumed to be folded into ``eta_A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError, UnboundedOddsError, ValidationError

__all__ = [
    "SourceParams",
    "TailPolicy",
    "SourceStats",
    "photon_number_dist",
    "trigger_prob",
    "trigger_odds",
    "source_stats",
]


@dataclass(frozen=True)
class SourceParams:
    """PDC strength plus trigger-detector characteristics.

    ``eta_A == 1`` is accepted so the conventional analysis (which never
    needs the odds) can model an ideal trigger; the odds-based operations
    raise :class:`UnboundedOddsError` in that case.
    """

    mu: float
    eta_A: float
    d_A: float

    def __post_init__(self):
        for name in ("mu", "eta_A", "d_A"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.mu < 0:
            raise ValidationError(f"mu must be >= 0, got {self.mu}")
        if not 0.0 <= self.eta_A <= 1.0:
            raise ValidationError(f"eta_A must lie in [0, 1], got {self.eta_A}")
        if not 0.0 <= self.d_A < 1.0:
            raise ValidationError(f"d_A must lie in [0, 1), got {self.d_A}")

    def with_mu(self, mu: float) -> "SourceParams":
        return SourceParams(mu, self.eta_A, self.d_A)


@dataclass(frozen=True)
class TailPolicy:
    """Truncation rule for the photon-number distribution."""

    tol: float = 1e-14
    cap: int = 100_000


def _log_survival(params: SourceParams, n):
    """log of (1 - d_A)(1 - eta_A)**n, the no-trigger probability."""
    n = np.asarray(n, dtype=float)
    log_dark = math.log1p(-params.d_A)
    if params.eta_A == 1.0:
        return np.where(n == 0, log_dark, -np.inf)
    return log_dark + n * math.log1p(-params.eta_A)


def photon_number_dist(params: SourceParams, n: int) -> float:
    """Probability of emitting exactly ``n`` photon pairs."""
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n}")
    mu = params.mu
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mu) - (n + 1) * math.log1p(mu))


def trigger_prob(params: SourceParams, n: int) -> float:
    """Probability gamma_n that D_A clicks when n photons reach it."""
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n}")
    return float(-np.expm1(_log_survival(params, n)))


def trigger_odds(params: SourceParams, n: int) -> float:
    """Trigger odds r_n = gamma_n / (1 - gamma_n)."""
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n}")
    log_s = float(_log_survival(params, n))
    if log_s == -math.inf:
        raise UnboundedOddsError(f"trigger odds unbounded for eta_A=1, n={n}")
    return math.expm1(-log_s)


def _truncation_order(mu: float, policy: TailPolicy) -> int:
    """Smallest N >= 1 whose neglected tail is below ``tol`` relative to the
    non-vacuum mass, i.e. (mu/(1+mu))**N < tol.

    The relative form keeps truncated sums accurate to ~tol even when mu is
    so small that an absolute tail bound would stop after a couple of terms.
    """
    if mu == 0.0:
        return 0
    log_ratio = math.log(mu) - math.log1p(mu)
    log_tol = math.log(policy.tol)
    n_max = max(1, math.ceil(log_tol / log_ratio))
    while n_max * log_ratio >= log_tol:
        n_max += 1
    while n_max > 1 and (n_max - 1) * log_ratio < log_tol:
        n_max -= 1
    if n_max > policy.cap:
        tail = math.exp((policy.cap + 1) * log_ratio)
        raise TruncationError(f"photon-number cap {policy.cap} reached for mu={mu}", tail)
    return n_max


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SourceStats:
    """Truncated per-photon-number vectors for a source configuration.

    Index ``n`` of every vector is the photon number.  ``odds`` holds
    ``inf`` where ``gamma_n == 1`` (ideal trigger).
    """

    params: SourceParams
    p: np.ndarray
    gamma: np.ndarray
    survival: np.ndarray
    odds: np.ndarray
    p_t: np.ndarray
    p_nt: np.ndarray
    tail_mass: float
    policy: TailPolicy = field(default_factory=TailPolicy)

    @property
    def n_max(self) -> int:
        return len(self.p) - 1

    @property
    def n(self) -> np.ndarray:
        return np.arange(len(self.p))

    def r(self, n: int) -> float:
        """Odds r_n; past the truncation the analytic value is returned."""
        if n < len(self.odds):
            value = float(self.odds[n])
            if math.isinf(value):
                raise UnboundedOddsError(f"trigger odds unbounded for eta_A=1, n={n}")
            return value
        return trigger_odds(self.params, n)

    @property
    def p_t_multi(self) -> float:
        """Triggered multi-photon probability sum_{n>=2} p_t_n (tail included)."""
        return float(np.sum(self.p_t[2:])) + self.tail_mass


def source_stats(params: SourceParams, truncation: TailPolicy | None = None) -> SourceStats:
    """Build the triggered/nontriggered photon-number vectors for ``params``."""
    policy = truncation or TailPolicy()
    n_max = _truncation_order(params.mu, policy)
    n = np.arange(n_max + 1, dtype=float)
    mu = params.mu
    if mu == 0.0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        tail = 0.0
    else:
        log_ratio = math.log(mu) - math.log1p(mu)
        p = np.exp(n * log_ratio - math.log1p(mu))
        tail = math.exp((n_max + 1) * log_ratio)
    log_s = _log_survival(params, n)
    survival = np.exp(log_s)
    gamma = -np.expm1(log_s)
    with np.errstate(over="ignore"):
        odds = np.expm1(-log_s)
    return SourceStats(
        params=params,
        p=_frozen(p),
        gamma=_frozen(gamma),
        survival=_frozen(survival),
        odds=_frozen(odds),
        p_t=_frozen(p * gamma),
        p_nt=_frozen(p * survival),
        tail_mass=tail,
        policy=policy,
    )
