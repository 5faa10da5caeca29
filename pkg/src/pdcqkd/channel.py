"""Fiber/detector model and aggregation into the four protocol observables.

Bob uses two threshold detectors of equal efficiency behind a polarizing
beam splitter, each with background click probability ``p_d`` per pulse.
A photon reaching Bob (probability ``eta = eta_c * eta_B``) hits the wrong
detector with probability ``e_d``.  Double clicks are resolved by a random
bit, which is already folded into the per-n error expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateObservablesError, ValidationError
from .source import SourceParams, SourceStats

__all__ = [
    "ChannelParams",
    "PerPhotonRates",
    "RateSummary",
    "yield_n",
    "error_weighted_yield_n",
    "yields",
    "error_weighted_yields",
    "error_rates",
    "observables",
    "observables_closed_form",
    "aggregate",
]


@dataclass(frozen=True)
class ChannelParams:
    """Channel loss and receiver characteristics (both detectors identical)."""

    alpha: float
    length_km: float
    eta_B: float
    p_d: float
    e_d: float

    def __post_init__(self):
        for name in ("alpha", "length_km", "eta_B", "p_d", "e_d"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.alpha < 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")
        if self.length_km < 0:
            raise ValidationError(f"length_km must be >= 0, got {self.length_km}")
        if not 0.0 <= self.eta_B <= 1.0:
            raise ValidationError(f"eta_B must lie in [0, 1], got {self.eta_B}")
        if not 0.0 <= self.p_d < 1.0:
            raise ValidationError(f"p_d must lie in [0, 1), got {self.p_d}")
        if not 0.0 <= self.e_d <= 0.5:
            raise ValidationError(f"e_d must lie in [0, 0.5], got {self.e_d}")

    @property
    def eta_c(self) -> float:
        """Channel transmission 10**(-alpha * l / 10)."""
        return 10.0 ** (-self.alpha * self.length_km / 10.0)

    @property
    def eta(self) -> float:
        """End-to-end single-photon detection probability, excluding background."""
        return self.eta_c * self.eta_B

    def with_length(self, length_km: float) -> "ChannelParams":
        return replace(self, length_km=length_km)


def _one_minus_pow(x: float, n):
    """1 - (1 - x)**n without cancellation; x in [0, 1]."""
    n = np.asarray(n, dtype=float)
    if x == 1.0:
        return np.where(n == 0, 0.0, 1.0)
    return -np.expm1(n * math.log1p(-x))


def yields(ch: ChannelParams, n) -> np.ndarray:
    """Detection probability given n photons sent: 1 - (1-eta)^n (1-p_d)^2."""
    n = np.asarray(n, dtype=float)
    eta = ch.eta
    if eta == 1.0:
        log_t = np.where(n == 0, 0.0, -np.inf)
    else:
        log_t = n * math.log1p(-eta)
    return -np.expm1(log_t + 2.0 * math.log1p(-ch.p_d))


def error_weighted_yields(ch: ChannelParams, n) -> np.ndarray:
    """Erroneous-detection probability given n photons sent (Q_n e_n / p_n)."""
    n = np.asarray(n, dtype=float)
    eta, e_d = ch.eta, ch.e_d
    # (1 - eta e_d)^n - (1 - eta + eta e_d)^n, rewritten as a difference of 1 - (.)^n terms
    diff = _one_minus_pow(eta * (1.0 - e_d), n) - _one_minus_pow(eta * e_d, n)
    return 0.5 * (yields(ch, n) - (1.0 - ch.p_d) * diff)


def error_rates(ch: ChannelParams, n) -> np.ndarray:
    """Per-n QBER e_n; 0 where the yield vanishes, exactly 1/2 at n = 0."""
    y = yields(ch, n)
    w = error_weighted_yields(ch, n)
    with np.errstate(invalid="ignore", divide="ignore"):
        e = np.where(y > 0, w / np.where(y > 0, y, 1.0), 0.0)
    return e


def yield_n(ch: ChannelParams, n: int) -> float:
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n}")
    return float(yields(ch, n))


def error_weighted_yield_n(ch: ChannelParams, n: int) -> float:
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n}")
    return float(error_weighted_yields(ch, n))


@dataclass(frozen=True)
class PerPhotonRates:
    """Per-photon-number contributions (not observable in a real run)."""

    Q_t_n: np.ndarray
    Q_nt_n: np.ndarray
    e_n: np.ndarray


@dataclass(frozen=True)
class RateSummary:
    """The four observed quantities and their ratio r = Q_t / Q_nt."""

    Q_t: float
    E_t: float
    Q_nt: float
    E_nt: float
    r: float
    per_n: PerPhotonRates | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_sums(cls, Q_t, QE_t, Q_nt, QE_nt, per_n=None, allow_empty_nt=False):
        if not Q_t > 0:
            raise DegenerateObservablesError("Q_t")
        if not Q_nt > 0:
            if not allow_empty_nt:
                raise DegenerateObservablesError("Q_nt")
            return cls(float(Q_t), float(QE_t / Q_t), 0.0, math.nan, math.inf, per_n)
        return cls(
            float(Q_t),
            float(QE_t / Q_t),
            float(Q_nt),
            float(QE_nt / Q_nt),
            float(Q_t / Q_nt),
            per_n,
        )

    def as_dict(self) -> dict:
        return {"Q_t": self.Q_t, "E_t": self.E_t, "Q_nt": self.Q_nt, "E_nt": self.E_nt, "r": self.r}


def observables(src: SourceStats, ch: ChannelParams, *, allow_empty_nt: bool = False) -> RateSummary:
    """Aggregate the truncated per-n rates into Q_t, E_t, Q_nt, E_nt.

    ``allow_empty_nt`` lets analyses that never look at the nontriggered
    ensemble (the conventional one) proceed when Q_nt == 0.
    """
    n = src.n
    y = yields(ch, n)
    w = error_weighted_yields(ch, n)
    q_t_n = src.p_t * y
    q_nt_n = src.p_nt * y
    with np.errstate(invalid="ignore", divide="ignore"):
        e_n = np.where(y > 0, w / np.where(y > 0, y, 1.0), 0.0)
    per_n = PerPhotonRates(q_t_n, q_nt_n, e_n)
    return RateSummary.from_sums(
        np.sum(q_t_n),
        np.sum(src.p_t * w),
        np.sum(q_nt_n),
        np.sum(src.p_nt * w),
        per_n=per_n,
        allow_empty_nt=allow_empty_nt,
    )


def aggregate(src: SourceStats, Y, e, *, allow_empty_nt: bool = False) -> RateSummary:
    """Observables produced by arbitrary per-n yields ``Y`` and error rates ``e``.

    Any attack that treats triggered and nontriggered pulses alike (it cannot
    tell them apart) is fully described by such vectors.
    """
    Y = np.asarray(Y, dtype=float)
    e = np.asarray(e, dtype=float)
    if Y.shape != src.p.shape or e.shape != src.p.shape:
        raise ValidationError(f"attack vectors must have length {len(src.p)}")
    q_t_n = src.p_t * Y
    q_nt_n = src.p_nt * Y
    per_n = PerPhotonRates(q_t_n, q_nt_n, e.copy())
    return RateSummary.from_sums(
        np.sum(q_t_n),
        np.sum(q_t_n * e),
        np.sum(q_nt_n),
        np.sum(q_nt_n * e),
        per_n=per_n,
        allow_empty_nt=allow_empty_nt,
    )


def observables_closed_form(params: SourceParams, ch: ChannelParams, *, allow_empty_nt: bool = False) -> RateSummary:
    """Same observables from the geometric generating function, no truncation.

    With G(z) = sum_n p_n z^n = 1/(1 + mu(1 - z)) every sum is a handful of
    G evaluations; they are combined here in a cancellation-free form.
    """
    mu = params.mu
    a = params.eta_A
    k = 1.0 - params.d_A
    d_A = params.d_A
    eta, e_d, p_d = ch.eta, ch.e_d, ch.p_d
    c = (1.0 - p_d) ** 2
    one_minus_c = p_d * (2.0 - p_d)

    def G(x):  # sum p_n (1-x)^n
        return 1.0 / (1.0 + mu * x)

    def F(x):  # sum p_n [1 - (1-x)^n]
        return mu * x / (1.0 + mu * x)

    def both(x, y):  # sum p_n [1 - (1-x)^n][1 - (1-y)^n]
        w = x + y - x * y
        return mu * x * y * (1.0 + 2.0 * mu + mu * mu * w) / ((1.0 + mu * x) * (1.0 + mu * y) * (1.0 + mu * w))

    def survive_then_hit(x, y):  # sum p_n (1-x)^n [1 - (1-y)^n]
        w = x + y - x * y
        return mu * y * (1.0 - x) / ((1.0 + mu * x) * (1.0 + mu * w))

    def trig_hit(y):  # sum p_n gamma_n [1 - (1-y)^n]
        return d_A * F(y) + k * both(a, y)

    hit_right = eta * (1.0 - e_d)
    hit_wrong = eta * e_d

    Q_t = one_minus_c * (d_A + k * F(a)) + c * trig_hit(eta)
    Q_nt = k * (one_minus_c * G(a) + c * survive_then_hit(a, eta))
    QE_t = 0.5 * (Q_t - (1.0 - p_d) * (trig_hit(hit_right) - trig_hit(hit_wrong)))
    QE_nt = 0.5 * (Q_nt - (1.0 - p_d) * k * (survive_then_hit(a, hit_right) - survive_then_hit(a, hit_wrong)))
    return RateSummary.from_sums(Q_t, QE_t, Q_nt, QE_nt, allow_empty_nt=allow_empty_nt)
