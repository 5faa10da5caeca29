"""Pulse-level Monte Carlo of the heralded source, channel and receiver.

Each pulse draws a photon number, a trigger decision, and then either the
detector-level honest model or the per-n yields/errors of an attack.  In the
honest model the n photons split into three groups (lost, reaching the right
detector, reaching the wrong one), each detector additionally fires on
background with probability ``p_d``, and a double click is resolved by a
fair coin.  This is independent of the closed per-n error formula, which
the tests check against it analytically.

Random numbers come from numpy's PCG64, one stream per batch spawned from
the master seed with ``SeedSequence.spawn``; a given seed and batch size
therefore gives the same tallies regardless of worker count or backend.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ChannelParams, RateSummary, aggregate, error_rates, observables, yields
from .errors import ValidationError
from .source import SourceParams, SourceStats, source_stats

__all__ = [
    "RNG_ALGORITHM",
    "AttackScenario",
    "SimConfig",
    "SimResult",
    "EmpiricalSummary",
    "simulate",
    "pns_attack_vector",
    "matched_pns_attack",
    "honest_category_tables",
    "analytic_summary",
]

RNG_ALGORITHM = "numpy-PCG64/SeedSequence.spawn-per-batch"
UNIFORMS_PER_PULSE = 6
OUTCOMES = ("none", "correct", "error")


@dataclass(frozen=True)
class AttackScenario:
    """Per-photon-number yields ``Y`` and error rates ``e`` imposed by Eve."""

    Y: tuple
    e: tuple
    description: str = "custom"

    def __post_init__(self):
        Y = tuple(float(v) for v in self.Y)
        e = tuple(float(v) for v in self.e)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "e", e)
        if len(Y) != len(e) or not Y:
            raise ValidationError("Y and e must be nonempty and of equal length")
        if any(not 0.0 <= v <= 1.0 for v in Y + e):
            raise ValidationError("attack yields and error rates must lie in [0, 1]")
        if e[0] != 0.5:
            raise ValidationError(f"e_0 must be 1/2, got {e[0]}")

    def padded(self, length: int):
        """Arrays of ``length`` entries; the last given value extends the tail."""
        Y = np.array(self.Y[:length] + (self.Y[-1],) * max(0, length - len(self.Y)))
        e = np.array(self.e[:length] + (self.e[-1],) * max(0, length - len(self.e)))
        return Y, e


def pns_attack_vector(src: SourceStats, ch: ChannelParams, block_fraction: float,
                      multi_yield: float = 1.0) -> AttackScenario:
    """Minimal photon-number-splitting model.

    Eve blocks a fraction ``block_fraction`` of single-photon pulses and
    forwards multi-photon pulses with yield ``multi_yield`` (1 = lossless).
    Error rates are the channel's own per-n values, so ``block_fraction=0``
    at unit transmission is indistinguishable from no attack.
    """
    if not 0.0 <= block_fraction <= 1.0:
        raise ValidationError(f"block_fraction must lie in [0, 1], got {block_fraction}")
    if not 0.0 <= multi_yield <= 1.0:
        raise ValidationError(f"multi_yield must lie in [0, 1], got {multi_yield}")
    n = src.n
    honest = yields(ch, n)
    Y = np.full(len(n), multi_yield)
    Y[0] = honest[0]
    if len(n) > 1:
        Y[1] = (1.0 - block_fraction) * honest[1]
    e = error_rates(ch, n)
    e[0] = 0.5
    desc = f"pns(block_fraction={block_fraction:g}, multi_yield={multi_yield:.6g})"
    return AttackScenario(tuple(Y), tuple(e), desc)


def matched_pns_attack(src: SourceStats, ch: ChannelParams, block_fraction: float) -> AttackScenario:
    """PNS attack whose multi-photon yield keeps Q_t at its honest value."""
    honest = yields(ch, src.n)
    target = float(np.sum(src.p_t * honest))
    fixed = src.p_t[0] * honest[0] + (src.p_t[1] * (1.0 - block_fraction) * honest[1] if src.n_max >= 1 else 0.0)
    multi = float(np.sum(src.p_t[2:]))
    if multi <= 0:
        raise ValidationError("no triggered multi-photon pulses to exploit")
    kappa = (target - fixed) / multi
    if not 0.0 <= kappa <= 1.0:
        raise ValidationError(f"cannot match honest Q_t with multi-photon yield in [0, 1] (needs {kappa:.3g})")
    return pns_attack_vector(src, ch, block_fraction, kappa)


@dataclass(frozen=True)
class SimConfig:
    pulses: int
    seed: int
    source: SourceParams
    channel: ChannelParams
    attack: AttackScenario | None = None
    batch_size: int = 1 << 18
    workers: int = 1

    def __post_init__(self):
        if int(self.pulses) != self.pulses or self.pulses < 1:
            raise ValidationError(f"pulses must be a positive integer, got {self.pulses}")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise ValidationError(f"seed must be an integer in [0, 2^64), got {self.seed}")
        if self.batch_size < 1 or self.workers < 1:
            raise ValidationError("batch_size and workers must be >= 1")


@dataclass(frozen=True)
class EmpiricalSummary:
    """Observed rates with binomial standard errors."""

    Q_t: float
    E_t: float
    Q_nt: float
    E_nt: float
    r: float
    se_Q_t: float
    se_E_t: float
    se_Q_nt: float
    se_E_nt: float
    se_r: float

    FIELDS = ("Q_t", "E_t", "Q_nt", "E_nt", "r")

    def as_rate_summary(self) -> RateSummary:
        return RateSummary(self.Q_t, self.E_t, self.Q_nt, self.E_nt, self.r)

    def z_scores(self, analytic: RateSummary) -> dict:
        out = {}
        for name in self.FIELDS:
            se = getattr(self, "se_" + name)
            diff = getattr(self, name) - getattr(analytic, name)
            out[name] = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
        return out


@dataclass(frozen=True)
class SimResult:
    """Tallies indexed by [triggered, photon number, outcome]."""

    config: SimConfig
    counts: np.ndarray
    backend: str
    rng_algorithm: str = RNG_ALGORITHM
    attack_description: str | None = field(default=None)

    @property
    def pulses(self) -> int:
        return int(self.counts.sum())

    def cells(self) -> dict:
        """Counts per (trigger, outcome) cell; they sum to the pulse count."""
        out = {}
        for t, tname in ((1, "t"), (0, "nt")):
            for o, oname in enumerate(OUTCOMES):
                out[f"{tname}_{oname}"] = int(self.counts[t, :, o].sum())
        return out

    def detections(self, triggered: int, n: int | None = None) -> int:
        c = self.counts[triggered] if n is None else self.counts[triggered, n]
        return int(c[..., 1:].sum())

    def errors(self, triggered: int, n: int | None = None) -> int:
        c = self.counts[triggered] if n is None else self.counts[triggered, n]
        return int(c[..., 2].sum())

    def empirical(self) -> EmpiricalSummary:
        N = self.pulses
        D_t, D_nt = self.detections(1), self.detections(0)
        Q_t, Q_nt = D_t / N, D_nt / N
        E_t = self.errors(1) / D_t if D_t else math.nan
        E_nt = self.errors(0) / D_nt if D_nt else math.nan
        r = Q_t / Q_nt if D_nt else math.inf
        se = lambda p, m: math.sqrt(p * (1.0 - p) / m) if m else math.nan  # noqa: E731
        # multinomial: var(log r) = 1/D_t + 1/D_nt
        se_r = r * math.sqrt(1.0 / D_t + 1.0 / D_nt) if D_t and D_nt else math.nan
        return EmpiricalSummary(Q_t, E_t, Q_nt, E_nt, r, se(Q_t, N), se(E_t, D_t), se(Q_nt, N), se(E_nt, D_nt), se_r)

    def true_single_photon(self) -> dict:
        """Simulation-side truth: Q_nt_1/Q_nt, x = Q_nt_0/Q_nt and e_1."""
        D_nt = self.detections(0)
        D1 = self.detections(0, 1) + self.detections(1, 1)
        return {
            "x": self.detections(0, 0) / D_nt if D_nt else math.nan,
            "single_fraction_nt": self.detections(0, 1) / D_nt if D_nt else math.nan,
            "e_1": (self.errors(0, 1) + self.errors(1, 1)) / D1 if D1 else math.nan,
            "detections_nt": D_nt,
            "detections_1": D1,
        }


def honest_category_tables(ch: ChannelParams, n_max: int) -> np.ndarray:
    """Cumulative photon-arrival probabilities per photon number.

    Columns: P(no photon arrives), + P(only wrong-detector hits),
    + P(only right-detector hits); the remainder is "both hit".
    """
    n = np.arange(n_max + 1, dtype=float)

    def pow1m(x):  # (1 - x)^n
        if x == 1.0:
            return (n == 0).astype(float)
        return np.exp(n * math.log1p(-x))

    eta, e_d = ch.eta, ch.e_d
    none = pow1m(eta)
    no_right = pow1m(eta * (1.0 - e_d))
    no_wrong = pow1m(eta * e_d)
    return np.ascontiguousarray(np.stack([none, no_right, no_right + no_wrong - none], axis=1))


def _tables(config: SimConfig):
    src = source_stats(config.source)
    cdf_n = np.cumsum(src.p)
    cdf_n[-1] = 1.0  # truncated tail is lumped into the last photon number
    gamma = np.ascontiguousarray(src.gamma)
    cat = honest_category_tables(config.channel, src.n_max)
    if config.attack is not None:
        Y, e = config.attack.padded(src.n_max + 1)
        Y, e = np.ascontiguousarray(Y), np.ascontiguousarray(e)
    else:
        Y = e = None
    return src, cdf_n, gamma, cat, Y, e


def simulate(config: SimConfig) -> SimResult:
    """Run ``config.pulses`` pulses and return the tallies."""
    src, cdf_n, gamma, cat, Y, e = _tables(config)
    n_batches = -(-config.pulses // config.batch_size)
    children = np.random.SeedSequence(config.seed).spawn(n_batches)
    sizes = [config.batch_size] * (n_batches - 1) + [config.pulses - config.batch_size * (n_batches - 1)]
    shape = (2, src.n_max + 1, 3)

    def run(indices):
        counts = np.zeros(shape, dtype=np.int64)
        for b in indices:
            rng = np.random.Generator(np.random.PCG64(children[b]))
            u = rng.random((sizes[b], UNIFORMS_PER_PULSE))
            kernels.tally_pulses(u, cdf_n, gamma, cat, config.channel.p_d, Y, e, counts)
        return counts

    if config.workers > 1 and n_batches > 1:
        groups = [range(w, n_batches, config.workers) for w in range(config.workers)]
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            total = sum(pool.map(run, groups))
    else:
        total = run(range(n_batches))
    return SimResult(
        config=config,
        counts=total,
        backend=kernels.get_backend(),
        attack_description=None if config.attack is None else config.attack.description,
    )


def analytic_summary(config: SimConfig) -> RateSummary:
    """Analytic observables matching ``config`` (honest or attacked)."""
    src = source_stats(config.source)
    if config.attack is None:
        return observables(src, config.channel)
    Y, e = config.attack.padded(src.n_max + 1)
    return aggregate(src, Y, e)
