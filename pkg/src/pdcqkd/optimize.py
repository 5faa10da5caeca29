"""Source-strength optimization, distance sweeps and cutoff/switch location."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import (
    KeyRateResult,
    MinimizerPolicy,
    ProtocolConstants,
    final_rate,
    key_rate_both,
    key_rate_conventional,
    key_rate_ideal_single_photon,
    key_rate_triggered,
)
from .channel import ChannelParams, RateSummary, error_weighted_yield_n, observables, yield_n
from .errors import BracketError, DegenerateObservablesError, ValidationError, ZeroRateError
from .golden import golden_section_min
from .source import SourceParams, source_stats

__all__ = [
    "PROTOCOLS",
    "SweepSpec",
    "SweepRow",
    "MuOptimum",
    "evaluate",
    "optimize_mu",
    "run_sweep",
    "find_cutoff",
    "find_strategy_switch",
]

PROTOCOLS = ("efficient_pdc", "conventional_pdc", "ideal_single_photon")
STRATEGIES = ("final", "t", "both")


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to evaluate key rates along a list of distances.

    ``source.mu`` is used as-is when ``optimize_mu`` is false.  The channel
    template's ``length_km`` is ignored.
    """

    distances_km: tuple = ()
    protocol: str = "efficient_pdc"
    source: SourceParams = field(default_factory=lambda: SourceParams(0.19, 0.5, 1e-6))
    channel: ChannelParams = field(default_factory=lambda: ChannelParams(0.21, 0.0, 0.045, 8.5e-7, 0.033))
    constants: ProtocolConstants = field(default_factory=ProtocolConstants)
    optimize_mu: bool = True
    mu_lo: float = 1e-4
    mu_hi: float = 2.0
    mu_grid: int = 129
    mu_rel_tol: float = 1e-4
    minimizer: MinimizerPolicy = field(default_factory=MinimizerPolicy)
    workers: int = 1

    def __post_init__(self):
        d = tuple(float(x) for x in self.distances_km)
        object.__setattr__(self, "distances_km", d)
        if any(x < 0 or not math.isfinite(x) for x in d):
            raise ValidationError("distances must be finite and nonnegative")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValidationError("distances must be strictly increasing")
        if self.protocol not in PROTOCOLS:
            raise ValidationError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if not 0.0 < self.mu_lo < self.mu_hi:
            raise ValidationError(f"need 0 < mu_lo < mu_hi, got {self.mu_lo}, {self.mu_hi}")
        if self.mu_grid < 3:
            raise ValidationError("mu_grid must be >= 3")
        if not 0.0 < self.mu_rel_tol < 1.0:
            raise ValidationError("mu_rel_tol must lie in (0, 1)")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    l_km: float
    mu: float | None
    Q_t: float | None
    E_t: float | None
    Q_nt: float | None
    E_nt: float | None
    r: float | None
    R_t: float | None
    R_both: float | None
    R_final: float
    x_star: float | None
    flag: str = "ok"

    FIELDS = ("l_km", "mu", "Q_t", "E_t", "Q_nt", "E_nt", "r", "R_t", "R_both", "R_final", "x_star")


@dataclass(frozen=True)
class MuOptimum:
    mu: float
    result: KeyRateResult
    summary: RateSummary | None


def _none_if_nan(v):
    return None if v is None or not math.isfinite(v) else float(v)


def evaluate(spec: SweepSpec, length_km: float, mu: float | None = None):
    """Observables and key rates of ``spec.protocol`` at one (mu, l) point.

    Returns ``(RateSummary | None, KeyRateResult)``.
    """
    ch = spec.channel.with_length(length_km)
    consts = spec.constants
    if spec.protocol == "ideal_single_photon":
        R = key_rate_ideal_single_photon(ch, consts)
        return None, KeyRateResult(R_t=R, R_both=None, R_final=max(R, 0.0), selected="single_photon")
    params = spec.source if mu is None else spec.source.with_mu(mu)
    src = source_stats(params)
    if spec.protocol == "conventional_pdc":
        obs = observables(src, ch, allow_empty_nt=True)
        R = key_rate_conventional(obs, src, consts)
        return obs, KeyRateResult(R_t=R, R_both=None, R_final=max(R, 0.0), selected="conventional")
    obs = observables(src, ch)
    rt = key_rate_triggered(obs, src, consts, spec.minimizer)
    rb = key_rate_both(obs, src, consts, spec.minimizer)
    return obs, final_rate(rt, rb)


def _objective_value(res: KeyRateResult, strategy: str) -> float:
    if strategy == "final" or res.R_both is None:
        return res.raw
    return res.R_t if strategy == "t" else res.R_both


def optimize_mu(length_km: float, spec: SweepSpec, strategy: str = "final") -> MuOptimum:
    """Maximize the (unclamped) key rate over mu at one distance.

    Log-spaced grid on [mu_lo, mu_hi] followed by golden-section refinement
    in log(mu) around the best grid point.  ``strategy`` selects the
    quantity maximized: ``final`` (max of both strategies), ``t`` or ``both``.
    Raises :class:`ZeroRateError` (carrying the best point) when no mu
    gives a strictly positive rate.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}")
    if spec.protocol == "ideal_single_photon":
        obs, res = evaluate(spec, length_km)
        opt = MuOptimum(math.nan, res, obs)
        if not res.R_final > 0:
            raise ZeroRateError(f"no positive key rate at l={length_km} km", best=opt)
        return opt

    cache = {}

    def value(log_mu):
        if log_mu not in cache:
            try:
                obs, res = evaluate(spec, length_km, math.exp(log_mu))
                cache[log_mu] = (_objective_value(res, strategy), obs, res)
            except DegenerateObservablesError:
                cache[log_mu] = (-math.inf, None, None)
        return cache[log_mu][0]

    grid = np.linspace(math.log(spec.mu_lo), math.log(spec.mu_hi), spec.mu_grid)
    vals = [value(float(g)) for g in grid]
    i = int(np.argmax(vals))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])
    # relative tolerance in mu is an absolute tolerance in log(mu)
    x_ref, neg = golden_section_min(lambda g: -value(g), lo, hi, math.log1p(spec.mu_rel_tol))
    best = float(grid[i]) if vals[i] >= -neg else x_ref
    v, obs, res = cache[best]
    if res is None:
        raise DegenerateObservablesError("Q_t")
    opt = MuOptimum(math.exp(best), res, obs)
    if not v > 0:
        raise ZeroRateError(f"no positive key rate for mu in [{spec.mu_lo}, {spec.mu_hi}] at l={length_km} km", best=opt)
    return opt


def _row(spec: SweepSpec, length_km: float) -> SweepRow:
    flag = "ok"
    try:
        if spec.optimize_mu and spec.protocol != "ideal_single_photon":
            try:
                opt = optimize_mu(length_km, spec)
            except ZeroRateError as exc:
                opt, flag = exc.best, "zero_rate"
            mu, obs, res = opt.mu, opt.summary, opt.result
        else:
            mu = None if spec.protocol == "ideal_single_photon" else spec.source.mu
            obs, res = evaluate(spec, length_km, mu)
            if not res.R_final > 0:
                flag = "zero_rate"
    except DegenerateObservablesError as exc:
        return SweepRow(length_km, None, None, None, None, None, None, None, None, 0.0, None, f"degenerate:{exc.which}")
    if spec.protocol == "ideal_single_photon":
        ch = spec.channel.with_length(length_km)
        Q = yield_n(ch, 1)
        E = error_weighted_yield_n(ch, 1) / Q if Q > 0 else None
        return SweepRow(length_km, None, Q, E, None, None, None, res.R_t, None, res.R_final, None, flag)
    return SweepRow(
        l_km=length_km,
        mu=float(mu),
        Q_t=obs.Q_t,
        E_t=obs.E_t,
        Q_nt=_none_if_nan(obs.Q_nt) if obs.Q_nt > 0 else None,
        E_nt=_none_if_nan(obs.E_nt),
        r=_none_if_nan(obs.r),
        R_t=res.R_t,
        R_both=res.R_both,
        R_final=res.R_final,
        x_star=res.x_star,
        flag=flag,
    )


def _row_star(args):
    return _row(*args)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per distance, in input order, independent of ``workers``."""
    tasks = [(spec, l) for l in spec.distances_km]
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_row_star, tasks))
    return [_row(*t) for t in tasks]


def _final_rate_at(spec: SweepSpec, length_km: float) -> float:
    if spec.optimize_mu and spec.protocol != "ideal_single_photon":
        try:
            return optimize_mu(length_km, spec).result.R_final
        except ZeroRateError:
            return 0.0
    return evaluate(spec, length_km)[1].R_final


def _bisect(pred, lo, hi, resolution):
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_cutoff(spec: SweepSpec, bracket: tuple[float, float], resolution: float = 0.1) -> float:
    """Distance where the final key rate drops to zero, by bisection."""
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi:
        raise BracketError(f"invalid bracket {bracket}")
    positive = lambda l: _final_rate_at(spec, l) > 0  # noqa: E731
    if not positive(lo):
        raise BracketError(f"final key rate is not positive at the lower end {lo} km")
    if positive(hi):
        raise BracketError(f"final key rate is still positive at the upper end {hi} km")
    return _bisect(positive, lo, hi, resolution)


def find_strategy_switch(spec: SweepSpec, bracket: tuple[float, float], resolution: float = 0.1) -> float:
    """Distance where combining nontriggered events stops paying off.

    At each probe both strategies are optimized over mu separately; the
    combined strategy is selected while its optimum exceeds the
    triggered-only optimum.
    """
    if spec.protocol != "efficient_pdc":
        raise ValidationError("strategy switch only exists for the efficient_pdc protocol")
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi:
        raise BracketError(f"invalid bracket {bracket}")

    def best(l, strategy):
        try:
            return optimize_mu(l, spec, strategy).result
        except ZeroRateError as exc:
            return exc.best.result

    def both_selected(l):
        return _objective_value(best(l, "both"), "both") > _objective_value(best(l, "t"), "t")

    if not both_selected(lo):
        raise BracketError(f"combined strategy not selected at the lower end {lo} km")
    if both_selected(hi):
        raise BracketError(f"combined strategy still selected at the upper end {hi} km")
    return _bisect(both_selected, lo, hi, resolution)


def with_protocol(spec: SweepSpec, **changes) -> SweepSpec:
    return replace(spec, **changes)
