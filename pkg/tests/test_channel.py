import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ref_source, ref_channel
from pdcqkd import (
    ChannelParams,
    DegenerateObservablesError,
    SourceParams,
    ValidationError,
    error_weighted_yield_n,
    observables,
    observables_closed_form,
    source_stats,
    yield_n,
)
from pdcqkd.channel import error_rates


def test_lossless_single_photon_always_detected():
    assert yield_n(ChannelParams(0.0, 0.0, 1.0, 0.0, 0.0), 1) == 1.0


def test_vacuum_yield_is_background():
    ch = ref_channel(37.0)
    assert yield_n(ch, 0) == pytest.approx(1 - (1 - 8.5e-7) ** 2, rel=1e-12)
    assert error_weighted_yield_n(ch, 0) == pytest.approx(0.5 * (1 - (1 - 8.5e-7) ** 2), rel=1e-12)
    assert error_rates(ch, [0])[0] == 0.5


def test_no_error_mechanism():
    ch = ChannelParams(0.21, 10.0, 0.045, 0.0, 0.0)
    assert all(error_weighted_yield_n(ch, n) == 0.0 for n in range(10))


def test_single_photon_error_equals_misalignment():
    ch = ChannelParams(0.0, 0.0, 1.0, 0.0, 0.033)
    assert error_weighted_yield_n(ch, 1) / yield_n(ch, 1) == pytest.approx(0.033, rel=1e-14)


def test_pinned_single_photon_yield_at_20km():
    # oracle: direct float evaluation of 1 - (1-eta)(1-p_d)^2
    eta = 0.045 * 10 ** (-0.21 * 20 / 10)
    direct = 1 - (1 - eta) * (1 - 8.5e-7) ** 2
    assert yield_n(ref_channel(20.0), 1) == pytest.approx(direct, rel=1e-12)
    assert yield_n(ref_channel(20.0), 1) == pytest.approx(1.7110194e-02, rel=1e-7)


@pytest.mark.parametrize(
    "kwargs",
    [dict(alpha=-1.0), dict(length_km=-1.0), dict(eta_B=1.5), dict(p_d=1.0), dict(e_d=0.6)],
)
def test_invalid_channel(kwargs):
    base = dict(alpha=0.21, length_km=0.0, eta_B=0.045, p_d=1e-6, e_d=0.03)
    with pytest.raises(ValidationError):
        ChannelParams(**{**base, **kwargs})


def _direct_sum(params, ch):
    """Independent oracle: plain Python loop over the truncated distribution."""
    mu, eta_A, d_A = params.mu, params.eta_A, params.d_A
    eta, p_d, e_d = ch.eta, ch.p_d, ch.e_d
    sums = [0.0, 0.0, 0.0, 0.0]
    n = 0
    while True:
        p = mu ** n / (1 + mu) ** (n + 1)
        g = 1 - (1 - d_A) * (1 - eta_A) ** n
        y = 1 - (1 - eta) ** n * (1 - p_d) ** 2
        w = 0.5 * (y - (1 - p_d) * ((1 - eta * e_d) ** n - (1 - eta + eta * e_d) ** n))
        sums[0] += p * g * y
        sums[1] += p * g * w
        sums[2] += p * (1 - g) * y
        sums[3] += p * (1 - g) * w
        n += 1
        if p < 1e-18 * max(sums[0], 1e-300) or n > 5000:
            return sums


def test_observables_regression_at_20km(source_a, channel20):
    obs = observables(source_stats(source_a), channel20)
    Q_t, QE_t, Q_nt, QE_nt = _direct_sum(source_a, channel20)
    assert obs.Q_t == pytest.approx(Q_t, rel=1e-10)
    assert obs.E_t == pytest.approx(QE_t / Q_t, rel=1e-10)
    assert obs.Q_nt == pytest.approx(Q_nt, rel=1e-10)
    assert obs.E_nt == pytest.approx(QE_nt / Q_nt, rel=1e-10)
    assert obs.r == pytest.approx(Q_t / Q_nt, rel=1e-10)


def test_trigger_relation_per_photon_number(source_a, channel20):
    stats = source_stats(source_a)
    per = observables(stats, channel20).per_n
    ok = per.Q_nt_n > 0
    np.testing.assert_allclose(per.Q_t_n[ok], stats.odds[ok] * per.Q_nt_n[ok], rtol=1e-12)


def test_sums_match_per_n(source_a, channel20):
    obs = observables(source_stats(source_a), channel20)
    per = obs.per_n
    assert per.Q_t_n.sum() == pytest.approx(obs.Q_t, rel=1e-14)
    assert (per.Q_t_n * per.e_n).sum() == pytest.approx(obs.Q_t * obs.E_t, rel=1e-12)
    assert (per.Q_nt_n * per.e_n).sum() == pytest.approx(obs.Q_nt * obs.E_nt, rel=1e-12)
    assert np.all((per.e_n >= 0) & (per.e_n <= 1))
    assert per.e_n[0] == 0.5


def test_long_distance_qber_approaches_half(source_a):
    obs = observables(source_stats(source_a), ref_channel(600.0))
    assert obs.E_t == pytest.approx(0.5, abs=1e-6)
    assert obs.E_nt == pytest.approx(0.5, abs=1e-6)


def test_vacuum_source_observables():
    params = SourceParams(0.0, 0.5, 1e-6)
    ch = ref_channel(30.0)
    obs = observables(source_stats(params), ch)
    bg = 1 - (1 - 8.5e-7) ** 2
    assert obs.Q_t == pytest.approx(1e-6 * bg, rel=1e-12)
    assert obs.E_t == 0.5 and obs.E_nt == 0.5
    closed = observables_closed_form(params, ch)
    assert closed.Q_t == pytest.approx(obs.Q_t, rel=1e-12)
    assert closed.E_nt == 0.5


def test_all_dark_is_degenerate():
    params = SourceParams(0.3, 0.0, 0.0)
    ch = ChannelParams(0.21, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(DegenerateObservablesError) as info:
        observables_closed_form(params, ch)
    assert info.value.which == "Q_t"
    with pytest.raises(DegenerateObservablesError):
        observables(source_stats(params), ch)


def test_monotone_in_distance(source_a):
    stats = source_stats(source_a)
    prev = None
    for l in np.linspace(0, 250, 51):
        obs = observables(stats, ref_channel(float(l)))
        if prev is not None:
            assert obs.Q_t <= prev.Q_t
            assert obs.E_t >= prev.E_t
        prev = obs


def _random_draw(rng):
    mu = float(10 ** rng.uniform(-4, math.log10(2.0)))
    params = SourceParams(mu, float(rng.uniform(0.01, 0.99)), float(10 ** rng.uniform(-9, -2)))
    ch = ChannelParams(0.21, float(rng.uniform(0, 250)), float(rng.uniform(0.01, 1.0)),
                       float(10 ** rng.uniform(-9, -3)), float(rng.uniform(0, 0.5)))
    return params, ch


def max_closed_form_deviation(draws=1000, seed=7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        params, ch = _random_draw(rng)
        a = observables(source_stats(params), ch)
        b = observables_closed_form(params, ch)
        for name in ("Q_t", "E_t", "Q_nt", "E_nt", "r"):
            x, y = getattr(a, name), getattr(b, name)
            worst = max(worst, abs(x - y) / abs(x))
    return worst


def test_closed_form_matches_truncated_sum():
    assert max_closed_form_deviation() < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 2.0), st.floats(0.01, 0.99), st.floats(0.0, 300.0))
def test_closed_form_property(mu, eta_A, length):
    params = SourceParams(mu, eta_A, 1e-6)
    ch = ref_channel(length)
    a = observables(source_stats(params), ch)
    b = observables_closed_form(params, ch)
    assert b.Q_t == pytest.approx(a.Q_t, rel=1e-10)
    assert b.E_nt == pytest.approx(a.E_nt, rel=1e-10)
