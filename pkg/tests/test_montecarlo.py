import math

import numpy as np
import pytest

from conftest import ref_source, ref_channel
from pdcqkd import (
    AttackScenario,
    ChannelParams,
    SimConfig,
    SourceParams,
    ValidationError,
    eps_bound,
    kernels,
    key_rate_triggered,
    observables,
    pns_attack_vector,
    simulate,
    source_stats,
    xi,
)
from pdcqkd.channel import error_weighted_yields, yields
from pdcqkd.montecarlo import analytic_summary, honest_category_tables, matched_pns_attack


@pytest.fixture
def honest_config():
    return SimConfig(1_000_000, 1234, ref_source(), ref_channel(20.0))


def test_single_pulse_one_cell():
    res = simulate(SimConfig(1, 5, ref_source(), ref_channel(20.0)))
    assert res.pulses == 1
    assert sum(res.cells().values()) == 1


def test_zero_yield_attack_has_no_detections():
    src = source_stats(ref_source())
    size = src.n_max + 1
    attack = AttackScenario((0.0,) * size, (0.5,) * size, "blackout")
    res = simulate(SimConfig(200_000, 9, ref_source(), ref_channel(20.0), attack))
    assert res.detections(0) == res.detections(1) == 0
    assert res.pulses == 200_000


def test_attack_requires_half_vacuum_error():
    with pytest.raises(ValidationError):
        AttackScenario((0.1, 0.2), (0.3, 0.1))
    with pytest.raises(ValidationError):
        AttackScenario((1.2,), (0.5,))


def test_invalid_sim_config():
    with pytest.raises(ValidationError):
        SimConfig(0, 1, ref_source(), ref_channel())
    with pytest.raises(ValidationError):
        SimConfig(10, -1, ref_source(), ref_channel())


def test_reproducible(honest_config):
    a, b = simulate(honest_config), simulate(honest_config)
    np.testing.assert_array_equal(a.counts, b.counts)


def test_worker_count_does_not_change_tallies():
    cfg = SimConfig(700_000, 77, ref_source(), ref_channel(20.0), batch_size=100_000)
    threaded = SimConfig(700_000, 77, ref_source(), ref_channel(20.0), batch_size=100_000, workers=3)
    np.testing.assert_array_equal(simulate(cfg).counts, simulate(threaded).counts)


def test_backends_bit_identical(honest_config):
    if not kernels.compiled_available():
        pytest.skip("compiled extension not built")
    src = source_stats(ref_source())
    attacked = SimConfig(300_000, 3, ref_source(), ref_channel(20.0), pns_attack_vector(src, ref_channel(20.0), 0.5))
    previous = kernels.get_backend()
    try:
        for cfg in (honest_config, attacked):
            kernels.set_backend("compiled")
            c = simulate(cfg)
            kernels.set_backend("python")
            p = simulate(cfg)
            np.testing.assert_array_equal(c.counts, p.counts)
            assert (c.backend, p.backend) == ("compiled", "python")
    finally:
        kernels.set_backend(previous)


@pytest.mark.parametrize("length, p_d, e_d", [(0.0, 0.0, 0.0), (20.0, 8.5e-7, 0.033), (120.0, 1e-3, 0.4),
                                              (0.0, 0.3, 0.5)])
def test_detector_decomposition_reproduces_error_formula(length, p_d, e_d):
    """Per-pulse outcome probabilities implied by the sampling tables, summed analytically."""
    ch = ChannelParams(0.21, length, 0.6, p_d, e_d)
    cat = honest_category_tables(ch, 40)
    none = cat[:, 0]
    only_wrong = cat[:, 1] - cat[:, 0]
    only_right = cat[:, 2] - cat[:, 1]
    both = 1.0 - cat[:, 2]
    q = 1.0 - p_d
    detect = 1.0 - none * q * q
    wrong_alone = (only_wrong + none * p_d) * q
    double = both + (only_wrong + only_right) * p_d + none * p_d * p_d
    error = wrong_alone + 0.5 * double
    n = np.arange(41)
    np.testing.assert_allclose(detect, yields(ch, n), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(error, error_weighted_yields(ch, n), rtol=1e-9, atol=1e-15)


def test_honest_observables_within_five_sigma(honest_config):
    res = simulate(honest_config)
    z = res.empirical().z_scores(analytic_summary(honest_config))
    assert max(abs(v) for v in z.values()) < 5


def test_trigger_ratio_per_photon_number():
    cfg = SimConfig(1_000_000, 2024, SourceParams(0.5, 0.5, 1e-3), ref_channel(0.0))
    res = simulate(cfg)
    src = source_stats(cfg.source)
    chi2 = 0.0
    dof = 0
    for n in range(4):
        t = res.counts[1, n].sum()
        total = t + res.counts[0, n].sum()
        expected = total * src.gamma[n]
        chi2 += (t - expected) ** 2 / (expected * (1 - src.gamma[n]))
        dof += 1
        assert t / (total - t) == pytest.approx(src.r(n), rel=0.2 if n == 0 else 0.02)
    # 99.9 % point of chi-square with 4 degrees of freedom
    assert chi2 < 18.47


def _bound_check(res, sigma=5.0):
    emp = res.empirical()
    obs = emp.as_rate_summary()
    truth = res.true_single_photon()
    src = source_stats(res.config.source)
    r0, r1, r2 = src.r(0), src.r(1), src.r(2)
    x = truth["x"]
    xi_val = float(xi(x, obs, r0, r1, r2))
    # xi is linear in r: propagate the standard error of r
    se_xi = emp.se_r / (r2 - r1)
    assert xi_val <= truth["single_fraction_nt"] + sigma * se_xi
    if xi_val > 5 * se_xi:
        eps = eps_bound(x, obs, r0, r1, xi_val, clamp=False)
        se_e1 = math.sqrt(truth["e_1"] * (1 - truth["e_1"]) / truth["detections_1"])
        assert eps >= truth["e_1"] - sigma * (se_e1 + eps * se_xi / xi_val)


def test_bounds_sound_on_simulated_truth(honest_config):
    _bound_check(simulate(honest_config))


def test_bounds_sound_under_attack():
    src = source_stats(ref_source())
    ch = ref_channel(20.0)
    cfg = SimConfig(1_000_000, 99, ref_source(), ch, matched_pns_attack(src, ch, 0.7))
    _bound_check(simulate(cfg))


def test_no_block_lossless_attack_is_honest():
    src = source_stats(ref_source())
    ch = ChannelParams(0.0, 0.0, 1.0, 8.5e-7, 0.033)
    attack = pns_attack_vector(src, ch, 0.0)
    honest = observables(src, ch)
    attacked = analytic_summary(SimConfig(1, 1, ref_source(), ch, attack))
    assert attacked.Q_t == pytest.approx(honest.Q_t, rel=1e-14)
    assert attacked.E_nt == pytest.approx(honest.E_nt, rel=1e-14)
    assert attacked.r == pytest.approx(honest.r, rel=1e-14)


def test_pns_vector_shape():
    src = source_stats(ref_source())
    ch = ref_channel(20.0)
    attack = pns_attack_vector(src, ch, 0.25)
    assert attack.Y[0] == yields(ch, 0)
    assert attack.Y[1] == pytest.approx(0.75 * float(yields(ch, 1)))
    assert set(attack.Y[2:]) == {1.0}
    assert attack.e[0] == 0.5
    assert "block_fraction=0.25" in attack.description


def test_full_block_raises_observed_ratio():
    src = source_stats(ref_source())
    ch = ref_channel(20.0)
    honest = observables(src, ch)
    cfg = SimConfig(1_000_000, 5, ref_source(), ch, pns_attack_vector(src, ch, 1.0))
    analytic = analytic_summary(cfg)
    Y, _ = cfg.attack.padded(src.n_max + 1)
    weights = src.p_nt * Y
    mixture = float(np.dot(src.odds, weights) / weights.sum())
    assert analytic.r == pytest.approx(mixture, rel=1e-12)
    assert src.r(1) < honest.r < analytic.r
    emp = simulate(cfg).empirical()
    assert emp.r > honest.r


def test_matched_attack_lowers_key_rate():
    src = source_stats(ref_source())
    ch = ref_channel(20.0)
    honest = observables(src, ch)
    attack = matched_pns_attack(src, ch, 1.0)
    attacked = analytic_summary(SimConfig(1, 1, ref_source(), ch, attack))
    assert attacked.Q_t == pytest.approx(honest.Q_t, rel=1e-12)
    assert key_rate_triggered(attacked, src).rate < key_rate_triggered(honest, src).rate
