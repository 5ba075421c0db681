import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpwilcoxon import PairedDataset, ParameterError, critical_value, simulate_reference, wilcoxon_statistic
from dpwilcoxon.experiments import PowerConfig, estimate_power
from dpwilcoxon.tc import (
    TcConfig,
    augmented_statistic,
    tc_analytic_critical_value,
    tc_high_privacy_test,
    tc_high_utility_test,
    tc_plus_test,
    tc_test,
)
from oracles import tc_bound

# (n, eps) -> TC column at alpha = 0.1, 0.05, 0.025 (comparison tables, normalized)
TC_COLUMN = {
    (100, 1.0): (2.680, 3.091, 3.511),
    (100, 0.1): (14.786, 15.197, 15.617),
    (100, 0.01): (135.843, 136.254, 136.674),
    (1000, 1.0): (1.763, 2.174, 2.594),
    (1000, 0.1): (5.617, 6.028, 6.448),
    (1000, 0.01): (44.157, 44.568, 44.988),
}
CELLS = [(n, e, a, v) for (n, e), vals in TC_COLUMN.items() for a, v in zip((0.1, 0.05, 0.025), vals)]


@pytest.mark.parametrize("n, eps, alpha, expected", CELLS)
def test_analytic_matches_tables(n, eps, alpha, expected):
    got = tc_analytic_critical_value(n, n, eps, alpha, 0.01, normalized=True)
    assert got == pytest.approx(expected, abs=1e-3)
    assert got == pytest.approx(tc_bound(n, n, eps, alpha, 0.01), rel=1e-12)


def test_analytic_unnormalized():
    norm = tc_analytic_critical_value(100, 100, 1.0, normalized=True)
    assert tc_analytic_critical_value(100, 100, 1.0) == pytest.approx(norm * math.sqrt(338350))


def test_analytic_errors():
    with pytest.raises(ParameterError):
        tc_analytic_critical_value(100, 100, 1.0, alpha=0.01, gamma=0.01)
    with pytest.raises(ParameterError):
        tc_analytic_critical_value(100, 101, 1.0)
    with pytest.raises(ParameterError):
        tc_analytic_critical_value(100, 0, 1.0)
    with pytest.raises(ParameterError):
        TcConfig(gamma=0.03)  # two-sided: 0.03 >= 0.05 / 2
    TcConfig(gamma=0.03, sidedness="one")


def test_analytic_monotone():
    eps = [2.0, 1.0, 0.5, 0.1, 0.01]
    vals = [tc_analytic_critical_value(200, 60, e) for e in eps]
    assert vals == sorted(vals)
    alphas = [0.01, 0.025, 0.05, 0.1]
    vals = [tc_analytic_critical_value(200, 60, 1.0, a, 0.005) for a in alphas]
    assert vals == sorted(vals, reverse=True)


def test_gamma_has_interior_optimum():
    gammas = np.linspace(0.0005, 0.0495, 99)
    vals = np.array([tc_analytic_critical_value(100, 100, 1.0, 0.05, g) for g in gammas])
    i = int(np.argmin(vals))
    assert 0 < i < len(gammas) - 1


@pytest.mark.parametrize("n, eps", [(100, 1.0), (100, 0.1), (100, 0.01)])
def test_simulated_below_analytic(n, eps):
    ref = simulate_reference(n, eps, 200_000, rng=4)
    for a in (0.1, 0.05, 0.025):
        sim = critical_value(ref, a, "one", normalized=True).value
        assert sim < tc_analytic_critical_value(n, n, eps, a, 0.01, normalized=True)


def test_plus_noiseless_limit():
    ref = simulate_reference(100, math.inf, 10**6, rng=8)
    assert critical_value(ref, 0.05, "one", normalized=True).value == pytest.approx(1.645, abs=0.01)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30), st.integers(1, 20))
def test_dummies_cancel(d, k):
    data = PairedDataset(np.zeros(len(d)), np.array(d, float))
    w, rows = augmented_statistic(data, k)
    w0, n_r = wilcoxon_statistic(data)
    assert w == w0
    assert rows == n_r + 2 * k


def test_dummies_cancel_against_explicit_oracle():
    # materialize the dummies as huge finite differences and rank by hand
    d = np.array([3.0, -1.0, 0.0, 2.0, 2.0, -4.0])
    k = 3
    big = 1e6
    full = np.concatenate([d[d != 0], np.full(k, big), np.full(k, -big)])
    mags = np.abs(full)
    ranks = np.array([np.sum(mags < m) + (np.sum(mags == m) + 1) / 2 for m in mags])
    expected = float(np.sum(np.sign(full) * ranks))
    data = PairedDataset(np.zeros(d.size), d)
    assert augmented_statistic(data, k)[0] == expected


def test_config_rows_and_assumed():
    hu = TcConfig("high_utility")
    assert hu.assumed_n_r(80) == 24
    assert hu.assumed_n_r(10) == 3
    assert hu.rows(80) == 80
    hp = TcConfig("high_privacy", k=15)
    assert hp.assumed_n_r(122) == 30
    assert hp.rows(122) == 152
    assert TcConfig("high_privacy", noise_rows="original").rows(122) == 122
    assert hu.tail_alpha == 0.025
    assert TcConfig(sidedness="one").tail_alpha == 0.05


def test_high_utility_decision_below_cv(zero_noise):
    data = PairedDataset(np.zeros(40), np.tile([1.0, -1.0], 20) * np.arange(1, 41))
    res = tc_high_utility_test(data, 1.0)
    assert res.w_tilde == wilcoxon_statistic(data)[0]
    assert abs(res.w_tilde) < res.critical_value
    assert res.reject is False
    assert res.assumed_n_r == 12
    assert res.differentially_private is False


def test_high_privacy_decision(zero_noise):
    data = PairedDataset(np.zeros(200), np.arange(1, 201, dtype=float))
    res = tc_high_privacy_test(data, 1.0, TcConfig("high_privacy", k=15))
    assert res.w_tilde == 200 * 201 / 2
    assert res.critical_value == pytest.approx(
        tc_analytic_critical_value(230, 30, 1.0, 0.025, 0.01)
    )
    assert res.reject is True
    assert res.differentially_private is True


def test_degenerate_all_zero(zero_noise):
    data = PairedDataset(np.ones(10), np.ones(10))
    assert tc_high_utility_test(data, 1.0).w_tilde == 0.0
    assert tc_high_privacy_test(data, 1.0).w_tilde == 0.0


def test_one_sided_rule(zero_noise):
    data = PairedDataset(np.arange(1, 301, dtype=float), np.zeros(300))
    two = tc_high_utility_test(data, 1.0, TcConfig())
    one = tc_high_utility_test(data, 1.0, TcConfig(sidedness="one"))
    assert two.reject and not one.reject


def test_plus_uses_simulated_cv(table1):
    cfg = TcConfig("high_utility", use_simulated_cv=True, c=20_000)
    calls = []

    def builder(n_assumed, eps, rows):
        calls.append((n_assumed, eps, rows))
        return simulate_reference(n_assumed, eps, 20_000, rng=1, noise_rows=rows)

    res = tc_plus_test(table1, 1.0, cfg, builder, rng=5)
    assert calls == [(2, 1.0, 5)]
    ref = builder(2, 1.0, 5)
    assert res.critical_value == critical_value(ref, 0.05).value
    assert res.simulated_cv is True
    with pytest.raises(ParameterError):
        tc_plus_test(table1, 1.0, TcConfig())


def test_dispatch_and_determinism(table1):
    cfg = TcConfig("high_privacy", use_simulated_cv=True, c=10_000)
    a = tc_test(table1, 1.0, cfg, rng=3)
    b = tc_test(table1, 1.0, cfg, rng=3)
    assert a == b
    with pytest.raises(ParameterError):
        tc_high_utility_test(table1, 1.0, TcConfig("high_privacy"))


# Power claims for the baseline. These are not reproduced: with the
# specified construction the baseline tests are far more powerful than the
# published curves (and exceed alpha under the null); see the decisions ledger.
TC_POWER_XFAIL = pytest.mark.xfail(
    strict=True, reason="published TC power curves not reproducible with the specified construction"
)


@TC_POWER_XFAIL
@pytest.mark.slow
@pytest.mark.parametrize("test, n", [("tc_hu", 80), ("tc_hp", 122)])
def test_tc_power_at_published_n(test, n):
    est = estimate_power(PowerConfig(n=n, epsilon=1.0, test=test, trials=2000, seed=21), workers=4)
    assert est.power == pytest.approx(0.80, abs=0.07)


@TC_POWER_XFAIL
@pytest.mark.slow
def test_tc_hu_power_eps_001():
    est = estimate_power(PowerConfig(n=588, epsilon=0.01, test="tc_hu", trials=2000, seed=22), workers=4)
    assert est.power == pytest.approx(0.80, abs=0.07)


@pytest.mark.slow
def test_tc_hp_power_eps_001():
    est = estimate_power(PowerConfig(n=2974, epsilon=0.01, test="tc_hp", trials=2000, seed=23), workers=4)
    assert est.power == pytest.approx(0.80, abs=0.10)


@TC_POWER_XFAIL
@pytest.mark.slow
def test_power_ordering_tc_below_plus_below_new():
    ok = True
    for n in (20, 40, 60):
        p = {
            t: estimate_power(PowerConfig(n=n, epsilon=1.0, test=t, trials=1000, seed=24), workers=4).power
            for t in ("tc_hu", "tc_hu_plus", "new")
        }
        ok &= p["tc_hu"] <= p["tc_hu_plus"] <= p["new"]
    assert ok
