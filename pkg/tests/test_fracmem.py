import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractumor.fracmem import (FractionalWeights, HistoryCache, a_coeff, a_prime_coeff,
                               history_sum, history_weights)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("k", [0, 1, 7, 1000, 10**6])
def test_weights_against_high_precision(alpha, k):
    mpmath.mp.dps = 40
    ts = 1e-3
    raw = ((mpmath.mpf(k) + 1) ** (1 - alpha) - mpmath.mpf(k) ** (1 - alpha)) \
        / (mpmath.mpf(ts) ** alpha * mpmath.gamma(2 - alpha))
    assert a_coeff(k, ts, alpha) == pytest.approx(float(raw), rel=1e-13)
    assert a_prime_coeff(k, ts, alpha) == pytest.approx(float(raw * 2 * ts / 3), rel=1e-13)


def test_first_weight_closed_form():
    alpha, ts = 0.3, 0.01
    assert a_coeff(0, ts, alpha) == pytest.approx(1 / (ts**alpha * math.gamma(2 - alpha)))


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_weights_positive_and_strictly_decreasing(alpha):
    w = FractionalWeights(alpha, 1e-3, 10**4)
    for arr in (w.a, w.a_prime):
        assert np.all(arr > 0)
        assert np.all(np.diff(arr) < 0)


def test_weights_are_read_only():
    w = FractionalWeights(0.5, 0.1, 10)
    with pytest.raises(ValueError):
        w.a[0] = 1.0


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        a_coeff(1, 0.0, 0.5)
    with pytest.raises(ValueError):
        FractionalWeights(1.0, 0.1, 5)
    with pytest.raises(ValueError):
        history_weights(0, FractionalWeights(0.5, 0.1, 5))


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.05, 0.95), n=st.integers(1, 400))
def test_history_telescopes_for_constant_entries(alpha, n):
    w = FractionalWeights(alpha, 1.0 / 400, 400)
    cache = HistoryCache(3)
    for _ in range(n):
        cache.append(np.ones(3))
    got = history_sum(cache, history_weights(n, w))
    expect = w.a_prime[0] - w.a_prime[n]
    assert np.max(np.abs(got - expect)) <= 1e-14


def test_history_sum_pairs_newest_entry_with_first_weight():
    cache = HistoryCache(1)
    for v in (1.0, 10.0, 100.0):
        cache.append([v])
    assert history_sum(cache, np.array([1.0, 0.0, 0.0]))[0] == 100.0
    assert history_sum(cache, np.array([0.0, 0.0, 1.0]))[0] == 1.0
    assert cache.terms_summed == 6


def test_history_sum_matches_exact_fsum():
    rng = np.random.default_rng(3)
    n = 3000
    data = rng.normal(size=(n, 2)) * 10.0 ** rng.integers(-8, 8, size=(n, 1))
    cache = HistoryCache.from_array(data, 2)
    wts = rng.uniform(size=n)
    got = history_sum(cache, wts)
    for j in range(2):
        exact = math.fsum(wts[k] * data[n - 1 - k, j] for k in range(n))
        assert got[j] == pytest.approx(exact, rel=1e-14, abs=1e-14)


def test_strict_variant_replaces_oldest_difference():
    w = FractionalWeights(0.4, 0.1, 10, strict_aprime_n_zero=True)
    hw = history_weights(4, w)
    assert hw[-1] == w.a_prime[3]
    assert np.array_equal(hw[:-1], w.a_prime[:3] - w.a_prime[1:4])


def test_cache_growth_and_views():
    cache = HistoryCache(2, capacity=1)
    for i in range(5):
        cache.append([i, -i])
    assert len(cache) == 5
    assert cache.entries[-1].tolist() == [4, -4]
    with pytest.raises(ValueError):
        cache.entries[0, 0] = 9
    with pytest.raises(ValueError):
        cache.append([1, 2, 3])
