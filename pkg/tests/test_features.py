import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_panel
from socialvol.features import (
    DegenerateInputError,
    FeatureConfig,
    bull_minus_bear,
    derive_all,
    fit_social_pca,
    log_return,
    log_tr_diff,
    pca_social_change,
    true_range,
    true_range_series,
)
from socialvol.ingest import SentimentDaily

TWO = ("BULLISH_INTENSITY", "BEARISH_INTENSITY")


@pytest.mark.parametrize("mode", ["verbatim", "absolute"])
def test_true_range_flat_day(mode):
    assert true_range(10, 10, 10, mode) == 0


@pytest.mark.parametrize("mode", ["verbatim", "absolute"])
def test_true_range_gap_up(mode):
    assert true_range(12, 9, 8, mode) == 4


def test_true_range_gap_down_modes_diverge():
    assert true_range(10, 9, 12, "verbatim") == 1
    assert true_range(10, 9, 12, "absolute") == 3


def test_true_range_rejects_bad_prices():
    with pytest.raises(ValueError):
        true_range(10, 0, 5)
    with pytest.raises(ValueError):
        true_range(9, 10, 5)
    with pytest.raises(ValueError):
        true_range(10, 9, 5, mode="other")


@settings(max_examples=200, deadline=None)
@given(low=st.floats(0.01, 1e4), span=st.floats(0.0, 1e3), prev=st.floats(0.01, 1e4))
def test_true_range_bounds_and_symmetry(low, span, prev):
    high = low + span
    for mode in ("verbatim", "absolute"):
        assert true_range(high, low, prev, mode) >= high - low >= 0
    # absolute form enumerated directly with flipped gap signs
    flipped = max(high - low, abs(prev - low), abs(prev - high))
    assert true_range(high, low, prev, "absolute") == flipped


def test_true_range_series_matches_scalar():
    rng = np.random.default_rng(0)
    close = 100 + np.cumsum(rng.normal(size=50))
    high = close + rng.uniform(0, 2, 50)
    low = close - rng.uniform(0, 2, 50)
    for mode in ("verbatim", "absolute"):
        tr = true_range_series(high, low, close, mode)
        assert tr[0] == high[0] - low[0]
        for t in range(1, 50):
            assert tr[t] == true_range(high[t], low[t], close[t - 1], mode)


def test_log_tr_diff_values():
    out = log_tr_diff([2.0, 2.0, 2.0])
    assert math.isnan(out[0]) and out[1:].tolist() == [0.0, 0.0]
    assert log_tr_diff([1.0, math.e], floor=0.0)[1] == pytest.approx(1.0, abs=1e-12)
    assert log_tr_diff([1.0, math.e])[1] == pytest.approx(1.0, abs=1e-7)
    zero = log_tr_diff([0.0, 0.0])
    assert math.isnan(zero[0]) and zero[1] == 0.0
    with pytest.raises(ValueError):
        log_tr_diff([1.0])


def test_log_return_values():
    assert np.all(log_return([5.0, 5.0, 5.0])[1:] == 0)
    assert log_return([100.0, 100.0 * math.e])[1] == pytest.approx(1.0, abs=1e-12)
    assert log_return([100.0, 50.0])[1] == pytest.approx(-math.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        log_return([1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), c=st.floats(0.001, 1000.0))
def test_log_ratios_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.uniform(1, 10, 20)
    np.testing.assert_allclose(log_return(c * x)[1:], log_return(x)[1:], atol=1e-9)
    np.testing.assert_allclose(log_tr_diff(c * x, floor=0)[1:], log_tr_diff(x, floor=0)[1:], atol=1e-9)


@pytest.mark.parametrize("bull, bear, expected", [(1.5, 0.5, 1.0), (0.8, 0.8, 0.0), (0.0, 2.0, -2.0)])
def test_bull_minus_bear(bull, bear, expected):
    row = SentimentDaily("X", None, bull, bear, 0, 0, 0)
    assert bull_minus_bear(row) == pytest.approx(expected, abs=1e-15)


def _panel_from(a, b):
    return make_panel({"bullish_intensity": list(a), "bearish_intensity": list(b)})


def test_pca_perfectly_correlated():
    a = np.linspace(1, 5, 30)
    m = fit_social_pca(_panel_from(a, 2 * a + 1), TWO)
    assert m.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(m.loadings[0], [1 / math.sqrt(2)] * 2, atol=1e-9)


def test_pca_anticorrelated_sign_rule():
    rng = np.random.default_rng(2)
    a = rng.uniform(1, 5, 40)
    m = fit_social_pca(_panel_from(a, 10 - a + 0.01 * rng.normal(size=40)), TWO)
    l0 = m.loadings[0]
    np.testing.assert_allclose(np.abs(l0), [1 / math.sqrt(2)] * 2, atol=1e-3)
    assert l0[0] * l0[1] < 0
    # two standardized features always tie in magnitude; the first one wins
    assert l0[0] > 0


def _with_covariance(cov, n, seed):
    """Sample whose sample covariance is exactly ``cov``."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    x -= x.mean(axis=0)
    white = x @ np.linalg.inv(np.linalg.cholesky(np.cov(x.T)).T)
    return white @ np.linalg.cholesky(cov).T + 3.0


def test_pca_known_covariance():
    data = _with_covariance(np.array([[2.0, 1.0], [1.0, 2.0]]), 200, 0)
    np.testing.assert_allclose(np.cov(data.T), [[2, 1], [1, 2]], atol=1e-12)
    m = fit_social_pca(_panel_from(data[:, 0], data[:, 1]), TWO)
    np.testing.assert_allclose(m.loadings[0], [1 / math.sqrt(2)] * 2, atol=1e-6)
    assert m.explained_variance_ratio[0] == pytest.approx(0.75, abs=1e-6)


def test_pca_constant_column_reported():
    a = np.linspace(1, 5, 30)
    p = make_panel({"bullish_intensity": list(a), "bearish_intensity": [1.0] * 30,
                    "bull_scored_messages": list(range(30))})
    m = fit_social_pca(p, TWO + ("BULL_SCORED_MESSAGES",))
    assert m.constant_features == ("BEARISH_INTENSITY",)
    assert m.loadings[0][1] == 0.0


def test_pca_degenerate_and_short():
    p = _panel_from([1.0] * 10, [2.0] * 10)
    with pytest.raises(DegenerateInputError):
        fit_social_pca(p, TWO)
    with pytest.raises(ValueError):
        fit_social_pca(_panel_from([1.0, 2.0], [2.0, 1.0]), TWO)
    with pytest.raises(ValueError):
        fit_social_pca(p, ("BULLISH_INTENSITY",))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(10, 200))
def test_pca_properties(seed, n):
    rng = np.random.default_rng(seed)
    mix = rng.normal(size=(5, 5))
    raw = np.abs(rng.normal(size=(n, 5)) @ mix) + 0.1
    cols = ["bullish_intensity", "bearish_intensity"]
    p = make_panel({cols[0]: list(raw[:, 0]), cols[1]: list(raw[:, 1]),
                    "bull_scored_messages": list(np.round(raw[:, 2] * 50)),
                    "bear_scored_messages": list(np.round(raw[:, 3] * 50)),
                    "total_scanned_messages": list(np.round(raw[:, 4] * 90))})
    m = fit_social_pca(p)
    load = m.loadings[0]
    assert np.linalg.norm(load) == pytest.approx(1.0, abs=1e-9)
    assert 0 <= m.explained_variance_ratio[0] <= 1
    assert m.scores.shape[1] == n
    assert np.var(m.first_scores, ddof=1) == pytest.approx(m.eigenvalues[0], abs=1e-9)
    z = np.column_stack([p.column(f) for f in m.feature_names])
    z = (z - m.means) / np.where(m.stds == 0, 1, m.stds)
    dirs = rng.normal(size=(100, 5))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    along = np.var(z @ load, ddof=1)
    assert np.all(np.var(z @ dirs.T, axis=0, ddof=1) <= along + 1e-9)


def test_pca_multi_component_orthonormal():
    rng = np.random.default_rng(8)
    raw = np.abs(rng.normal(size=(60, 5))) + 0.1
    p = make_panel({"bullish_intensity": list(raw[:, 0]), "bearish_intensity": list(raw[:, 1]),
                    "bull_scored_messages": list(np.round(raw[:, 2] * 50))})
    m = fit_social_pca(p, TWO + ("BULL_SCORED_MESSAGES",), n_components=3)
    np.testing.assert_allclose(m.loadings @ m.loadings.T, np.eye(3), atol=1e-9)
    assert np.all(np.diff(m.explained_variance_ratio) <= 1e-12)


def test_pca_social_change():
    class M:
        first_scores = np.array([0.0, 1.0, 3.0])

    out = pca_social_change(M)
    assert math.isnan(out[0]) and out[1:].tolist() == [1.0, 2.0]
    M.first_scores = -M.first_scores
    assert pca_social_change(M)[1:].tolist() == [-1.0, -2.0]
    M.first_scores = np.ones(4)
    assert pca_social_change(M)[1:].tolist() == [0.0] * 3
    M.first_scores = np.array([1.0])
    with pytest.raises(ValueError):
        pca_social_change(M)


def test_derive_all_lag_structure():
    p = make_panel(n=3)
    d = derive_all(p, FeatureConfig(pca_features=TWO))
    for name in ("LOG_TR_DIFF", "LOG_RETURN", "PCA_SOCIAL_CHANGE"):
        col = d.derived[name]
        assert math.isnan(col[0]) and np.all(np.isfinite(col[1:]))
    for name in ("TR", "BULL_MINUS_BEAR", "PCA_SOCIAL"):
        assert np.all(np.isfinite(d.derived[name]))
    assert np.all(d.derived["TR"] >= 0)
    assert p.derived == {}


def test_derive_all_errors():
    with pytest.raises(ValueError):
        derive_all(make_panel(n=1), FeatureConfig(pca_features=TWO))
    flat = make_panel({k: [1.0] * 12 for k in ("bullish_intensity", "bearish_intensity",
                                                "bull_scored_messages", "bear_scored_messages",
                                                "total_scanned_messages")})
    with pytest.raises(DegenerateInputError):
        derive_all(flat)


def test_derive_all_deterministic():
    p = make_panel(n=40)
    a, b = derive_all(p), derive_all(p)
    for k in a.derived:
        np.testing.assert_array_equal(a.derived[k], b.derived[k])


def test_feature_config_validates():
    with pytest.raises(ValueError):
        FeatureConfig(tr_mode="wilder")
