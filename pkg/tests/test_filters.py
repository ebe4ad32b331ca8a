import numpy as np
import pytest

from fsbench.dataset import LabeledDataset, SynthSpec, generate_synthetic
from fsbench.filters import (GOLUB_EPS, golub_rank, golub_scores, shrunken_centroid_rank,
                             shrunken_statistics)


def _ds(X, y):
    return LabeledDataset(np.asarray(X, dtype=float), np.asarray(y))


def test_golub_arithmetic():
    ds = _ds([[2.0], [4.0], [0.0], [2.0]], [1, 1, -1, -1])
    assert golub_scores(ds)[0] == pytest.approx(1.0, abs=1e-11)


def test_golub_identical_feature_and_zero_variance():
    ds = _ds([[1.0, 3.0], [1.0, 3.0], [1.0, 5.0], [1.0, 5.0]], [1, 1, -1, -1])
    s = golub_scores(ds)
    assert s[0] == 0.0
    assert s[1] == pytest.approx(2.0 / GOLUB_EPS)
    assert np.isfinite(s[1])
    assert golub_rank(ds).order[0] == 1


def test_single_class_rejected():
    ds = _ds([[1.0], [2.0]], [1, 1])
    with pytest.raises(ValueError, match="both classes required"):
        golub_rank(ds)
    with pytest.raises(ValueError, match="both classes required"):
        shrunken_centroid_rank(ds)


def _random(rng, n=40, d=12):
    X = rng.standard_normal((n, d)) * rng.uniform(0.5, 3.0, d)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[:2] = [1, -1]
    X[y == 1, :3] += 1.0
    return _ds(X, y)


def test_golub_shift_and_scale_invariance(rng):
    ds = _random(rng)
    base = golub_rank(ds)
    shifted = _ds(ds.X + rng.standard_normal(ds.n_features) * 10, ds.y)
    np.testing.assert_allclose(golub_scores(shifted), base.scores, rtol=1e-9)
    np.testing.assert_array_equal(golub_rank(_ds(ds.X * 3.7, ds.y)).order, base.order)
    # per-feature scaling by s changes nothing either: both numerator and denominator scale
    s = rng.uniform(0.1, 10, ds.n_features) * rng.choice([-1, 1], ds.n_features)
    np.testing.assert_allclose(golub_scores(_ds(ds.X * s, ds.y)), base.scores, rtol=1e-9)


def test_order_invariance(rng):
    ds = _random(rng)
    perm = rng.permutation(ds.n_examples)
    other = _ds(ds.X[perm], ds.y[perm])
    np.testing.assert_allclose(golub_scores(other), golub_scores(ds), rtol=1e-12)
    np.testing.assert_allclose(shrunken_centroid_rank(other, 0.3).scores,
                               shrunken_centroid_rank(ds, 0.3).scores, rtol=1e-12)


def test_sc_statistic_by_hand():
    X = np.array([[1.0, 0.0], [3.0, 2.0], [0.0, 1.0], [2.0, 5.0], [4.0, 2.0]])
    y = np.array([1, 1, -1, -1, -1])
    n, npos, nneg = 5, 2, 3
    mean = X.mean(0)
    mp, mn = X[y == 1].mean(0), X[y == -1].mean(0)
    within = ((X[y == 1] - mp) ** 2).sum(0) + ((X[y == -1] - mn) ** 2).sum(0)
    s = np.sqrt(within / (n - 2))
    s0 = np.median(s)
    dp = (mp - mean) / (np.sqrt(1 / npos - 1 / n) * (s + s0))
    dn = (mn - mean) / (np.sqrt(1 / nneg - 1 / n) * (s + s0))
    expected = np.maximum(np.abs(dp), np.abs(dn))
    np.testing.assert_allclose(shrunken_statistics(_ds(X, y), 0.0), expected, rtol=1e-12)


def test_sc_no_shrinkage_no_filter_equals_raw(rng):
    ds = _random(rng)
    r = shrunken_centroid_rank(ds, 0.0, 1.0)
    np.testing.assert_array_equal(r.scores, shrunken_statistics(ds, 0.0))


def test_sc_large_delta_zeroes_everything(rng):
    ds = _random(rng)
    r = shrunken_centroid_rank(ds, 1e6)
    assert np.all(r.scores == 0.0)
    np.testing.assert_array_equal(r.order, np.arange(ds.n_features))


def test_sc_monotone_in_delta(rng):
    ds = _random(rng)
    prev = shrunken_statistics(ds, 0.0)
    for delta in np.linspace(0.05, 3.0, 30):
        cur = shrunken_statistics(ds, delta)
        assert np.all(cur <= prev + 1e-15)
        prev = cur


def test_sc_duplicated_pair_keeps_one():
    # three features: a strong one, its duplicate, and a weaker independent one
    rng = np.random.default_rng(8)
    y = np.array([1, -1] * 10)
    a = y * 2.0 + rng.standard_normal(20) * 0.5
    c = y * 0.5 + rng.standard_normal(20)
    X = np.column_stack([a, c, a])
    r = shrunken_centroid_rank(_ds(X, y), 0.0, 0.9)
    raw = shrunken_statistics(_ds(X, y), 0.0)
    assert raw[0] == pytest.approx(raw[2]) and raw[0] > raw[1]
    # the greedy pass keeps feature 0 (lower index wins the tie), drops its duplicate
    assert r.scores[0] > 0 and r.scores[2] == 0.0 and r.scores[1] > 0
    np.testing.assert_array_equal(r.order, [0, 1, 2])


def test_sc_argument_checks(rng):
    ds = _random(rng)
    with pytest.raises(ValueError):
        shrunken_centroid_rank(ds, -1.0)
    with pytest.raises(ValueError):
        shrunken_centroid_rank(ds, 0.0, 0.0)


def test_filters_find_informative_features():
    b = generate_synthetic(SynthSpec(n_train=300, n_valid=0, n_test=0, d_real=100, d_probes=50,
                                     k_informative=5, seed=2))
    inf = set(b.truth.informative)
    assert len(inf & set(golub_rank(b.train).top(15))) >= 4
    assert len(inf & set(shrunken_centroid_rank(b.train).top(15))) >= 4
