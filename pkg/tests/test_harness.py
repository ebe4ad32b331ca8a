import numpy as np
import pytest

from fsbench.dataset import DatasetBundle, LabeledDataset, SynthSpec, generate_synthetic
from fsbench.embedded import FeatureRanking, SelectorConfig
from fsbench.harness import (BsrCurve, EvaluationReport, GridSpec, bsr, curve_csv, evaluate,
                             model_select_svm, probe_retention, rank_on_train_plus_validation,
                             report_csv, selector_candidates, stratified_folds, tune_selector)


def test_bsr_examples():
    y = np.array([1, 1, -1, -1])
    assert bsr(y, y) == 1.0
    assert bsr(np.ones(4), y) == 0.5
    assert bsr(np.array([1, 1, -1, 1]), y) == 0.75
    with pytest.raises(ValueError):
        bsr(np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        bsr(np.ones(3), y)


def test_bsr_relabel_invariance(rng):
    for _ in range(20):
        a = np.where(rng.random(30) < 0.4, 1, -1)
        a[:2] = [1, -1]
        p = np.where(rng.random(30) < 0.5, 1, -1)
        assert bsr(p, a) == bsr(-p, -a)


def test_probe_retention_examples():
    flags = np.zeros(100, dtype=bool)
    flags[:25] = True
    scores = np.zeros(100)
    scores[:25] = 2.0
    scores[50:75] = 1.0
    r = FeatureRanking(scores)
    assert probe_retention(r, flags, 50) == 50.0
    assert probe_retention(r, np.zeros(100, dtype=bool), 50) == 0.0
    with pytest.raises(ValueError):
        probe_retention(r, None, 50)
    with pytest.raises(ValueError):
        probe_retention(r, flags, 101)


def test_grid_is_twenty_in_tie_order():
    cands = GridSpec().candidates()
    assert len(cands) == 20
    assert [c.kernel.kind for c in cands[:4]] == ["linear"] * 4
    assert [c.C for c in cands[:4]] == [0.1, 1.0, 10.0, 100.0]
    keys = [(c.kernel.gamma or 0.0, c.C) for c in cands[4:]]
    assert keys == sorted(keys)
    assert {c.kernel.gamma for c in cands[4:]} == {0.005, 0.02, 0.5, 2.0}


def test_stratified_folds():
    y = np.array([1] * 13 + [-1] * 27)
    f = stratified_folds(y, 5, seed=3)
    np.testing.assert_array_equal(f, stratified_folds(y, 5, seed=3))
    for k in range(5):
        assert 2 <= np.sum((f == k) & (y == 1)) <= 3
        assert 5 <= np.sum((f == k) & (y == -1)) <= 6
    with pytest.raises(ValueError, match="fewer than 5 folds"):
        stratified_folds(np.array([1] * 4 + [-1] * 10), 5)


def test_model_selection_separable(rng):
    X = rng.standard_normal((120, 4))
    score = X @ [1.0, -1.0, 0.5, 0.0]
    X = X[np.abs(score) > 0.5][:60]  # keep a margin so held-out points fall clear of it
    y = np.where(X @ [1.0, -1.0, 0.5, 0.0] >= 0, 1, -1)
    sel = model_select_svm(LabeledDataset(X, y))
    assert len(sel.cv_bsr) == 20
    assert sel.cv_bsr.max() == 1.0
    assert sel.config == sel.candidates[int(np.argmax(sel.cv_bsr))]


def test_model_selection_ties_prefer_first_candidate():
    # perfectly separable along one axis: many configs reach 1.0, the first (linear, C=0.1) wins
    X = np.array([[v, 0.0] for v in (-3, -2.5, -2, -1.5, -1, 1, 1.5, 2, 2.5, 3)])
    y = np.array([-1] * 5 + [1] * 5)
    sel = model_select_svm(LabeledDataset(X, y))
    assert sel.cv_bsr[0] == 1.0
    assert sel.config.kernel.kind == "linear" and sel.config.C == 0.1


def test_model_selection_independent_of_jobs(rng):
    X = rng.standard_normal((50, 5))
    y = np.where(X[:, 0] * X[:, 1] + 0.2 * rng.standard_normal(50) > 0, 1, -1)
    a = model_select_svm(LabeledDataset(X, y), jobs=1)
    b = model_select_svm(LabeledDataset(X, y), jobs=4)
    np.testing.assert_array_equal(a.cv_bsr, b.cv_bsr)
    assert a.config == b.config


@pytest.fixture(scope="module")
def small_bundle():
    return generate_synthetic(SynthSpec(n_train=120, n_valid=60, n_test=120, d_real=40,
                                        d_probes=20, k_informative=5, seed=4))


def test_tune_one_point_grid(small_bundle):
    cfg = tune_selector(small_bundle, "en", {"lam": (0.5,), "lambda2": (2.0,)})
    assert cfg.lam == 0.5 and cfg.lambda2 == 2.0
    assert tune_selector(small_bundle, "golub").method == "golub"


def test_tune_prefers_sane_over_all_zero(small_bundle):
    # a huge penalty zeroes every weight and leaves an arbitrary (index-order) ranking
    cfg = tune_selector(small_bundle, "l1svm", {"lam": (1e9, 0.1)}, k=5)
    assert cfg.lam == 0.1


def test_tune_ties_go_to_stronger_regularization(small_bundle):
    # both values zero the model: identical rankings, identical validation BSR
    cfg = tune_selector(small_bundle, "l1svm", {"lam": (1e8, 1e9)}, k=5)
    assert cfg.lam == 1e9


def test_tune_is_deterministic_and_jobs_independent(small_bundle):
    grid = {"lam": (0.01, 1.0, 10.0)}
    a = tune_selector(small_bundle, "l21", grid, k=10)
    b = tune_selector(small_bundle, "l21", grid, k=10, jobs=3)
    assert a == b


def test_selector_candidates_default_grids():
    assert len(selector_candidates(SelectorConfig(method="en"))) == 36
    assert len(selector_candidates(SelectorConfig(method="l1svm"))) == 6
    assert len(selector_candidates(SelectorConfig(method="golub"))) == 1
    assert len(selector_candidates(SelectorConfig(method="rfe"))) == 4
    with pytest.raises(ValueError):
        selector_candidates(SelectorConfig(method="en"), {"lam": ()})


def test_rank_on_train_plus_validation(small_bundle):
    cfg = SelectorConfig(method="en", lam=0.5)
    r = rank_on_train_plus_validation(small_bundle, cfg)
    assert len(r) == small_bundle.n_features
    np.testing.assert_array_equal(r.scores, rank_on_train_plus_validation(small_bundle, cfg).scores)


def test_evaluate_contract(small_bundle):
    ev = evaluate(small_bundle, "en", [5, 20, 1000], cfg=SelectorConfig(method="en", lam=0.5))
    assert [r.k for r in ev.reports] == [5, 20, 1000]
    np.testing.assert_array_equal(ev.curve.k_values, [5, 20, 1000])
    for r in ev.reports:
        assert 0.0 <= r.bsr_test <= 1.0
        assert r.selector_seconds > 0 and r.classify_seconds > 0
        assert r.probes_retained_pct is not None
    # nested top-k sets
    top5, top20 = set(ev.ranking.top(5)), set(ev.ranking.top(20))
    assert top5 <= top20
    # k beyond the feature count is the all-feature baseline
    assert ev.reports[-1].probes_retained_pct == pytest.approx(
        100.0 * small_bundle.probe_flags.mean())
    with pytest.raises(ValueError):
        evaluate(small_bundle, "en", [0])
    with pytest.raises(ValueError):
        evaluate(small_bundle, "en", [20, 10])


def test_evaluate_baseline_equals_no_selection(small_bundle):
    d = small_bundle.n_features
    a = evaluate(small_bundle, "golub", [d])
    b = evaluate(small_bundle, "en", [d], cfg=SelectorConfig(method="en", lam=0.5))
    assert a.reports[0].bsr_test == b.reports[0].bsr_test


def test_evaluate_without_probe_flags(small_bundle):
    strip = lambda ds: LabeledDataset(ds.X, ds.y, None, ds.split)  # noqa: E731
    b = DatasetBundle(strip(small_bundle.train), strip(small_bundle.validation),
                      strip(small_bundle.test))
    ev = evaluate(b, "golub", [10])
    assert ev.reports[0].probes_retained_pct is None
    assert report_csv(ev.reports).splitlines()[1].split(",")[3] == ""


def test_report_and_curve_csv():
    r = EvaluationReport("en", 50, 0.875, 12.0, 10.0, "rbf", 0.02, 1.5, 2.25)
    text = report_csv([r], "# h\n").splitlines()
    assert text[1] == "method,k,bsr,probes_pct,chosen_C,chosen_kernel,chosen_gamma,selector_s,classify_s"
    assert text[2].startswith("en,50,0.875,12,10,rbf,0.02,")
    assert r.bsr_probes() == "0.8750(12)"
    c = curve_csv(BsrCurve([50, 100], [0.5, 0.75])).splitlines()
    assert c == ["k,bsr", "50,0.5", "100,0.75"]
    with pytest.raises(ValueError):
        BsrCurve([100, 50], [0.1, 0.2])
    with pytest.raises(ValueError):
        EvaluationReport("en", 1, 1.5, None, 1.0, "linear", None, 1.0, 1.0)
