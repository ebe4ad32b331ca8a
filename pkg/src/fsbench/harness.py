"""Benchmark pipeline: selector tuning, ranking, SVM model selection and test evaluation.

The pipeline for one method is

1. tune the selector's parameters on the validation split: for each candidate,
   rank on the training split, train a linear SVM (C = 1) on the top ``k_tune``
   features and score it by validation BSR;
2. rank with the chosen parameters on training + validation;
3. for each k, restrict to the top-k features and pick an SVM by stratified
   k-fold cross-validation over a fixed grid of C values and kernels;
4. retrain that SVM on training + validation and report test BSR.

Filters go through the same path. Golub has nothing to tune; RFE tunes the C of
its inner SVM over the model-selection C values.
"""

from __future__ import annotations

import csv
import io
import itertools
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .dataset import DatasetBundle, LabeledDataset, format_number
from .embedded import (FeatureRanking, SelectorConfig, canonical_method, elastic_net_rank,
                       l1_svm_rank, l21_rank, ll_rank, rfe_rank)
from .filters import golub_rank, shrunken_centroid_rank
from .svm import (KernelModel, KernelSpec, SvmConfig, predict, solve_kernel_dual,
                  train_linear_svm)

LOG_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)

DEFAULT_PARAM_GRIDS: dict[str, dict[str, tuple]] = {
    "l1svm": {"lam": LOG_GRID},
    "rfe": {"C": (0.1, 1.0, 10.0, 100.0)},
    "en": {"lam": LOG_GRID, "lambda2": LOG_GRID},
    "l21": {"lam": LOG_GRID},
    "ll": {"lam": LOG_GRID},
    "golub": {},
    "sc": {"delta": (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)},
}

DEFAULT_K_VALUES = tuple(range(50, 1001, 50))
TUNE_K = 200


# ------------------------------------------------------------------- metrics

def bsr(predicted, actual) -> float:
    """Balanced success rate: mean of sensitivity and specificity."""
    p = np.asarray(predicted).ravel()
    a = np.asarray(actual).ravel()
    if p.shape != a.shape:
        raise ValueError("predicted and actual labels differ in length")
    pos = a == 1
    neg = a == -1
    if not (pos.any() and neg.any()):
        raise ValueError("bsr needs both classes in the actual labels")
    sens = np.mean(p[pos] == 1)
    spec = np.mean(p[neg] == -1)
    return float(0.5 * (sens + spec))


def probe_retention(ranking: FeatureRanking, probe_flags, k: int) -> float:
    """Percentage of the top-k features that are probes."""
    if probe_flags is None:
        raise ValueError("probe flags are not available for this dataset")
    flags = np.asarray(probe_flags, dtype=bool)
    if flags.size != len(ranking):
        raise ValueError("probe flags and ranking differ in length")
    if not 1 <= k <= len(ranking):
        raise ValueError("k must lie in [1, n_features]")
    return 100.0 * float(np.sum(flags[ranking.top(k)])) / k


# ------------------------------------------------------------- SVM selection

@dataclass(frozen=True)
class GridSpec:
    C_values: tuple = (0.1, 1.0, 10.0, 100.0)
    gamma_values: tuple = (0.005, 0.02, 0.5, 2.0)
    include_linear: bool = True
    folds: int = 5
    tol: float = 1e-3
    max_iter: int = 1000

    def __post_init__(self):
        if not self.C_values or not (self.include_linear or self.gamma_values):
            raise ValueError("grid must be nonempty")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")

    def candidates(self) -> list[SvmConfig]:
        """Candidates in tie-break order: linear before rbf, then smaller C, then smaller gamma."""
        kernels = ([KernelSpec()] if self.include_linear else []) + [
            KernelSpec("rbf", g) for g in sorted(self.gamma_values)]
        out = []
        for kern in kernels:
            for C in sorted(self.C_values):
                out.append(SvmConfig(C=C, kernel=kern, tol=self.tol, max_iter=self.max_iter))
        return out


def stratified_folds(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold index per example; each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    assign = np.empty(y.size, dtype=np.int64)
    rng = np.random.default_rng(seed)
    offset = 0
    for c in (1, -1):
        idx = np.flatnonzero(y == c)
        if idx.size < folds:
            raise ValueError("class %+d has %d examples, fewer than %d folds"
                             % (c, idx.size, folds))
        idx = idx[rng.permutation(idx.size)]
        # continue the deal where the previous class stopped to balance fold sizes
        assign[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return assign


@dataclass(frozen=True, eq=False)
class ModelSelection:
    config: SvmConfig
    cv_bsr: np.ndarray  # mean CV BSR per candidate, in GridSpec.candidates() order
    candidates: tuple


class _Grams:
    """Linear Gram and squared distances of one dataset, computed once and shared."""

    def __init__(self, X):
        G = X @ X.T
        self.linear = np.asarray(G.toarray() if hasattr(G, "toarray") else G, dtype=np.float64)
        diag = np.diag(self.linear)
        d2 = diag[:, None] + diag[None, :] - 2.0 * self.linear
        np.maximum(d2, 0.0, out=d2)
        np.fill_diagonal(d2, 0.0)
        self.sqdist = d2

    def kernel(self, spec: KernelSpec) -> np.ndarray:
        return self.linear if spec.kind == "linear" else spec.from_sqdist(self.sqdist)


def _fit_predict(K, y, train, test, cfg: SvmConfig) -> np.ndarray:
    Ktr = K[np.ix_(train, train)]
    alpha, b, _, _ = solve_kernel_dual(Ktr, y[train], cfg.C, cfg.tol, cfg.max_iter)
    f = K[np.ix_(test, train)] @ (alpha * y[train]) + b
    return np.where(f >= 0, 1, -1)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Apply fn to every item; results come back in item order whatever ``jobs`` is."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def model_select_svm(data: LabeledDataset, grid: GridSpec = GridSpec(), seed: int = 0,
                     jobs: int = 1) -> ModelSelection:
    """Pick the grid point with the best mean cross-validated BSR; the first best wins ties."""
    y = data.y.astype(np.float64)
    fold = stratified_folds(data.y, grid.folds, seed)
    cands = grid.candidates()
    grams = _Grams(data.X)
    kernels = {}
    for cfg in cands:
        if cfg.kernel not in kernels:
            kernels[cfg.kernel] = grams.kernel(cfg.kernel)

    def task(pair):
        ci, f = pair
        cfg = cands[ci]
        test = np.flatnonzero(fold == f)
        train = np.flatnonzero(fold != f)
        pred = _fit_predict(kernels[cfg.kernel], y, train, test, cfg)
        return bsr(pred, data.y[test])

    pairs = [(ci, f) for ci in range(len(cands)) for f in range(grid.folds)]
    scores = np.array(_map(task, pairs, jobs)).reshape(len(cands), grid.folds).mean(axis=1)
    best = int(np.argmax(scores))
    return ModelSelection(cands[best], scores, tuple(cands))


def train_final_svm(data: LabeledDataset, cfg: SvmConfig) -> KernelModel:
    """Kernel-form SVM on all of ``data``; the same solver as in cross-validation."""
    y = data.y.astype(np.float64)
    K = _Grams(data.X).kernel(cfg.kernel)
    alpha, b, steps, ok = solve_kernel_dual(K, y, cfg.C, cfg.tol, cfg.max_iter)
    sv = np.flatnonzero(alpha > 0)
    X = data.X
    return KernelModel(X[sv], alpha[sv] * y[sv], b, cfg.kernel, ok, steps)


# ---------------------------------------------------------------- selectors

_RANKERS: dict[str, Callable[[LabeledDataset, SelectorConfig], FeatureRanking]] = {
    "l1svm": l1_svm_rank,
    "rfe": rfe_rank,
    "en": elastic_net_rank,
    "l21": l21_rank,
    "ll": ll_rank,
    "golub": lambda data, cfg: golub_rank(data),
    "sc": lambda data, cfg: shrunken_centroid_rank(data, cfg.delta, cfg.corr_threshold),
}


def rank_features(data: LabeledDataset, cfg: SelectorConfig) -> FeatureRanking:
    return _RANKERS[cfg.method](data, cfg)


def rank_on_train_plus_validation(bundle: DatasetBundle, cfg: SelectorConfig) -> FeatureRanking:
    return rank_features(bundle.train_plus_validation(), cfg)


def selector_candidates(base: SelectorConfig, param_grid: Optional[Mapping[str, Sequence]] = None
                        ) -> list[SelectorConfig]:
    grid = DEFAULT_PARAM_GRIDS[base.method] if param_grid is None else param_grid
    names = sorted(grid)
    for name in names:
        if len(grid[name]) == 0:
            raise ValueError("empty grid for %s" % name)
    return [base.with_(**dict(zip(names, combo)))
            for combo in itertools.product(*(grid[n] for n in names))]


def validation_bsr(bundle: DatasetBundle, cfg: SelectorConfig, k: int = TUNE_K) -> float:
    """Rank on train, fit a linear SVM (C = 1) on the top-k features, score on validation."""
    ranking = rank_features(bundle.train, cfg)
    top = ranking.top(min(k, len(ranking)))
    model = train_linear_svm(bundle.train.select_features(top), SvmConfig(C=1.0))
    return bsr(predict(model, bundle.validation.select_features(top)), bundle.validation.y)


def tune_selector(bundle: DatasetBundle, method: str, param_grid=None, k: int = TUNE_K,
                  base: Optional[SelectorConfig] = None, jobs: int = 1) -> SelectorConfig:
    """Grid search over selector parameters; ties go to the most strongly regularized candidate."""
    base = SelectorConfig(method=canonical_method(method)) if base is None else \
        base.with_(method=canonical_method(method))
    cands = selector_candidates(base, param_grid)
    if len(cands) == 1:
        return cands[0]
    scores = _map(lambda c: validation_bsr(bundle, c, k), cands, jobs)
    best = max(scores)
    tied = [c for c, s in zip(cands, scores) if s == best]
    # max() keeps the first of equal keys, so grid order settles any remaining tie
    return max(tied, key=lambda c: c.regularization_strength())


# ---------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class EvaluationReport:
    method: str
    k: int
    bsr_test: float
    probes_retained_pct: Optional[float]
    chosen_C: float
    chosen_kernel: str
    chosen_gamma: Optional[float]
    selector_seconds: float
    classify_seconds: float

    def __post_init__(self):
        if not 0.0 <= self.bsr_test <= 1.0:
            raise ValueError("bsr out of range")

    def bsr_probes(self) -> str:
        """Table-style cell, e.g. ``0.9520(12)``."""
        s = "%.4f" % self.bsr_test
        if self.probes_retained_pct is not None:
            s += "(%s)" % format_number(round(self.probes_retained_pct, 2))
        return s


@dataclass(frozen=True, eq=False)
class BsrCurve:
    k_values: np.ndarray
    bsr: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k_values, dtype=np.int64)
        if k.size > 1 and np.any(np.diff(k) <= 0):
            raise ValueError("k values must be strictly increasing")
        object.__setattr__(self, "k_values", k)
        object.__setattr__(self, "bsr", np.asarray(self.bsr, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Evaluation:
    config: SelectorConfig
    ranking: FeatureRanking
    curve: BsrCurve
    reports: list = field(default_factory=list)


def _check_k_values(k_values) -> list[int]:
    ks = [int(k) for k in k_values]
    if not ks:
        raise ValueError("k list must be nonempty")
    if any(k < 1 for k in ks):
        raise ValueError("every k must be >= 1")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k values must be strictly increasing")
    return ks


def timed_ranking(data: LabeledDataset, cfg: SelectorConfig, repeats: int = 1):
    """Rank ``repeats`` times; return the ranking and the median wall-clock seconds."""
    times = []
    ranking = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        ranking = rank_features(data, cfg)
        times.append(time.perf_counter() - t0)
    return ranking, statistics.median(times)


def evaluate(bundle: DatasetBundle, method: str, k_values=DEFAULT_K_VALUES,
             cfg: Optional[SelectorConfig] = None, grid: GridSpec = GridSpec(),
             seed: int = 0, jobs: int = 1, timing_repeats: int = 1,
             param_grid=None) -> Evaluation:
    """Run the full pipeline for one method.

    ``cfg`` skips tuning when given. ``k`` larger than the feature count uses
    every feature (the no-selection baseline) but is reported as requested.
    ``selector_seconds`` covers ranking on training + validation only;
    ``classify_seconds`` covers model selection, final training and prediction.
    """
    ks = _check_k_values(k_values)
    method = canonical_method(method)
    if cfg is None:
        cfg = tune_selector(bundle, method, param_grid, base=SelectorConfig(method=method, seed=seed),
                            jobs=jobs)
    else:
        cfg = cfg.with_(method=method)
    tv = bundle.train_plus_validation()
    ranking, sel_s = timed_ranking(tv, cfg, timing_repeats)
    flags = bundle.probe_flags
    d = bundle.n_features
    reports = []
    for k in ks:
        kk = min(k, d)
        top = ranking.top(kk)
        t0 = time.perf_counter()
        sel = model_select_svm(tv.select_features(top), grid, seed=seed, jobs=jobs)
        model = train_final_svm(tv.select_features(top), sel.config)
        score = bsr(predict(model, bundle.test.select_features(top)), bundle.test.y)
        cls_s = time.perf_counter() - t0
        kern = sel.config.kernel
        reports.append(EvaluationReport(
            method, k, score,
            probe_retention(ranking, flags, kk) if flags is not None else None,
            sel.config.C, kern.kind, kern.gamma, sel_s, cls_s))
    curve = BsrCurve(ks, [r.bsr_test for r in reports])
    return Evaluation(cfg, ranking, curve, reports)


# ------------------------------------------------------------------- output

REPORT_FIELDS = ["method", "k", "bsr", "probes_pct", "chosen_C", "chosen_kernel",
                 "chosen_gamma", "selector_s", "classify_s"]


def _opt(v) -> str:
    return "" if v is None else format_number(v)


def report_csv(reports: Sequence[EvaluationReport], header: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for r in reports:
        w.writerow([r.method, r.k, format_number(r.bsr_test), _opt(r.probes_retained_pct),
                    format_number(r.chosen_C), r.chosen_kernel, _opt(r.chosen_gamma),
                    "%.6f" % r.selector_seconds, "%.6f" % r.classify_seconds])
    return buf.getvalue()


def curve_csv(curve: BsrCurve, header: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "bsr"])
    for k, b in zip(curve.k_values, curve.bsr):
        w.writerow([int(k), format_number(b)])
    return buf.getvalue()


def bench_csv(reports: Sequence[EvaluationReport], header: str = "") -> str:
    """Combined table: BSR(probes%) per method and k, plus selector seconds."""
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "k", "bsr_probes", "selector_s"])
    for r in reports:
        w.writerow([r.method, r.k, r.bsr_probes(), "%.6f" % r.selector_seconds])
    return buf.getvalue()
