"""Recursive feature elimination with a linear L2-SVM."""

from __future__ import annotations

import math

import numpy as np

from ..dataset import LabeledDataset
from ..svm import SvmConfig, train_linear_svm
from .ranking import FeatureRanking, SelectorConfig


def rfe_trace(data: LabeledDataset, C: float = 1.0, drop_fraction: float = 0.1,
              svm_tol: float = 1e-3, max_iter: int = 1000):
    """Run the elimination and return ``(rounds, final_weights)``.

    ``rounds`` lists, per round, the surviving feature indices, their SVM
    weights and the indices removed. Features with the smallest w_j^2 go first;
    among equal weights the higher index is removed first.
    """
    cfg = SvmConfig(C=C, tol=svm_tol, max_iter=max_iter)
    surviving = np.arange(data.n_features)
    rounds = []
    while True:
        model = train_linear_svm(data.select_features(surviving), cfg)
        w = model.w
        if surviving.size <= 1:
            rounds.append((surviving, w, np.array([], dtype=np.int64)))
            return rounds
        n_drop = min(max(1, math.ceil(drop_fraction * surviving.size)), surviving.size - 1)
        # ascending w^2, ties: larger feature index first
        order = np.lexsort((-surviving, w * w))
        dropped = surviving[order[:n_drop]]
        rounds.append((surviving, w, dropped))
        surviving = np.sort(surviving[order[n_drop:]])


def rfe_rank(data: LabeledDataset, cfg: SelectorConfig) -> FeatureRanking:
    """Score = elimination round, refined within a round by |w_j| relative to that round's largest.

    A feature removed in round r scores in [r, r + 0.5]; the last survivor scores
    in [R, R + 0.5] with R the number of rounds, so later elimination always wins.
    """
    rounds = rfe_trace(data, cfg.C, cfg.rfe_drop_fraction, max(cfg.tol, 1e-3), cfg.max_iter)
    scores = np.zeros(data.n_features)
    for r, (surv, w, dropped) in enumerate(rounds):
        mag = np.abs(w)
        top = mag.max()
        rel = mag / top if top > 0 else np.zeros_like(mag)
        pos = {j: k for k, j in enumerate(surv)}
        members = dropped if dropped.size else surv
        for j in members:
            scores[j] = r + 0.5 * rel[pos[j]]
    return FeatureRanking(scores)
