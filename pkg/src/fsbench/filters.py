"""Reference filter rankings: Golub signal-to-noise and uncorrelated shrunken centroids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .dataset import LabeledDataset
from .embedded.ranking import FeatureRanking

GOLUB_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class ClassStats:
    """Per-feature class means and population standard deviations, plus pooled values."""

    mean_pos: np.ndarray
    mean_neg: np.ndarray
    std_pos: np.ndarray
    std_neg: np.ndarray
    mean_all: np.ndarray
    pooled_std: np.ndarray  # within-class, divisor n - 2
    n_pos: int
    n_neg: int

    @classmethod
    def compute(cls, data: LabeledDataset) -> "ClassStats":
        y = data.y
        n_pos, n_neg = int(np.sum(y == 1)), int(np.sum(y == -1))
        if n_pos == 0 or n_neg == 0:
            raise ValueError("both classes required")
        X = data.X
        pos = X[y == 1] if sp.issparse(X) else X[y == 1, :]
        neg = X[y == -1] if sp.issparse(X) else X[y == -1, :]
        mp, sdp = linalg.column_moments(pos)
        mn, sdn = linalg.column_moments(neg)
        n = n_pos + n_neg
        mean_all = (n_pos * mp + n_neg * mn) / n
        within = n_pos * sdp**2 + n_neg * sdn**2
        pooled = np.sqrt(within / max(n - 2, 1))
        return cls(mp, mn, sdp, sdn, mean_all, pooled, n_pos, n_neg)


def golub_scores(data: LabeledDataset) -> np.ndarray:
    st = ClassStats.compute(data)
    return np.abs(st.mean_pos - st.mean_neg) / (st.std_pos + st.std_neg + GOLUB_EPS)


def golub_rank(data: LabeledDataset) -> FeatureRanking:
    """|mu+ - mu-| / (sigma+ + sigma- + 1e-12) with population standard deviations."""
    return FeatureRanking(golub_scores(data))


def shrunken_statistics(data: LabeledDataset, delta: float = 0.0) -> np.ndarray:
    """max over classes of |soft_threshold(d_jk, delta)|, with

    d_jk = (class mean - overall mean) / (m_k * (s_j + s0)),  m_k = sqrt(1/n_k - 1/n),
    s_j the pooled within-class std and s0 its median over features.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    st = ClassStats.compute(data)
    n = st.n_pos + st.n_neg
    s0 = float(np.median(st.pooled_std))
    denom_base = st.pooled_std + s0
    out = np.zeros(denom_base.size)
    for mean_k, n_k in ((st.mean_pos, st.n_pos), (st.mean_neg, st.n_neg)):
        m_k = np.sqrt(1.0 / n_k - 1.0 / n)
        denom = m_k * denom_base
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(denom > 0, (mean_k - st.mean_all) / denom, 0.0)
        out = np.maximum(out, np.abs(linalg.soft_threshold(d, delta)))
    return out


def _decorrelate(X, raw: np.ndarray, threshold: float) -> np.ndarray:
    """Greedy pass in descending-score order; zero a feature too correlated with a kept one."""
    scores = raw.copy()
    order = np.lexsort((np.arange(raw.size), -raw))
    order = order[raw[order] > 0]
    if threshold >= 1.0 or order.size < 2:
        return scores
    n = X.shape[0]
    cols = linalg.as_dense(linalg.take_columns(X, order)) if sp.issparse(X) else X[:, order]
    mean = cols.mean(axis=0)
    sd = cols.std(axis=0)
    centered = cols - mean
    kept: list[int] = []
    for pos, j in enumerate(order):
        if kept and sd[pos] > 0:
            k = np.array(kept)
            cov = centered[:, k].T @ centered[:, pos] / n
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(sd[k] > 0, cov / (sd[k] * sd[pos]), 0.0)
            if np.any(np.abs(r) > threshold):
                scores[j] = 0.0
                continue
        kept.append(pos)
    return scores


def shrunken_centroid_rank(data: LabeledDataset, delta: float = 0.0,
                           corr_threshold: float = 0.8) -> FeatureRanking:
    """Shrunken-centroid statistic followed by a greedy correlation filter.

    ``corr_threshold = 1`` disables the filter; ``delta = 0`` disables shrinkage.
    """
    if not 0 < corr_threshold <= 1:
        raise ValueError("corr_threshold must lie in (0, 1]")
    raw = shrunken_statistics(data, delta)
    return FeatureRanking(_decorrelate(data.X, raw, corr_threshold))
