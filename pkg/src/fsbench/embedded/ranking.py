"""Feature rankings and selector configuration shared by every selector."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from ..dataset import format_number

EMBEDDED_METHODS = ("l1svm", "rfe", "en", "l21", "ll")
FILTER_METHODS = ("golub", "sc")
METHODS = EMBEDDED_METHODS + FILTER_METHODS

ALIASES = {"l1": "l1svm", "elasticnet": "en", "elastic_net": "en", "usc": "sc"}


def canonical_method(name: str) -> str:
    key = name.strip().lower()
    key = ALIASES.get(key, key)
    if key not in METHODS:
        raise ValueError("unknown method %r (choose from %s)" % (name, ", ".join(METHODS)))
    return key


@dataclass(frozen=True, eq=False)
class FeatureRanking:
    """Per-feature scores (higher is more relevant) and the induced order.

    ``order`` sorts by descending score; equal scores keep ascending feature index.
    """

    scores: np.ndarray
    order: np.ndarray = field(init=False)

    def __post_init__(self):
        s = np.array(self.scores, dtype=np.float64).ravel()
        if np.any(np.isnan(s)):
            raise ValueError("scores must not be NaN")
        s += 0.0  # fold -0.0 into 0.0 so it cannot split a tie
        order = np.lexsort((np.arange(s.size), -s))
        s.setflags(write=False)
        order.setflags(write=False)
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "order", order)

    def __len__(self):
        return self.scores.size

    def top(self, k: int) -> np.ndarray:
        if k < 0:
            raise ValueError("k must be non-negative")
        return self.order[:k]

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        buf.write(header)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "feature_index", "score"])
        for r, j in enumerate(self.order, 1):
            writer.writerow([r, int(j), format_number(self.scores[j])])
        return buf.getvalue()


def read_ranking_csv(path) -> FeatureRanking:
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    entries = [(int(r["feature_index"]), float(r["score"])) for r in reader]
    scores = np.zeros(len(entries))
    for j, s in entries:
        scores[j] = s
    return FeatureRanking(scores)


@dataclass(frozen=True)
class SelectorConfig:
    """Parameters for every selector; each method reads only the fields it needs.

    ``lam`` is the main penalty (L1-SVM, L2,1, local learning) and the l1 weight
    of the elastic net; ``lambda2`` is the elastic net's l2 weight. ``delta`` and
    ``corr_threshold`` drive the shrunken-centroid filter.
    """

    method: str = "en"
    lam: float = 1.0
    lambda2: float = 1.0
    C: float = 1.0
    rfe_drop_fraction: float = 0.1
    ll_kernel_width: float = 5.0
    ll_em_iter: int = 25
    l21_eps: float = 1e-8
    delta: float = 0.0
    corr_threshold: float = 0.8
    tol: float = 1e-4
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", canonical_method(self.method))
        if self.lam < 0 or self.lambda2 < 0 or self.delta < 0:
            raise ValueError("penalties must be non-negative")
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not 0 < self.rfe_drop_fraction < 1:
            raise ValueError("rfe_drop_fraction must lie in (0, 1)")
        if not self.ll_kernel_width > 0:
            raise ValueError("ll_kernel_width must be > 0")
        if not 0 < self.corr_threshold <= 1:
            raise ValueError("corr_threshold must lie in (0, 1]")
        if not self.tol > 0 or self.max_iter < 1 or self.ll_em_iter < 1:
            raise ValueError("tol and iteration caps must be positive")
        if not self.l21_eps > 0:
            raise ValueError("l21_eps must be > 0")

    def with_(self, **kw) -> "SelectorConfig":
        return replace(self, **kw)

    def describe(self) -> str:
        """Short key=value string of the fields the method uses."""
        used = {
            "l1svm": ("C", "lam"),
            "rfe": ("C", "rfe_drop_fraction"),
            "en": ("lam", "lambda2"),
            "l21": ("lam",),
            "ll": ("lam", "ll_kernel_width"),
            "golub": (),
            "sc": ("delta", "corr_threshold"),
        }[self.method]
        return " ".join("%s=%s" % (k, format_number(getattr(self, k))) for k in used)

    def regularization_strength(self) -> tuple:
        """Sort key: larger means more strongly regularized (used to break tuning ties)."""
        return {
            "l1svm": (self.lam, -self.C),
            "rfe": (-self.C,),
            "en": (self.lam, self.lambda2),
            "l21": (self.lam,),
            "ll": (self.lam,),
            "golub": (),
            "sc": (self.delta,),
        }[self.method]
