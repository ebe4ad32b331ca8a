"""Embedded feature selectors. Each ``*_rank(data, cfg)`` returns a :class:`FeatureRanking`."""

from .enet import elastic_net_fit, elastic_net_lambda_max, elastic_net_objective, elastic_net_rank
from .l1svm import l1_svm_fit, l1_svm_lambda_max, l1_svm_objective, l1_svm_rank
from .l21 import l21_fit, l21_objective, l21_rank, one_hot
from .local_learning import expected_margins, ll_fit, ll_margin_vector, ll_rank
from .ranking import (EMBEDDED_METHODS, FILTER_METHODS, METHODS, FeatureRanking, SelectorConfig,
                      canonical_method, read_ranking_csv)
from .rfe import rfe_rank, rfe_trace

__all__ = [
    "EMBEDDED_METHODS", "FILTER_METHODS", "METHODS", "FeatureRanking", "SelectorConfig",
    "canonical_method", "read_ranking_csv",
    "elastic_net_fit", "elastic_net_lambda_max", "elastic_net_objective", "elastic_net_rank",
    "l1_svm_fit", "l1_svm_lambda_max", "l1_svm_objective", "l1_svm_rank",
    "l21_fit", "l21_objective", "l21_rank", "one_hot",
    "expected_margins", "ll_fit", "ll_margin_vector", "ll_rank",
    "rfe_rank", "rfe_trace",
]
