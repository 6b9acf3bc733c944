"""Classifier suite: PMI n-gram model, subword linear model, curse lexicon,
and a client for external scorers speaking the line-JSON wire protocol."""

from .base import ModelPrediction, softmax
from .lexicon import default_lexicon, lexicon_predict, LexiconModel
from .linear import LinearConfig, LinearSubwordModel, linear_train
from .pmi import CountsTable, PmiModel, pmi_predict, pmi_score, pmi_so_score, pmi_train

__all__ = [
    "ModelPrediction",
    "softmax",
    "default_lexicon",
    "lexicon_predict",
    "LexiconModel",
    "LinearConfig",
    "LinearSubwordModel",
    "linear_train",
    "CountsTable",
    "PmiModel",
    "pmi_predict",
    "pmi_score",
    "pmi_so_score",
    "pmi_train",
]
