"""Pointwise-mutual-information n-gram classifier.

For every n-gram seen often enough in training, two association scores are
precomputed per class: plain PMI against the class and a semantically
oriented variant that contrasts the class with all remaining classes.
Prediction sums both scores over the instance's n-grams and takes the
highest-scoring class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..corpus import Instance, LabeledInstance, extract_ngrams
from ..errors import TrainingDataError
from ..labels import FALLBACK_CLASS, LEVEL_CLASSES, check_level
from .base import DISCRETE, ModelPrediction, softmax

DEFAULT_MIN_COUNT = 5
DEFAULT_SMOOTHING = 0.01
DEFAULT_ORDERS = (1, 2)
# Summed scores are in bits; this temperature keeps softmax confidences soft.
DEFAULT_TEMPERATURE = 10.0


@dataclass
class CountsTable:
    """Raw n-gram/class co-occurrence counts for one taxonomy level.

    `grand_total` counts every extracted n-gram token; `class_token_totals`
    partitions it by class.
    """

    ngram_class_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    ngram_totals: dict[str, int] = field(default_factory=dict)
    class_token_totals: dict[str, int] = field(default_factory=dict)
    grand_total: int = 0
    min_count: int = DEFAULT_MIN_COUNT
    smoothing: float = DEFAULT_SMOOTHING

    def add(self, ngram: str, cls: str, count: int = 1) -> None:
        key = (ngram, cls)
        self.ngram_class_counts[key] = self.ngram_class_counts.get(key, 0) + count
        self.ngram_totals[ngram] = self.ngram_totals.get(ngram, 0) + count
        self.class_token_totals[cls] = self.class_token_totals.get(cls, 0) + count
        self.grand_total += count


def _log2_ratio(num: float, den: float) -> float:
    if num == 0.0:
        return -math.inf
    if den == 0.0:
        return math.inf
    return math.log2(num / den)


def _pmi_from_counts(nwc, nw, tc, total, s) -> float:
    return _log2_ratio((nwc + s) * (total + s), (nw + s) * (tc + s))


def _pmi_so_from_counts(nwc, nw, tc, total, s) -> float:
    return _log2_ratio((nwc + s) * (total - tc + s), (nw - nwc + s) * (tc + s))


@dataclass
class PmiModel:
    """Per-level PMI score tables plus the fallback class for blind inputs."""

    level: str
    counts: CountsTable
    scores: dict[str, dict[str, tuple[float, float]]]  # ngram -> class -> (pmi, pmi_so)
    fallback_class: str
    orders: tuple[int, ...] = DEFAULT_ORDERS
    temperature: float = DEFAULT_TEMPERATURE

    @property
    def classes(self) -> tuple[str, ...]:
        return LEVEL_CLASSES[self.level]

    def predict(self, instance: Instance) -> ModelPrediction:
        return pmi_predict(self, instance)


def pmi_train(
    data: Iterable[LabeledInstance],
    level: str,
    *,
    min_count: int = DEFAULT_MIN_COUNT,
    smoothing: float = DEFAULT_SMOOTHING,
    orders: Iterable[int] = DEFAULT_ORDERS,
    temperature: float = DEFAULT_TEMPERATURE,
) -> PmiModel:
    """Count n-grams per class and precompute both PMI score tables.

    N-grams whose total raw count is below `min_count` are excluded from the
    score tables; the smoothing constant is added to every raw count when
    scores are computed.
    """
    check_level(level)
    orders = tuple(sorted(set(orders)))
    data = list(data)
    if not data:
        raise TrainingDataError("empty training set")
    counts = CountsTable(min_count=min_count, smoothing=smoothing)
    for item in data:
        cls = item.label.at_level(level)
        if cls is None:
            raise TrainingDataError(
                f"instance {item.instance.id!r} has no level-{level} label"
            )
        for ngram, n in extract_ngrams(item.instance.tokens, orders).items():
            counts.add(ngram, cls, n)
    present = [c for c in LEVEL_CLASSES[level] if counts.class_token_totals.get(c)]
    if len(present) < 2:
        raise TrainingDataError(
            f"level-{level} training data covers {len(present)} class(es); need >= 2"
        )
    scores: dict[str, dict[str, tuple[float, float]]] = {}
    total = counts.grand_total
    for ngram, nw in counts.ngram_totals.items():
        if nw < min_count:
            continue
        per_class = {}
        for cls in LEVEL_CLASSES[level]:
            nwc = counts.ngram_class_counts.get((ngram, cls), 0)
            tc = counts.class_token_totals.get(cls, 0)
            per_class[cls] = (
                _pmi_from_counts(nwc, nw, tc, total, smoothing),
                _pmi_so_from_counts(nwc, nw, tc, total, smoothing),
            )
        scores[ngram] = per_class
    return PmiModel(
        level=level,
        counts=counts,
        scores=scores,
        fallback_class=FALLBACK_CLASS[level],
        orders=orders,
        temperature=temperature,
    )


class UnknownNgramError(KeyError):
    """Raised when a score is requested for an n-gram not in the tables."""


def _lookup(model: PmiModel, ngram: str, cls: str) -> tuple[float, float]:
    try:
        per_class = model.scores[ngram]
    except KeyError:
        raise UnknownNgramError(ngram) from None
    return per_class[cls]


def pmi_score(model: PmiModel, ngram: str, cls: str) -> float:
    """PMI of the n-gram with the class, in bits, from smoothed counts."""
    return _lookup(model, ngram, cls)[0]


def pmi_so_score(model: PmiModel, ngram: str, cls: str) -> float:
    """Semantically oriented PMI: the class against all other classes."""
    return _lookup(model, ngram, cls)[1]


def pmi_predict(model: PmiModel, instance: Instance) -> ModelPrediction:
    """Sum PMI + PMI-SO over the instance's scored n-grams per class.

    When no scored n-gram occurs in the instance the fallback class is
    predicted with uniform confidences.
    """
    classes = model.classes
    sums: Mapping[str, float] = {c: 0.0 for c in classes}
    matched = False
    for ngram, n in extract_ngrams(instance.tokens, model.orders).items():
        per_class = model.scores.get(ngram)
        if per_class is None:
            continue
        matched = True
        for c in classes:
            pmi, pmi_so = per_class[c]
            sums[c] += n * (pmi + pmi_so)
    conf = dict(zip(classes, softmax([sums[c] for c in classes], model.temperature)))
    if matched:
        best = max(sums[c] for c in classes)
        hard = next(c for c in classes if sums[c] == best)
    else:
        hard = model.fallback_class
    return ModelPrediction(
        model_name="pmi", kind=DISCRETE, level=model.level, confidences=conf, hard_label=hard
    )
