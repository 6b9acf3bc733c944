"""Shallow subword linear classifier over hashed bag-of-n-gram features.

Averaged n-gram embeddings feed a flat softmax output layer trained with
plain SGD. The n-gram vocabulary is hashed into a fixed bucket space so
memory stays bounded on large corpora; n-grams never seen in training are
ignored at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..corpus import Instance, LabeledInstance, extract_ngrams
from ..errors import TrainingDataError
from ..labels import LEVEL_CLASSES, check_level
from .base import DISCRETE, ModelPrediction

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = (1 << 64) - 1


def fnv1a(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 bytes; stable across runs."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _FNV_MASK
    return h


def _default_order(level: str) -> int:
    return 3 if level == "C" else 2


def _default_lr(level: str) -> float:
    return 0.09 if level == "C" else 0.01


@dataclass(frozen=True)
class LinearConfig:
    ngram_order: int
    learning_rate: float
    epochs: int = 5
    dim: int = 50
    buckets: int = 1 << 21
    seed: int = 13241

    @classmethod
    def for_level(cls, level: str, **overrides) -> "LinearConfig":
        base = dict(ngram_order=_default_order(level), learning_rate=_default_lr(level))
        base.update(overrides)
        return cls(**base)


@dataclass
class LinearSubwordModel:
    level: str
    config: LinearConfig
    vocab: dict[str, int]          # training n-gram -> hash bucket
    row_index: dict[int, int]      # hash bucket -> dense embedding row
    embeddings: np.ndarray         # (rows, dim)
    weights: np.ndarray            # (classes, dim)
    biases: np.ndarray             # (classes,)
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def classes(self) -> tuple[str, ...]:
        return LEVEL_CLASSES[self.level]

    def predict(self, instance: Instance) -> ModelPrediction:
        return linear_predict(self, instance)


def _doc_rows(vocab, row_index, tokens, max_order) -> np.ndarray:
    """Dense embedding-row ids (with multiplicity) for one token list."""
    rows: list[int] = []
    for ngram, n in extract_ngrams(tokens, range(1, max_order + 1)).items():
        bucket = vocab.get(ngram)
        if bucket is not None:
            rows.extend([row_index[bucket]] * n)
    return np.asarray(rows, dtype=np.int64)


def _class_indices(data, level) -> list[int]:
    classes = LEVEL_CLASSES[level]
    out = []
    for item in data:
        cls = item.label.at_level(level)
        if cls is None:
            raise TrainingDataError(
                f"instance {item.instance.id!r} has no level-{level} label"
            )
        out.append(classes.index(cls))
    return out


def _weight_vector(level, class_weights) -> np.ndarray:
    classes = LEVEL_CLASSES[level]
    cw = np.ones(len(classes))
    if class_weights:
        for name, value in class_weights.items():
            cw[classes.index(name)] = value
    return cw


def _sgd_epochs(model, docs, y, epochs, rng, cw) -> None:
    """Run SGD in place; appends one mean loss per epoch to the model."""
    dim = model.config.dim
    lr0 = model.config.learning_rate
    total_steps = max(1, epochs * len(docs))
    step = 0
    for _ in range(epochs):
        order = rng.permutation(len(docs))
        loss_sum = 0.0
        for i in order:
            lr = lr0 * (1.0 - step / total_steps)
            step += 1
            rows = docs[i]
            h = model.embeddings[rows].mean(axis=0) if rows.size else np.zeros(dim)
            logits = model.weights @ h + model.biases
            logits -= logits.max()
            exps = np.exp(logits)
            probs = exps / exps.sum()
            w = cw[y[i]]
            loss_sum += -w * float(np.log(max(probs[y[i]], 1e-300)))
            grad = probs
            grad[y[i]] -= 1.0
            grad *= w
            grad_h = model.weights.T @ grad
            model.weights -= lr * np.outer(grad, h)
            model.biases -= lr * grad
            if rows.size:
                np.add.at(model.embeddings, rows, -lr * grad_h / rows.size)
        model.epoch_losses.append(loss_sum / len(docs))


def _init_model(data, level, config) -> LinearSubwordModel:
    orders = range(1, config.ngram_order + 1)
    vocab: dict[str, int] = {}
    row_index: dict[int, int] = {}
    for item in data:
        for ngram in extract_ngrams(item.instance.tokens, orders):
            if ngram not in vocab:
                bucket = fnv1a(ngram) % config.buckets
                vocab[ngram] = bucket
                if bucket not in row_index:
                    row_index[bucket] = len(row_index)
    rng = np.random.default_rng(config.seed)
    emb = rng.uniform(-1.0 / config.dim, 1.0 / config.dim, size=(len(row_index), config.dim))
    classes = LEVEL_CLASSES[level]
    return LinearSubwordModel(
        level=level,
        config=config,
        vocab=vocab,
        row_index=row_index,
        embeddings=emb,
        weights=np.zeros((len(classes), config.dim)),
        biases=np.zeros(len(classes)),
    )


def linear_train(
    data: Iterable[LabeledInstance],
    level: str,
    config: LinearConfig | None = None,
    *,
    class_weights: Mapping[str, float] | None = None,
) -> LinearSubwordModel:
    """Train by SGD over seeded-shuffled epochs; deterministic given the seed.

    The learning rate decays linearly to zero over the scheduled updates,
    and per-class loss weights scale both the loss and its gradient.
    """
    check_level(level)
    config = config or LinearConfig.for_level(level)
    data = list(data)
    if not data:
        raise TrainingDataError("empty training set")
    y = np.asarray(_class_indices(data, level))
    if len(set(y.tolist())) < 2:
        raise TrainingDataError("training data must cover at least 2 classes")
    model = _init_model(data, level, config)
    docs = [_doc_rows(model.vocab, model.row_index, it.instance.tokens, config.ngram_order)
            for it in data]
    rng = np.random.default_rng(config.seed + 1)
    _sgd_epochs(model, docs, y, config.epochs, rng, _weight_vector(level, class_weights))
    return model


def linear_train_curriculum(
    datasets: Mapping[str, Sequence[LabeledInstance]],
    level: str,
    schedule,
    config: LinearConfig | None = None,
    *,
    class_weights: Mapping[str, float] | None = None,
) -> LinearSubwordModel:
    """Train across ordered curriculum phases, e.g. distant data then gold.

    Each phase names a dataset tag and an epoch count. The vocabulary is
    built over the union of all datasets so every phase shares features.
    """
    check_level(level)
    config = config or LinearConfig.for_level(level)
    for phase in schedule.phases:
        if phase.dataset not in datasets:
            raise TrainingDataError(f"curriculum phase needs dataset {phase.dataset!r}")
    merged: list[LabeledInstance] = []
    for items in datasets.values():
        merged.extend(items)
    if not merged:
        raise TrainingDataError("empty training set")
    _class_indices(merged, level)  # validate labels up front
    model = _init_model(merged, level, config)
    classes = LEVEL_CLASSES[level]
    cw = _weight_vector(level, class_weights)
    rng = np.random.default_rng(config.seed + 1)
    for phase in schedule.phases:
        items = list(datasets[phase.dataset])
        docs = [_doc_rows(model.vocab, model.row_index, it.instance.tokens, config.ngram_order)
                for it in items]
        y = np.asarray([classes.index(it.label.at_level(level)) for it in items])
        _sgd_epochs(model, docs, y, phase.epochs, rng, cw)
    return model


def linear_predict(model: LinearSubwordModel, instance: Instance) -> ModelPrediction:
    """Probability distribution over the level's classes.

    Inputs with no training-time n-gram reduce to the zero feature vector,
    i.e. the softmax of the output biases.
    """
    rows = _doc_rows(model.vocab, model.row_index, instance.tokens, model.config.ngram_order)
    h = model.embeddings[rows].mean(axis=0) if rows.size else np.zeros(model.config.dim)
    logits = model.weights @ h + model.biases
    logits -= logits.max()
    exps = np.exp(logits)
    probs = exps / exps.sum()
    classes = model.classes
    conf = {c: float(p) for c, p in zip(classes, probs)}
    best = max(conf[c] for c in classes)
    hard = next(c for c in classes if conf[c] == best)
    return ModelPrediction(
        model_name="linear", kind=DISCRETE, level=model.level,
        confidences=conf, hard_label=hard,
    )
