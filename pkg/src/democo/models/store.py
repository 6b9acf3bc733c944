"""Versioned single-file model persistence.

Every model file is one JSON object with a magic marker, a format version,
the taxonomy level, a config block, and the model tables. Loading checks
magic and version before touching anything else.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .lexicon import LexiconModel
from .linear import LinearConfig, LinearSubwordModel
from .pmi import CountsTable, PmiModel

MAGIC = "democo-model"
FORMAT_VERSION = 1


def _dump_pmi(model: PmiModel) -> dict:
    counts = model.counts
    return {
        "config": {
            "min_count": counts.min_count,
            "smoothing": counts.smoothing,
            "orders": list(model.orders),
            "temperature": model.temperature,
        },
        "tables": {
            "scores": {
                ngram: {cls: list(pair) for cls, pair in per_class.items()}
                for ngram, per_class in model.scores.items()
            },
            "ngram_class_counts": [
                [ngram, cls, n] for (ngram, cls), n in counts.ngram_class_counts.items()
            ],
            "class_token_totals": counts.class_token_totals,
            "fallback_class": model.fallback_class,
        },
    }


def _load_pmi(level: str, payload: dict) -> PmiModel:
    cfg = payload["config"]
    tables = payload["tables"]
    counts = CountsTable(min_count=cfg["min_count"], smoothing=cfg["smoothing"])
    for ngram, cls, n in tables["ngram_class_counts"]:
        counts.add(ngram, cls, n)
    scores = {
        ngram: {cls: (pair[0], pair[1]) for cls, pair in per_class.items()}
        for ngram, per_class in tables["scores"].items()
    }
    return PmiModel(
        level=level,
        counts=counts,
        scores=scores,
        fallback_class=tables["fallback_class"],
        orders=tuple(cfg["orders"]),
        temperature=cfg["temperature"],
    )


def _dump_linear(model: LinearSubwordModel) -> dict:
    c = model.config
    return {
        "config": {
            "ngram_order": c.ngram_order,
            "learning_rate": c.learning_rate,
            "epochs": c.epochs,
            "dim": c.dim,
            "buckets": c.buckets,
            "seed": c.seed,
        },
        "tables": {
            "vocab": model.vocab,
            "row_index": {str(b): r for b, r in model.row_index.items()},
            "embeddings": model.embeddings.tolist(),
            "weights": model.weights.tolist(),
            "biases": model.biases.tolist(),
            "epoch_losses": model.epoch_losses,
        },
    }


def _load_linear(level: str, payload: dict) -> LinearSubwordModel:
    cfg = payload["config"]
    tables = payload["tables"]
    return LinearSubwordModel(
        level=level,
        config=LinearConfig(**cfg),
        vocab=dict(tables["vocab"]),
        row_index={int(b): r for b, r in tables["row_index"].items()},
        embeddings=np.asarray(tables["embeddings"], dtype=float).reshape(
            len(tables["row_index"]), cfg["dim"]
        ),
        weights=np.asarray(tables["weights"], dtype=float),
        biases=np.asarray(tables["biases"], dtype=float),
        epoch_losses=list(tables["epoch_losses"]),
    )


def _dump_lexicon(model: LexiconModel) -> dict:
    return {"config": {}, "tables": {"words": sorted(model.words)}}


def _load_lexicon(level: str, payload: dict) -> LexiconModel:
    return LexiconModel(level=level, words=frozenset(payload["tables"]["words"]))


_DUMPERS = {
    PmiModel: ("pmi", _dump_pmi),
    LinearSubwordModel: ("linear", _dump_linear),
    LexiconModel: ("lexicon", _dump_lexicon),
}

_LOADERS = {"pmi": _load_pmi, "linear": _load_linear, "lexicon": _load_lexicon}


def save_model(path, model) -> None:
    """Write the model as deterministic JSON (stable key order)."""
    try:
        kind, dump = _DUMPERS[type(model)]
    except KeyError:
        raise ModelFormatError(f"cannot persist {type(model).__name__}") from None
    payload = dump(model)
    doc = {
        "magic": MAGIC,
        "version": FORMAT_VERSION,
        "kind": kind,
        "level": model.level,
        "config": payload["config"],
        "tables": payload["tables"],
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_model(path):
    """Load any persisted model; raises ModelFormatError on mismatch."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise ModelFormatError(f"{path} is not a model file (bad magic)")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path} has format version {doc.get('version')!r}; expected {FORMAT_VERSION}"
        )
    kind = doc.get("kind")
    if kind not in _LOADERS:
        raise ModelFormatError(f"{path} has unknown model kind {kind!r}")
    payload = {"config": doc.get("config", {}), "tables": doc.get("tables", {})}
    try:
        return _LOADERS[kind](doc["level"], payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path} is structurally invalid: {exc}") from exc
