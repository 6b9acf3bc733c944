"""Curse-word lexicon baseline: a discrete level-A classifier.

Predicts OFF exactly when any token matches the lexicon. The bundled
default list contains 22 common offensive terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from ..corpus import Instance
from .base import DISCRETE, ModelPrediction

_DEFAULT: frozenset[str] | None = None


def default_lexicon() -> frozenset[str]:
    """The bundled 22-term curse lexicon, lowercased."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("democo.data").joinpath("curse_words.txt").read_text("utf-8")
        _DEFAULT = frozenset(w.strip().lower() for w in text.splitlines() if w.strip())
    return _DEFAULT


def lexicon_predict(instance: Instance, lexicon=None) -> ModelPrediction:
    """OFF iff any token is in the lexicon (exact, case-insensitive match)."""
    words = frozenset(w.lower() for w in lexicon) if lexicon is not None else default_lexicon()
    hit = any(tok.lower() in words for tok in instance.tokens)
    conf = {"OFF": 1.0, "NOT": 0.0} if hit else {"OFF": 0.0, "NOT": 1.0}
    return ModelPrediction(
        model_name="lexicon", kind=DISCRETE, level="A",
        confidences=conf, hard_label="OFF" if hit else "NOT",
    )


@dataclass
class LexiconModel:
    """Persistable wrapper so the lexicon can join a stored ensemble."""

    level: str = "A"
    words: frozenset[str] = field(default_factory=default_lexicon)

    def __post_init__(self):
        if self.level != "A":
            raise ValueError("the lexicon baseline only scores level A")
        self.words = frozenset(w.lower() for w in self.words)

    def predict(self, instance: Instance) -> ModelPrediction:
        return lexicon_predict(instance, self.words)
