"""Shared builders: labeled instances, toy corpora, synthetic planted corpus."""

from __future__ import annotations

import random

import pytest

from democo.corpus import Instance, LabeledInstance, make_instance
from democo.labels import HierLabel


def li(id_, text, a, b=None, c=None) -> LabeledInstance:
    return LabeledInstance(make_instance(str(id_), text), HierLabel(a, b, c))


def inst(id_, text) -> Instance:
    return make_instance(str(id_), text)


@pytest.fixture
def toy_binary_corpus():
    """Two clearly separated classes for level-A sanity checks."""
    return [
        li(1, "fuck you", "OFF"),
        li(2, "fuck off", "OFF"),
        li(3, "hello there", "NOT"),
        li(4, "good day", "NOT"),
    ]


NEUTRAL_WORDS = [
    "coffee", "window", "garden", "season", "yellow", "camera", "bridge",
    "subtle", "frozen", "rocket", "silver", "branch", "cotton", "valley",
    "sunset", "timber", "puzzle", "hollow", "ribbon", "canvas",
]

CURSE_WORDS = ["fuck", "shit", "damn", "idiot", "stupid", "bitch"]

TARGET_IND = ["you", "he", "she"]
TARGET_GRP = ["they", "them", "people"]
TARGET_OTH = ["league", "show", "event"]


def synthetic_corpus(n: int, seed: int = 7):
    """Planted-signal corpus: curse words mark OFF, pronouns mark targets.

    Returns (labeled, unlabeled) lists; labels follow the generating rules
    exactly, so a lexicon model is a perfect level-A classifier on it.
    """
    rng = random.Random(seed)
    labeled = []
    unlabeled = []
    for i in range(n):
        words = rng.sample(NEUTRAL_WORDS, k=rng.randint(3, 6))
        a, b, c = "NOT", None, None
        roll = rng.random()
        if roll < 0.45:
            a = "OFF"
            words.insert(rng.randrange(len(words)), rng.choice(CURSE_WORDS))
            if rng.random() < 0.7:
                b = "TIN"
                kind = rng.random()
                if kind < 0.5:
                    c, marker = "IND", rng.choice(TARGET_IND)
                elif kind < 0.8:
                    c, marker = "GRP", rng.choice(TARGET_GRP)
                else:
                    c, marker = "OTH", rng.choice(TARGET_OTH)
                words.insert(rng.randrange(len(words)), marker)
                words.insert(rng.randrange(len(words)), marker)
            else:
                b = "UNT"
        text = " ".join(words)
        id_ = f"s{i:05d}"
        labeled.append(li(id_, text, a, b, c))
        unlabeled.append(inst(id_, text))
    return labeled, unlabeled
