"""Shared prediction type and numeric helpers for the model suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from ..labels import LEVEL_CLASSES, check_level

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class ModelPrediction:
    """One model's per-class confidences for one instance at one level.

    `kind` decides how cascade gates treat the model: continuous models are
    gated on their positive-class confidence, discrete ones on `hard_label`.
    """

    model_name: str
    kind: str
    level: str
    confidences: Mapping[str, float]
    hard_label: str

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise ValueError(f"unknown prediction kind {self.kind!r}")
        check_level(self.level)
        classes = LEVEL_CLASSES[self.level]
        if set(self.confidences) != set(classes):
            raise ValueError(
                f"confidences must cover exactly the level-{self.level} classes"
            )
        for name, value in self.confidences.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"confidence for {name} out of [0, 1]: {value}")
        if self.hard_label not in classes:
            raise ValueError(f"hard label {self.hard_label!r} invalid for level {self.level}")


def softmax(scores, temperature: float = 1.0) -> list[float]:
    """Temperature-scaled softmax, tolerant of +/-inf scores.

    Any +inf score absorbs all mass (split uniformly among +inf entries);
    -inf scores get zero mass; an all--inf input falls back to uniform.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    scaled = [s / temperature for s in scores]
    pos_inf = [s == math.inf for s in scaled]
    if any(pos_inf):
        share = 1.0 / sum(pos_inf)
        return [share if flag else 0.0 for flag in pos_inf]
    top = max(scaled)
    if top == -math.inf:
        return [1.0 / len(scaled)] * len(scaled)
    exps = [math.exp(s - top) for s in scaled]
    total = sum(exps)
    return [e / total for e in exps]
