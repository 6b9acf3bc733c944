"""Curation of distant scores into training material.

Covers confidence-threshold selection of trustworthy instances, the
easy/hard difficulty partition, class rebalancing by upsampling, per-class
loss weights, and gold/distant curriculum schedules.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import LabeledInstance
from .cotrain import DistantRecord
from .errors import InputError
from .labels import LEVEL_CLASSES, check_level
from .models.base import CONTINUOUS, DISCRETE, ModelPrediction


@dataclass(frozen=True)
class HalfLine:
    """One accept condition: a class average strictly beyond a threshold."""

    class_name: str
    direction: str  # "below" | "above"
    threshold: float

    def __post_init__(self):
        if self.direction not in ("below", "above"):
            raise ValueError(f"bad direction {self.direction!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold outside [0, 1]: {self.threshold}")

    def holds(self, average: float) -> bool:
        if self.direction == "below":
            return average < self.threshold
        return average > self.threshold


@dataclass(frozen=True)
class SelectionPolicy:
    """Accept a record when any of the half-line conditions holds."""

    level: str
    conditions: tuple[HalfLine, ...]

    def __post_init__(self):
        check_level(self.level)
        for cond in self.conditions:
            if cond.class_name not in LEVEL_CLASSES[self.level]:
                raise ValueError(
                    f"{cond.class_name!r} is not a level-{self.level} class"
                )


def default_policy(level: str) -> SelectionPolicy:
    """The stock confidence bands: keep only clear-cut instances."""
    check_level(level)
    if level == "A":
        conds = (HalfLine("OFF", "below", 0.2), HalfLine("OFF", "above", 0.7))
    elif level == "B":
        conds = (HalfLine("UNT", "below", 0.3), HalfLine("UNT", "above", 0.7))
    else:
        conds = (
            HalfLine("IND", "above", 0.8),
            HalfLine("GRP", "above", 0.7),
            HalfLine("OTH", "above", 0.65),
        )
    return SelectionPolicy(level, conds)


def _level_averages(record: DistantRecord, level: str) -> dict[str, float]:
    if level == "A":
        avg = record.level_a.average
        return {"OFF": avg, "NOT": 1.0 - avg}
    if level == "B":
        if record.level_b is None:
            raise InputError(f"record {record.instance_id!r} has no level-B scores")
        avg = record.level_b.average
        return {"UNT": avg, "TIN": 1.0 - avg}
    if record.level_c is None:
        raise InputError(f"record {record.instance_id!r} has no level-C scores")
    return {cls: agg.average for cls, agg in record.level_c.items()}


def policy_matches(policy: SelectionPolicy, record: DistantRecord) -> bool:
    averages = _level_averages(record, policy.level)
    return any(cond.holds(averages[cond.class_name]) for cond in policy.conditions)


def select_training(
    records: Iterable[DistantRecord], level: str, policy: SelectionPolicy | None = None
) -> set[str]:
    """Ids of records accepted by the level's selection policy."""
    policy = policy or default_policy(level)
    if policy.level != level:
        raise ValueError("policy level does not match requested level")
    return {r.instance_id for r in records if policy_matches(policy, r)}


class Bucket(enum.Enum):
    """Difficulty/polarity portions of level-A-scored data."""

    EASY_OFF = ("Easy", "OFF")
    HARD_OFF = ("Hard", "OFF")
    HARD_NOT = ("Hard", "NOT")
    EASY_NOT = ("Easy", "NOT")

    @property
    def difficulty(self) -> str:
        return self.value[0]

    @property
    def polarity(self) -> str:
        return self.value[1]


@dataclass(frozen=True)
class PartitionThresholds:
    easy_off: float = 0.8
    hard_off: float = 0.5
    hard_not: float = 0.5
    easy_not_first: float = 0.2
    easy_not_rest: float = 0.8


def partition_easy_hard(
    preds: Sequence[ModelPrediction],
    thresholds: PartitionThresholds = PartitionThresholds(),
) -> Bucket | None:
    """Assign one difficulty bucket from per-model level-A predictions.

    The four rules are checked in a fixed priority order and the first
    match wins; tuples matching no rule stay unbucketed (None). Continuous
    models are judged on their OFF confidence (the "first" continuous model
    is the first registered one), discrete models on their hard label.
    """
    if not preds:
        raise ValueError("missing model predictions")
    for p in preds:
        if p.level != "A":
            raise ValueError("partition expects level-A predictions")
    cont = [p.confidences["OFF"] for p in preds if p.kind == CONTINUOUS]
    disc = [p.hard_label for p in preds if p.kind == DISCRETE]
    if all(c >= thresholds.easy_off for c in cont) and all(d == "OFF" for d in disc):
        return Bucket.EASY_OFF
    if all(c >= thresholds.hard_off for c in cont) and all(d == "OFF" for d in disc):
        return Bucket.HARD_OFF
    if all(c < thresholds.hard_not for c in cont) and all(d == "NOT" for d in disc):
        return Bucket.HARD_NOT
    if (
        all(d == "NOT" for d in disc)
        and (not cont or cont[0] <= thresholds.easy_not_first)
        and all(c <= thresholds.easy_not_rest for c in cont[1:])
    ):
        return Bucket.EASY_NOT
    return None


def upsample_balance(
    data: Sequence[LabeledInstance], level: str, seed: int
) -> list[LabeledInstance]:
    """Equalize class counts at `level` by resampling minority classes.

    Originals are kept; minority classes gain instances drawn with
    replacement (seeded) until every class matches the majority count.
    """
    check_level(level)
    groups: dict[str, list[LabeledInstance]] = {c: [] for c in LEVEL_CLASSES[level]}
    for item in data:
        cls = item.label.at_level(level)
        if cls is None:
            raise InputError(
                f"instance {item.instance.id!r} has no level-{level} label"
            )
        groups[cls].append(item)
    for cls, items in groups.items():
        if not items:
            raise InputError(f"class {cls} has zero instances at level {level}")
    target = max(len(items) for items in groups.values())
    rng = random.Random(seed)
    out = list(data)
    for cls in LEVEL_CLASSES[level]:
        items = groups[cls]
        deficit = target - len(items)
        if deficit > 0:
            out.extend(rng.choices(items, k=deficit))
    return out


def class_weights(level: str) -> dict[str, float]:
    """Per-class loss weights; only level C is reweighted."""
    check_level(level)
    if level == "C":
        return {"IND": 1.0, "GRP": 2.0, "OTH": 10.0}
    return {c: 1.0 for c in LEVEL_CLASSES[level]}


GOLD = "gold"
DISTANT = "distant"


@dataclass(frozen=True)
class Phase:
    dataset: str
    epochs: int

    def __post_init__(self):
        if self.dataset not in (GOLD, DISTANT):
            raise ValueError(f"unknown dataset tag {self.dataset!r}")
        if self.epochs < 1:
            raise ValueError("phase epoch count must be >= 1")


@dataclass(frozen=True)
class CurriculumSchedule:
    phases: tuple[Phase, ...]

    def __post_init__(self):
        if not self.phases:
            raise ValueError("curriculum needs at least one phase")


def build_curriculum(level: str, override: Sequence[tuple[str, int]] | None = None) -> CurriculumSchedule:
    """Default gold/distant epoch ordering for a level, or an override.

    Level A warms up on distant data before the gold epochs; the sparser
    levels B and C do the opposite.
    """
    if override is not None:
        return CurriculumSchedule(tuple(Phase(d, e) for d, e in override))
    check_level(level)
    if level == "A":
        return CurriculumSchedule((Phase(DISTANT, 1), Phase(GOLD, 2)))
    return CurriculumSchedule((Phase(GOLD, 2), Phase(DISTANT, 1)))


def write_buckets_csv(assignments: Mapping[str, Bucket]) -> str:
    """Serialize bucket assignments as `id,difficulty,polarity` rows."""
    lines = ["id,difficulty,polarity"]
    for id_ in sorted(assignments):
        bucket = assignments[id_]
        lines.append(f"{id_},{bucket.difficulty},{bucket.polarity}")
    return "\n".join(lines) + "\n"


def read_buckets_csv(text: str) -> dict[str, Bucket]:
    lines = text.splitlines()
    if not lines or lines[0] != "id,difficulty,polarity":
        raise InputError("bad bucket CSV header")
    out: dict[str, Bucket] = {}
    for line in lines[1:]:
        if not line:
            continue
        id_, difficulty, polarity = line.split(",")
        out[id_] = Bucket((difficulty, polarity))
    return out
