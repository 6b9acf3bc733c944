"""Democratic co-training cascade over an ensemble of diverse models.

Every instance receives a level-A aggregate (mean and population standard
deviation of the ensemble's OFF confidences). Instances the whole ensemble
considers offensive are scored at level B; instances that lean targeted
with low ensemble disagreement are scored at level C. Deeper levels are
therefore always subsets of shallower ones.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Instance
from .errors import InputError
from .labels import LEVEL_CLASSES, LEVELS, HierLabel, check_level
from .models.base import CONTINUOUS, DISCRETE, ModelPrediction

GATE_B_THRESHOLD = 0.5
GATE_C_TIN_THRESHOLD = 0.5
GATE_C_STD_THRESHOLD = 0.25

DISTANT_FILES = {"A": "level_a.csv", "B": "level_b.csv", "C": "level_c.csv"}


@dataclass(frozen=True)
class AggregateScore:
    """Ensemble mean and population std of one positive-class confidence.

    `per_model` keeps the contributing (model name, confidence) pairs; it
    is None for scores reloaded from CSV, where the detail is not stored.
    """

    average: float
    std: float
    per_model: tuple[tuple[str, float], ...] | None = None


def aggregate(confidences: Sequence[tuple[str, float]]) -> AggregateScore:
    """Mean and population standard deviation of model confidences."""
    pairs = tuple((str(name), float(value)) for name, value in confidences)
    if len(pairs) < 2:
        raise ValueError("aggregation needs at least 2 model confidences")
    for name, value in pairs:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"confidence for {name!r} outside [0, 1]: {value}")
    values = [v for _, v in pairs]
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return AggregateScore(average=mean, std=math.sqrt(max(0.0, var)), per_model=pairs)


@dataclass(frozen=True)
class DistantRecord:
    """Cascade output for one instance: per-level aggregate scores.

    `level_b` is present only when the level-B gate held, `level_c` (one
    aggregate per target class) only when the level-C gate also held.
    """

    instance_id: str
    level_a: AggregateScore
    level_b: AggregateScore | None = None
    level_c: Mapping[str, AggregateScore] | None = None

    def __post_init__(self):
        if self.level_c is not None and self.level_b is None:
            raise ValueError("level C scores require level B scores")


def gate_level_b(
    preds: Mapping[str, ModelPrediction], threshold: float = GATE_B_THRESHOLD
) -> bool:
    """Whether an instance proceeds to level-B scoring.

    Continuous models must give OFF at least `threshold` confidence;
    discrete models must predict OFF outright.
    """
    if not preds:
        raise ValueError("missing model predictions")
    for pred in preds.values():
        if pred.level != "A":
            raise ValueError("level-B gate expects level-A predictions")
        if pred.kind == CONTINUOUS:
            if pred.confidences["OFF"] < threshold:
                return False
        else:
            if pred.hard_label != "OFF":
                return False
    return True


def gate_level_c(
    b_score: AggregateScore,
    tin_threshold: float = GATE_C_TIN_THRESHOLD,
    std_threshold: float = GATE_C_STD_THRESHOLD,
) -> bool:
    """Whether a level-B-scored instance proceeds to level-C scoring.

    Requires the instance to lean targeted (mean UNT confidence below the
    threshold) with ensemble disagreement under the std cap.
    """
    return b_score.average < tin_threshold and b_score.std < std_threshold


class EnsembleMember:
    """One named model in the ensemble, serving one or more levels."""

    def __init__(self, name: str, kind: str, models: Mapping[str, object]):
        if kind not in (CONTINUOUS, DISCRETE):
            raise ValueError(f"unknown member kind {kind!r}")
        for level in models:
            check_level(level)
        self.name = name
        self.kind = kind
        self._models = dict(models)

    @property
    def levels(self) -> frozenset[str]:
        return frozenset(self._models)

    def predict_batch(self, batch: Sequence[Instance], level: str) -> list[ModelPrediction]:
        model = self._models[level]
        return [
            replace(model.predict(inst), model_name=self.name, kind=self.kind)
            for inst in batch
        ]


class ExternalMember:
    """Ensemble member backed by a connected external scorer."""

    def __init__(self, scorer):
        self.name = scorer.info.name
        self.kind = scorer.info.kind
        self._scorer = scorer

    @property
    def levels(self) -> frozenset[str]:
        return frozenset(self._scorer.info.levels)

    def predict_batch(self, batch: Sequence[Instance], level: str) -> list[ModelPrediction]:
        return self._scorer.score(batch, level)

    def close(self):
        self._scorer.close()


class Ensemble:
    """Ordered collection of members; order fixes aggregation columns."""

    def __init__(self, members: Sequence):
        if len({m.name for m in members}) != len(members):
            raise InputError("duplicate ensemble member names")
        self.members = list(members)

    def members_for(self, level: str):
        return [m for m in self.members if level in m.levels]

    def require_cascade_ready(self):
        for level in LEVELS:
            n = len(self.members_for(level))
            if n < 2:
                raise InputError(
                    f"cascade needs >= 2 models at level {level}, found {n}"
                )


def _score_chunk(ensemble, chunk, gate_b_threshold, gate_c_tin, gate_c_std):
    a_members = ensemble.members_for("A")
    a_preds = {m.name: m.predict_batch(chunk, "A") for m in a_members}
    a_detail = {
        inst.id: [a_preds[m.name][i] for m in a_members] for i, inst in enumerate(chunk)
    }
    records = []
    b_idx = []
    for i, inst in enumerate(chunk):
        agg_a = aggregate(
            [(m.name, a_preds[m.name][i].confidences["OFF"]) for m in a_members]
        )
        records.append(DistantRecord(instance_id=inst.id, level_a=agg_a))
        per_inst = {m.name: a_preds[m.name][i] for m in a_members}
        if gate_level_b(per_inst, gate_b_threshold):
            b_idx.append(i)
    if b_idx:
        b_members = ensemble.members_for("B")
        b_batch = [chunk[i] for i in b_idx]
        b_preds = {m.name: m.predict_batch(b_batch, "B") for m in b_members}
        c_idx = []
        for j, i in enumerate(b_idx):
            agg_b = aggregate(
                [(m.name, b_preds[m.name][j].confidences["UNT"]) for m in b_members]
            )
            records[i] = replace(records[i], level_b=agg_b)
            if gate_level_c(agg_b, gate_c_tin, gate_c_std):
                c_idx.append(i)
        if c_idx:
            c_members = ensemble.members_for("C")
            c_batch = [chunk[i] for i in c_idx]
            c_preds = {m.name: m.predict_batch(c_batch, "C") for m in c_members}
            for j, i in enumerate(c_idx):
                per_class = {
                    cls: aggregate(
                        [(m.name, c_preds[m.name][j].confidences[cls]) for m in c_members]
                    )
                    for cls in LEVEL_CLASSES["C"]
                }
                records[i] = replace(records[i], level_c=per_class)
    return records, a_detail


def run_cascade(
    ensemble: Ensemble,
    corpus: Iterable[Instance],
    *,
    threads: int = 1,
    batch_size: int = 64,
    gate_b_threshold: float = GATE_B_THRESHOLD,
    gate_c_tin: float = GATE_C_TIN_THRESHOLD,
    gate_c_std: float = GATE_C_STD_THRESHOLD,
    return_a_predictions: bool = False,
):
    """Score a corpus through the hierarchical cascade.

    Returns the records sorted by instance id; output is identical for any
    thread count because instances are scored independently and merged
    deterministically. With `return_a_predictions`, also returns a map from
    instance id to its per-member level-A predictions (registration order),
    which the difficulty partition consumes.
    """
    ensemble.require_cascade_ready()
    chunks: list[list[Instance]] = []
    current: list[Instance] = []
    seen: set[str] = set()
    for inst in corpus:
        if inst.id in seen:
            raise InputError(f"duplicate instance id {inst.id!r}")
        seen.add(inst.id)
        current.append(inst)
        if len(current) >= batch_size:
            chunks.append(current)
            current = []
    if current:
        chunks.append(current)

    def work(chunk):
        return _score_chunk(ensemble, chunk, gate_b_threshold, gate_c_tin, gate_c_std)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_chunk = list(pool.map(work, chunks))
    else:
        per_chunk = [work(c) for c in chunks]
    records = [rec for recs, _ in per_chunk for rec in recs]
    records.sort(key=lambda r: r.instance_id)
    if return_a_predictions:
        a_detail: dict[str, list[ModelPrediction]] = {}
        for _, detail in per_chunk:
            a_detail.update(detail)
        return records, a_detail
    return records


def distill_labels(
    record: DistantRecord,
    *,
    a_threshold: float = 0.5,
    b_threshold: float = 0.5,
) -> HierLabel:
    """Turn a distant record's scores into a hard hierarchical label."""
    for name, value in (("a_threshold", a_threshold), ("b_threshold", b_threshold)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} outside [0, 1]: {value}")
    a = "OFF" if record.level_a.average >= a_threshold else "NOT"
    if a == "NOT" or record.level_b is None:
        return HierLabel(a)
    b = "UNT" if record.level_b.average >= b_threshold else "TIN"
    if b == "UNT" or record.level_c is None:
        return HierLabel(a, b)
    averages = {cls: agg.average for cls, agg in record.level_c.items()}
    best = max(averages[c] for c in LEVEL_CLASSES["C"])
    c = next(cls for cls in LEVEL_CLASSES["C"] if averages[cls] == best)
    return HierLabel(a, b, c)


# ---------------------------------------------------------------------------
# Distant score files (per-level CSV, 6 decimal places)
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_distant_csv(records: Sequence[DistantRecord], outdir) -> dict[str, Path]:
    """Write the three per-level CSV score files; returns their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {level: outdir / name for level, name in DISTANT_FILES.items()}
    with open(paths["A"], "w", encoding="utf-8", newline="") as fa:
        fa.write("id,average,std\n")
        for r in records:
            fa.write(f"{r.instance_id},{_fmt(r.level_a.average)},{_fmt(r.level_a.std)}\n")
    with open(paths["B"], "w", encoding="utf-8", newline="") as fb:
        fb.write("id,average,std\n")
        for r in records:
            if r.level_b is not None:
                fb.write(f"{r.instance_id},{_fmt(r.level_b.average)},{_fmt(r.level_b.std)}\n")
    with open(paths["C"], "w", encoding="utf-8", newline="") as fc:
        fc.write("id,avg_ind,std_ind,avg_grp,std_grp,avg_oth,std_oth\n")
        for r in records:
            if r.level_c is not None:
                cells = [r.instance_id]
                for cls in LEVEL_CLASSES["C"]:
                    agg = r.level_c[cls]
                    cells += [_fmt(agg.average), _fmt(agg.std)]
                fc.write(",".join(cells) + "\n")
    return paths


def read_distant_records(outdir) -> list[DistantRecord]:
    """Reload records from the per-level CSVs (per-model detail is gone)."""
    outdir = Path(outdir)
    by_id: dict[str, dict] = {}

    def rows(level):
        path = outdir / DISTANT_FILES[level]
        try:
            f = open(path, encoding="utf-8", newline="")
        except OSError as exc:
            raise InputError(f"cannot read score file {path}: {exc}") from exc
        with f:
            yield from csv.DictReader(f)

    for row in rows("A"):
        by_id[row["id"]] = {
            "a": AggregateScore(float(row["average"]), float(row["std"]))
        }
    for row in rows("B"):
        if row["id"] not in by_id:
            raise InputError(f"level-B score for unknown id {row['id']!r}")
        by_id[row["id"]]["b"] = AggregateScore(float(row["average"]), float(row["std"]))
    for row in rows("C"):
        entry = by_id.get(row["id"])
        if entry is None or "b" not in entry:
            raise InputError(f"level-C score for ungated id {row['id']!r}")
        entry["c"] = {
            "IND": AggregateScore(float(row["avg_ind"]), float(row["std_ind"])),
            "GRP": AggregateScore(float(row["avg_grp"]), float(row["std_grp"])),
            "OTH": AggregateScore(float(row["avg_oth"]), float(row["std_oth"])),
        }
    return [
        DistantRecord(
            instance_id=id_,
            level_a=entry["a"],
            level_b=entry.get("b"),
            level_c=entry.get("c"),
        )
        for id_, entry in sorted(by_id.items())
    ]
