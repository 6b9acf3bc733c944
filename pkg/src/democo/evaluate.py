"""Evaluation: macro-F1 reports, easy/hard slices, agreement, histograms."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .select import Bucket

# Per-class F1 is defined as 0 when precision + recall is 0.
F1_ZERO_DIVISION = 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    level: str
    slice_name: str  # Full | Easy | Hard
    macro_f1: float
    per_class: Mapping[str, ClassMetrics]
    confusion: Mapping[tuple[str, str], int]  # (gold, predicted) -> count

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "slice": self.slice_name,
            "macro_f1": self.macro_f1,
            "per_class": {
                cls: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for cls, m in self.per_class.items()
            },
            "confusion": {f"{g}->{p}": n for (g, p), n in sorted(self.confusion.items())},
            "conventions": {"f1_zero_division": F1_ZERO_DIVISION},
        }


def macro_f1(
    gold: Mapping[str, str],
    pred: Mapping[str, str],
    *,
    level: str = "A",
    slice_name: str = "Full",
) -> EvalReport:
    """Unweighted mean of per-class F1 over the classes present in gold."""
    if set(gold) != set(pred):
        missing = set(gold) ^ set(pred)
        raise InputError(f"gold/prediction id mismatch ({len(missing)} ids differ)")
    confusion: dict[tuple[str, str], int] = {}
    for id_, g in gold.items():
        key = (g, pred[id_])
        confusion[key] = confusion.get(key, 0) + 1
    classes = sorted({g for g, _ in confusion})
    per_class: dict[str, ClassMetrics] = {}
    for cls in classes:
        tp = confusion.get((cls, cls), 0)
        fn = sum(n for (g, p), n in confusion.items() if g == cls and p != cls)
        fp = sum(n for (g, p), n in confusion.items() if g != cls and p == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else F1_ZERO_DIVISION
        )
        per_class[cls] = ClassMetrics(precision, recall, f1, support=tp + fn)
    macro = sum(m.f1 for m in per_class.values()) / len(per_class) if per_class else 0.0
    return EvalReport(
        level=level,
        slice_name=slice_name,
        macro_f1=macro,
        per_class=per_class,
        confusion=confusion,
    )


def evaluate_buckets(
    gold: Mapping[str, str],
    pred: Mapping[str, str],
    buckets: Mapping[str, Bucket],
    *,
    level: str = "A",
) -> list[EvalReport]:
    """Full, Easy, and Hard reports; slices follow the bucket difficulty."""
    unknown = set(buckets) - set(gold)
    if unknown:
        raise InputError(f"buckets name {len(unknown)} ids absent from gold")
    reports = [macro_f1(gold, pred, level=level, slice_name="Full")]
    for difficulty in ("Easy", "Hard"):
        ids = [i for i, b in buckets.items() if b.difficulty == difficulty]
        sliced_gold = {i: gold[i] for i in ids}
        sliced_pred = {i: pred[i] for i in ids}
        reports.append(
            macro_f1(sliced_gold, sliced_pred, level=level, slice_name=difficulty)
        )
    return reports


def iaa_p0(items: Mapping[str, Sequence[str]]) -> float:
    """Observed agreement: mean per-item share of annotators on the modal label."""
    if not items:
        raise InputError("no annotated items")
    sizes = {len(labels) for labels in items.values()}
    if len(sizes) != 1:
        raise InputError("inconsistent annotator counts across items")
    (n_annotators,) = sizes
    if n_annotators < 2:
        raise InputError("agreement needs at least 2 annotators")
    total = 0.0
    for id_, labels in items.items():
        if not labels:
            raise InputError(f"item {id_!r} has no annotations")
        modal = max(labels.count(lab) for lab in set(labels))
        total += modal / n_annotators
    return total / len(items)


@dataclass(frozen=True)
class Histogram:
    lo: float
    hi: float
    counts: tuple[int, ...]
    underflow: int
    overflow: int

    @property
    def total(self) -> int:
        return sum(self.counts) + self.underflow + self.overflow

    def edges(self) -> list[tuple[float, float]]:
        width = (self.hi - self.lo) / len(self.counts)
        return [
            (self.lo + i * width, self.lo + (i + 1) * width)
            for i in range(len(self.counts))
        ]

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for (lo, hi), n in zip(self.edges(), self.counts):
            lines.append(f"{lo:.6f},{hi:.6f},{n}")
        return "\n".join(lines) + "\n"

    def render_text(self, width: int = 50) -> str:
        peak = max(self.counts) if self.counts else 0
        out = io.StringIO()
        if self.underflow:
            out.write(f"< {self.lo:.3f}  {self.underflow}\n")
        for (lo, hi), n in zip(self.edges(), self.counts):
            bar = "#" * (round(n / peak * width) if peak else 0)
            out.write(f"[{lo:.3f}, {hi:.3f})  {n:>8}  {bar}\n")
        if self.overflow:
            out.write(f"> {self.hi:.3f}  {self.overflow}\n")
        return out.getvalue()


def score_histogram(
    scores: Iterable[float], bins: int, lo: float = 0.0, hi: float = 1.0
) -> Histogram:
    """Equal-width histogram with explicit under/overflow counters.

    Values exactly at `hi` land in the last bin; conservation holds:
    bin counts plus under/overflow equal the input count.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    arr = np.fromiter(scores, dtype=float)
    underflow = int((arr < lo).sum())
    overflow = int((arr > hi).sum())
    inside = arr[(arr >= lo) & (arr <= hi)]
    counts, _ = np.histogram(inside, bins=bins, range=(lo, hi))
    return Histogram(
        lo=lo,
        hi=hi,
        counts=tuple(int(c) for c in counts),
        underflow=underflow,
        overflow=overflow,
    )


def render_report(report: EvalReport) -> str:
    """Aligned-column text rendering of one report."""
    out = io.StringIO()
    out.write(f"level {report.level}  slice {report.slice_name}  ")
    out.write(f"macro-F1 {report.macro_f1:.4f}\n")
    if not report.per_class:
        out.write("  (empty slice)\n")
        return out.getvalue()
    name_w = max(len(c) for c in report.per_class)
    out.write(f"  {'class':<{name_w}}  {'prec':>6}  {'rec':>6}  {'f1':>6}  {'support':>7}\n")
    for cls, m in sorted(report.per_class.items()):
        out.write(
            f"  {cls:<{name_w}}  {m.precision:>6.3f}  {m.recall:>6.3f}"
            f"  {m.f1:>6.3f}  {m.support:>7}\n"
        )
    return out.getvalue()
