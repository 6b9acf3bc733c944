"""Three-level taxonomy labels and their propagation rules.

Level A says whether a text is offensive (OFF/NOT), level B whether the
offense is targeted (TIN/UNT), level C who the target is (IND/GRP/OTH).
Deeper levels only exist for instances that are offensive and targeted.
"""

from __future__ import annotations

from dataclasses import dataclass

LEVELS = ("A", "B", "C")

# Fixed class order per level; argmax ties are broken toward earlier entries.
LEVEL_CLASSES = {
    "A": ("OFF", "NOT"),
    "B": ("TIN", "UNT"),
    "C": ("IND", "GRP", "OTH"),
}

# Positive class whose confidence the cascade aggregates at binary levels.
POSITIVE_CLASS = {"A": "OFF", "B": "UNT"}

# Class predicted when a model has no usable evidence for an instance.
FALLBACK_CLASS = {"A": "NOT", "B": "UNT", "C": "IND"}

NULL = "NULL"


def check_level(level: str) -> str:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; expected one of {LEVELS}")
    return level


def check_class(level: str, name: str) -> str:
    check_level(level)
    if name not in LEVEL_CLASSES[level]:
        raise ValueError(f"{name!r} is not a level-{level} class")
    return name


def argmax_class(level: str, confidences) -> str:
    """Highest-confidence class, ties broken by the fixed class order."""
    order = LEVEL_CLASSES[check_level(level)]
    best = max(confidences[c] for c in order)
    for c in order:
        if confidences[c] == best:
            return c
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class HierLabel:
    """One instance's label across all three levels.

    `b` and `c` are None where the taxonomy leaves them undefined:
    non-offensive texts have no B/C label, untargeted ones no C label.
    """

    a: str
    b: str | None = None
    c: str | None = None

    def __post_init__(self):
        check_class("A", self.a)
        if self.b is not None:
            check_class("B", self.b)
        if self.c is not None:
            check_class("C", self.c)
        if self.a == "NOT" and (self.b is not None or self.c is not None):
            raise ValueError("NOT at level A forbids level B/C labels")
        if self.b is None and self.c is not None:
            raise ValueError("level C label requires a level B label")
        if self.b == "UNT" and self.c is not None:
            raise ValueError("UNT at level B forbids a level C label")

    def at_level(self, level: str) -> str | None:
        return {"A": self.a, "B": self.b, "C": self.c}[check_level(level)]

    @classmethod
    def from_cells(cls, a: str, b: str, c: str) -> "HierLabel":
        """Build from raw file cells where absent labels are `NULL`."""
        return cls(a, None if b == NULL else b, None if c == NULL else c)

    def to_cells(self) -> tuple[str, str, str]:
        return (self.a, self.b or NULL, self.c or NULL)
