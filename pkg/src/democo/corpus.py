"""Corpus ingestion: filtering, anonymization, tokenization, file formats.

Raw text goes through three deterministic steps before any model sees it:
user mentions are rewritten to the literal ``@USER``, too-short / URL-bearing
texts are dropped, and the survivors are tokenized. The same tokenizer is
used everywhere so that token lists are reproducible from the stored text.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CorpusFormatError
from .labels import HierLabel

# A mention is `@` plus at least one handle character, at the start of a
# whitespace-separated token. `@USER` itself matches, which makes the
# substitution idempotent.
_MENTION_RE = re.compile(r"(?<!\S)@\w+")

MENTION_PLACEHOLDER = "@USER"

_URL_MARKERS = ("http://", "https://", "www.")

MIN_CHARS = 18
MIN_WORDS = 2

GOLD_HEADER = ("id", "tweet", "subtask_a", "subtask_b", "subtask_c")

# Separator used to join n-gram tokens into a single key. Reserved: tokens
# containing it would alias a higher-order n-gram.
NGRAM_SEP = "▁"

_WORDISH_RE = re.compile(r"\w+")


@dataclass(frozen=True)
class Instance:
    """One text item flowing through the pipeline."""

    id: str
    text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class LabeledInstance:
    instance: Instance
    label: HierLabel


def anonymize(text: str) -> str:
    """Replace every token-initial user mention with ``@USER``."""
    return _MENTION_RE.sub(MENTION_PLACEHOLDER, text)


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on whitespace, detach punctuation characters.

    Within each whitespace chunk, maximal word-character runs are kept
    whole and every other character becomes its own token. The literal
    ``@USER`` placeholder survives as a single, uppercase token.
    """
    tokens: list[str] = []
    for chunk in text.split():
        if chunk == MENTION_PLACEHOLDER:
            tokens.append(chunk)
            continue
        chunk = chunk.lower()
        pos = 0
        for m in _WORDISH_RE.finditer(chunk):
            tokens.extend(chunk[pos : m.start()])
            tokens.append(m.group())
            pos = m.end()
        tokens.extend(chunk[pos:])
    return tuple(tokens)


def make_instance(id: str, raw_text: str) -> Instance:
    """Anonymize and tokenize raw text into an Instance."""
    text = anonymize(raw_text)
    return Instance(id=id, text=text, tokens=tokenize(text))


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.keep


def filter_raw(text: str) -> FilterDecision:
    """Keep/drop decision for a raw text; the reason names the first failing rule.

    Drops texts shorter than 18 characters, with fewer than two
    whitespace-separated words, or containing a URL marker.
    """
    if len(text) < MIN_CHARS:
        return FilterDecision(False, "too_short")
    if len(text.split()) < MIN_WORDS:
        return FilterDecision(False, "too_few_words")
    lowered = text.lower()
    if any(marker in lowered for marker in _URL_MARKERS):
        return FilterDecision(False, "url")
    return FilterDecision(True)


def extract_ngrams(tokens, orders) -> Counter:
    """Multiset of contiguous n-grams of the requested orders.

    N-grams are joined with a reserved separator so that a bigram key can
    be used anywhere a unigram key can.
    """
    orders = sorted(set(orders))
    if not orders:
        raise ValueError("orders must be non-empty")
    if orders[0] < 1:
        raise ValueError("n-gram orders must be >= 1")
    grams: Counter = Counter()
    toks = list(tokens)
    for n in orders:
        for i in range(len(toks) - n + 1):
            grams[NGRAM_SEP.join(toks[i : i + n])] += 1
    return grams


# ---------------------------------------------------------------------------
# Gold TSV (three-level hierarchical labels)
# ---------------------------------------------------------------------------


def parse_gold_tsv(data: bytes | str) -> list[LabeledInstance]:
    """Parse a gold TSV file into labeled instances.

    Expects the canonical header and one instance per row; `NULL` level B/C
    cells map to absent labels. Raises CorpusFormatError with a row number
    for malformed rows, unknown or inconsistent labels, and duplicate ids.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorpusFormatError("empty file: missing header")
    header = tuple(lines[0].split("\t"))
    if header != GOLD_HEADER:
        raise CorpusFormatError(f"bad header {header!r}", row=1)
    out: list[LabeledInstance] = []
    seen: set[str] = set()
    for rownum, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(GOLD_HEADER):
            raise CorpusFormatError(
                f"expected {len(GOLD_HEADER)} columns, got {len(cells)}", row=rownum
            )
        id_, text, a, b, c = cells
        if id_ in seen:
            raise CorpusFormatError(f"duplicate id {id_!r}", row=rownum)
        seen.add(id_)
        try:
            label = HierLabel.from_cells(a, b, c)
        except ValueError as exc:
            raise CorpusFormatError(str(exc), row=rownum) from exc
        out.append(LabeledInstance(make_instance(id_, text), label))
    return out


def write_gold_tsv(items: Iterable[LabeledInstance]) -> bytes:
    """Serialize labeled instances back into the gold TSV format."""
    buf = io.StringIO()
    buf.write("\t".join(GOLD_HEADER) + "\n")
    for item in items:
        a, b, c = item.label.to_cells()
        buf.write("\t".join((item.instance.id, item.instance.text, a, b, c)) + "\n")
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Unlabeled corpus (newline-delimited JSON)
# ---------------------------------------------------------------------------


def iter_unlabeled_jsonl(lines: Iterable[str], on_malformed=None) -> Iterator[Instance]:
    """Yield instances from `{"id": ..., "text": ...}` lines.

    Malformed lines are skipped; `on_malformed(line_number)` is invoked for
    each so callers can count them.
    """
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            id_, text = obj["id"], obj["text"]
            if not isinstance(id_, str) or not isinstance(text, str):
                raise TypeError("id and text must be strings")
        except (json.JSONDecodeError, KeyError, TypeError):
            if on_malformed is not None:
                on_malformed(lineno)
            continue
        yield make_instance(id_, text)


def write_unlabeled_jsonl(instances: Iterable[Instance]) -> str:
    return "".join(
        json.dumps({"id": inst.id, "text": inst.text}, ensure_ascii=False) + "\n"
        for inst in instances
    )


# ---------------------------------------------------------------------------
# Stopword sampling table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StopwordEntry:
    word: str
    frequency: int
    cumulative: float


class StopwordTable:
    """Frequency-ordered stopword list with cumulative sampling weights."""

    # The published table rounds cumulative values to two decimals.
    CUMULATIVE_TOLERANCE = 0.005

    def __init__(self, entries: list[StopwordEntry]):
        if not entries:
            raise ValueError("stopword table is empty")
        total = sum(e.frequency for e in entries)
        running = 0
        prev = 0.0
        for e in entries:
            if e.frequency <= 0:
                raise ValueError(f"non-positive frequency for {e.word!r}")
            if e.cumulative <= prev:
                raise ValueError("cumulative weights must be strictly increasing")
            running += e.frequency
            if abs(e.cumulative - running / total) > self.CUMULATIVE_TOLERANCE:
                raise ValueError(
                    f"cumulative weight for {e.word!r} inconsistent with frequencies"
                )
            prev = e.cumulative
        if entries[-1].cumulative != 1.0:
            raise ValueError("last cumulative weight must equal 1.0")
        self.entries = list(entries)
        self._cum = [e.cumulative for e in entries]

    @classmethod
    def from_frequencies(cls, pairs: Iterable[tuple[str, int]]) -> "StopwordTable":
        pairs = list(pairs)
        total = sum(f for _, f in pairs)
        entries = []
        running = 0
        for word, freq in pairs:
            running += freq
            entries.append(StopwordEntry(word, freq, running / total))
        return cls(entries)

    @classmethod
    def from_csv(cls, text: str) -> "StopwordTable":
        """Load from `word,frequency` CSV with a header row."""
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError("empty stopword CSV") from None
        if [h.strip() for h in header] != ["word", "frequency"]:
            raise CorpusFormatError(f"bad stopword CSV header {header!r}", row=1)
        pairs = []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CorpusFormatError("expected `word,frequency`", row=rownum)
            try:
                pairs.append((row[0].strip(), int(row[1].replace(",", ""))))
            except ValueError as exc:
                raise CorpusFormatError(str(exc), row=rownum) from exc
        return cls.from_frequencies(pairs)

    def sample(self, u: float) -> str:
        """Word at the inverse-CDF position `u` in [0, 1]."""
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"u must be in [0, 1], got {u}")
        idx = bisect.bisect_left(self._cum, u)
        return self.entries[min(idx, len(self.entries) - 1)].word

    def words(self) -> list[str]:
        return [e.word for e in self.entries]


def sample_stopword(table: StopwordTable, u: float) -> str:
    """First table entry whose cumulative weight reaches `u`."""
    return table.sample(u)
