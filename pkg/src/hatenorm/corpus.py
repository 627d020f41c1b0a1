"""Data model for annotated posts: tokenization, BIO span codes, JSONL I/O, splits.

A sample is one post with a hate-intensity score in [1, 10], zero or more
non-overlapping token spans marking the hateful parts, and (optionally) a
normalized counterpart with its own intensity. Spans are inclusive token
index pairs under the whitespace tokenizer defined here.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

B, I, O = "B", "I", "O"
TAGS = (B, I, O)
TAG_TO_ID = {B: 0, I: 1, O: 2}
ID_TO_TAG = {v: k for k, v in TAG_TO_ID.items()}

Span = tuple[int, int]


class CorpusError(ValueError):
    """Malformed corpus file or record."""


class SpanError(ValueError):
    """Span list violates ordering, overlap, or range constraints."""


def tokenize(text: str) -> list[str]:
    """Split on Unicode whitespace, keeping punctuation, @-mentions and
    #hashtags glued to their tokens. Empty text gives an empty list."""
    return text.split()


def check_spans(n_tokens: int, spans: Sequence[Span]) -> None:
    """Raise SpanError unless spans are sorted, non-overlapping and in range."""
    prev_end = -1
    for start, end in spans:
        if not (0 <= start <= end < n_tokens):
            raise SpanError(
                f"span ({start},{end}) out of range for {n_tokens} tokens"
            )
        if start <= prev_end:
            raise SpanError(f"span ({start},{end}) overlaps or is unsorted")
        prev_end = end


def encode_bio(n_tokens: int, spans: Sequence[Span]) -> list[str]:
    """Encode spans as per-token B/I/O tags."""
    check_spans(n_tokens, spans)
    tags = [O] * n_tokens
    for start, end in spans:
        tags[start] = B
        for i in range(start + 1, end + 1):
            tags[i] = I
    return tags


def decode_bio(tags: Sequence[str]) -> list[Span]:
    """Decode B/I/O tags into spans. Total on any tag sequence: an I with no
    live span to its left is repaired to B (it opens a new span)."""
    spans: list[Span] = []
    start = None
    for i, tag in enumerate(tags):
        if tag == B:
            if start is not None:
                spans.append((start, i - 1))
            start = i
        elif tag == I:
            if start is None:
                start = i
        elif tag == O:
            if start is not None:
                spans.append((start, i - 1))
                start = None
        else:
            raise SpanError(f"unknown tag {tag!r} at position {i}")
    if start is not None:
        spans.append((start, len(tags) - 1))
    return spans


@dataclass(frozen=True)
class Sample:
    """One post with its annotations. Immutable after construction."""

    id: str
    text: str
    tokens: tuple[str, ...]
    intensity: float
    spans: tuple[Span, ...]
    normalized_text: Optional[str] = None
    normalized_intensity: Optional[float] = None
    engagement: Optional[int] = None

    def __post_init__(self) -> None:
        if tuple(tokenize(self.text)) != self.tokens:
            raise CorpusError(f"sample {self.id}: tokens do not match tokenize(text)")
        if not 1.0 <= self.intensity <= 10.0:
            raise CorpusError(
                f"sample {self.id}: intensity {self.intensity} outside [1,10]"
            )
        try:
            check_spans(len(self.tokens), self.spans)
        except SpanError as exc:
            raise CorpusError(f"sample {self.id}: spans: {exc}") from exc
        if self.normalized_intensity is not None and not (
            1.0 <= self.normalized_intensity <= 10.0
        ):
            raise CorpusError(
                f"sample {self.id}: normalized_intensity "
                f"{self.normalized_intensity} outside [1,10]"
            )
        if self.engagement is not None and self.engagement < 0:
            raise CorpusError(f"sample {self.id}: engagement must be >= 0")

    @classmethod
    def make(
        cls,
        id: str,
        text: str,
        intensity: float,
        spans: Sequence[Span] = (),
        normalized_text: Optional[str] = None,
        normalized_intensity: Optional[float] = None,
        engagement: Optional[int] = None,
    ) -> "Sample":
        return cls(
            id=id,
            text=text,
            tokens=tuple(tokenize(text)),
            intensity=float(intensity),
            spans=tuple((int(s), int(e)) for s, e in spans),
            normalized_text=normalized_text,
            normalized_intensity=(
                None if normalized_intensity is None else float(normalized_intensity)
            ),
            engagement=engagement,
        )

    def bio_tags(self) -> list[str]:
        return encode_bio(len(self.tokens), self.spans)

    def span_texts(self) -> list[str]:
        return [" ".join(self.tokens[s : e + 1]) for s, e in self.spans]

    def to_record(self) -> dict:
        record: dict = {
            "id": self.id,
            "text": self.text,
            "intensity": self.intensity,
            "spans": [[s, e] for s, e in self.spans],
        }
        if self.normalized_text is not None:
            record["normalized_text"] = self.normalized_text
        if self.normalized_intensity is not None:
            record["normalized_intensity"] = self.normalized_intensity
        if self.engagement is not None:
            record["engagement"] = self.engagement
        return record

    @classmethod
    def from_record(cls, record: dict) -> "Sample":
        required = {"id", "text", "intensity", "spans"}
        missing = required - record.keys()
        if missing:
            raise CorpusError(f"record missing fields: {sorted(missing)}")
        return cls.make(
            id=record["id"],
            text=record["text"],
            intensity=record["intensity"],
            spans=[tuple(pair) for pair in record["spans"]],
            normalized_text=record.get("normalized_text"),
            normalized_intensity=record.get("normalized_intensity"),
            engagement=record.get("engagement"),
        )


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of samples plus corpus-level token statistics."""

    samples: tuple[Sample, ...]
    term_frequency: dict = field(compare=False)
    document_frequency: dict = field(compare=False)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "Corpus":
        tf: Counter = Counter()
        df: Counter = Counter()
        for sample in samples:
            tf.update(sample.tokens)
            # first-seen order, not set order, so serialization is bit-stable
            df.update(dict.fromkeys(sample.tokens, 1))
        return cls(
            samples=tuple(samples),
            term_frequency=dict(tf),
            document_frequency=dict(df),
        )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def total_tokens(self) -> int:
        return sum(self.term_frequency.values())


@dataclass(frozen=True)
class SplitSpec:
    """Ratios for (train, val, test) plus the shuffle seed."""

    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self) -> None:
        if any(r <= 0 for r in self.ratios):
            raise ValueError("all split ratios must be positive")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(self.ratios)}")


def split_corpus(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic shuffle then partition. Val and test sizes are floored;
    the remainder goes to train, so a 70:15:15 split of 3027 gives
    2119/454/454 (one differently rounded source would give 2119/454/455)."""
    if len(corpus) == 0:
        raise CorpusError("cannot split an empty corpus")
    order = list(range(len(corpus)))
    random.Random(spec.seed).shuffle(order)
    n = len(corpus)
    n_val = int(n * spec.ratios[1])
    n_test = int(n * spec.ratios[2])
    n_train = n - n_val - n_test
    shuffled = [corpus.samples[i] for i in order]
    return (
        Corpus.from_samples(shuffled[:n_train]),
        Corpus.from_samples(shuffled[n_train : n_train + n_val]),
        Corpus.from_samples(shuffled[n_train + n_val :]),
    )


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSONL corpus, validating every record."""
    samples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            try:
                samples.append(Sample.from_record(record))
            except (CorpusError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return Corpus.from_samples(samples)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sample in corpus:
            handle.write(json.dumps(sample.to_record(), ensure_ascii=False) + "\n")
