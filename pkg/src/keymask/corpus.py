"""Corpus ingestion, validation, partitioning, and size accounting.

The canonical interchange format is one JSON record per line with fields
``id``/``text``/``label``/``split`` (UTF-8); CSV is accepted for ingestion
only. Loaded corpora are immutable and safe to share across readers.
"""

import csv
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusFormatError, IntegrityError

SPLIT_NAMES = ("train", "validation", "test", "unlabeled")

TEXT_ENCODING = "utf-8"


@dataclass(frozen=True)
class Document:
    """One text unit; ``label`` is present only in supervised splits."""

    id: str
    text: str
    label: str | None = None


@dataclass(frozen=True)
class CorpusSplits:
    """Train/validation/test partitions plus the unlabeled pretraining pool."""

    train: tuple[Document, ...] = ()
    validation: tuple[Document, ...] = ()
    test: tuple[Document, ...] = ()
    unlabeled: tuple[Document, ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        for split in SPLIT_NAMES:
            for doc in getattr(self, split):
                if doc.id in seen:
                    raise IntegrityError(f"duplicate document id {doc.id!r}")
                seen.add(doc.id)
                if not doc.text.strip():
                    raise IntegrityError(f"document {doc.id!r} has empty text")
                if split == "unlabeled":
                    if doc.label is not None:
                        raise IntegrityError(
                            f"document {doc.id!r} in unlabeled split carries a label"
                        )
                elif doc.label is None:
                    raise IntegrityError(
                        f"document {doc.id!r} in {split} split is missing a label"
                    )

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (len(self.train), len(self.validation), len(self.test), len(self.unlabeled))

    def all_documents(self) -> list[Document]:
        return list(self.train) + list(self.validation) + list(self.test) + list(self.unlabeled)


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    byte_size: int
    label_histogram: dict[str, int] = field(default_factory=dict)


def _doc_from_record(record: dict, line: int) -> tuple[Document, str]:
    try:
        doc_id = record["id"]
        text = record["text"]
        split = record["split"]
    except KeyError as exc:
        raise CorpusFormatError(f"missing field {exc.args[0]!r}", line) from None
    if not isinstance(text, str) or not text.strip():
        raise CorpusFormatError(f"document {doc_id!r} has empty text", line)
    if split not in SPLIT_NAMES:
        raise CorpusFormatError(f"unknown split {split!r}", line)
    label = record.get("label")
    if label is not None and not isinstance(label, str):
        label = str(label)
    return Document(id=str(doc_id), text=text, label=label), split


def _iter_jsonl(path: Path) -> Iterable[tuple[dict, int]]:
    with path.open(encoding=TEXT_ENCODING) as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from None
            if not isinstance(record, dict):
                raise CorpusFormatError("record is not an object", line_no)
            yield record, line_no


def _iter_csv(path: Path) -> Iterable[tuple[dict, int]]:
    with path.open(encoding=TEXT_ENCODING, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "text" not in reader.fieldnames:
            raise CorpusFormatError("CSV header must include a 'text' column", 1)
        for line_no, row in enumerate(reader, start=2):
            # Empty optional cells mean "absent"; keep text so the empty-text
            # check reports the right error.
            record = {k: v for k, v in row.items() if k == "text" or v not in (None, "")}
            yield record, line_no


def load_corpus(path: Path | str, format: str = "jsonl") -> CorpusSplits:
    """Load and validate a corpus file.

    Rejects malformed records (naming the line), duplicate ids, labeled
    records in the unlabeled split, and unlabeled records in supervised
    splits.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if format == "jsonl":
        records = _iter_jsonl(path)
    elif format == "csv":
        records = _iter_csv(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")

    buckets: dict[str, list[Document]] = {name: [] for name in SPLIT_NAMES}
    seen: dict[str, int] = {}
    for record, line_no in records:
        doc, split = _doc_from_record(record, line_no)
        if doc.id in seen:
            raise IntegrityError(
                f"duplicate document id {doc.id!r} at line {line_no} "
                f"(first seen at line {seen[doc.id]})"
            )
        seen[doc.id] = line_no
        if split == "unlabeled" and doc.label is not None:
            raise IntegrityError(
                f"document {doc.id!r} at line {line_no} is in the unlabeled "
                "split but carries a label"
            )
        buckets[split].append(doc)
    return CorpusSplits(
        train=tuple(buckets["train"]),
        validation=tuple(buckets["validation"]),
        test=tuple(buckets["test"]),
        unlabeled=tuple(buckets["unlabeled"]),
    )


def save_corpus(splits: CorpusSplits, path: Path | str) -> None:
    """Write the canonical line-delimited format (round-trips with load)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=TEXT_ENCODING) as handle:
        for split in SPLIT_NAMES:
            for doc in getattr(splits, split):
                record = {"id": doc.id, "text": doc.text, "split": split}
                if doc.label is not None:
                    record["label"] = doc.label
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def derive_test_from_train(splits: CorpusSplits, size: int, seed: int) -> CorpusSplits:
    """Move ``size`` documents from train to an empty test split.

    Selection is a seeded uniform draw without replacement, deterministic for
    a fixed seed; documents are moved, not copied, so the train∪test total
    and label multiset are preserved.
    """
    if splits.test:
        raise IntegrityError("test split is non-empty; refusing to overwrite")
    if size < 0 or size > len(splits.train):
        raise ValueError(f"size must be in [0, {len(splits.train)}], got {size}")
    rng = random.Random(seed)
    chosen = set(rng.sample(range(len(splits.train)), size))
    new_test = tuple(doc for i, doc in enumerate(splits.train) if i in chosen)
    new_train = tuple(doc for i, doc in enumerate(splits.train) if i not in chosen)
    return CorpusSplits(
        train=new_train,
        validation=splits.validation,
        test=new_test,
        unlabeled=splits.unlabeled,
    )


def corpus_stats(docs: Sequence[Document]) -> CorpusStats:
    """Size accounting over the raw text field only (fixed UTF-8 encoding)."""
    byte_size = sum(len(doc.text.encode(TEXT_ENCODING)) for doc in docs)
    histogram = Counter(doc.label for doc in docs if doc.label is not None)
    return CorpusStats(
        doc_count=len(docs),
        byte_size=byte_size,
        label_histogram=dict(sorted(histogram.items())),
    )


def write_stats(stats: CorpusStats, path: Path | str) -> None:
    """Export stats as a flat key=value file for reporting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"doc_count={stats.doc_count}", f"byte_size={stats.byte_size}"]
    lines.extend(f"label.{label}={count}" for label, count in stats.label_histogram.items())
    path.write_text("\n".join(lines) + "\n", encoding=TEXT_ENCODING)


def read_stats(path: Path | str) -> CorpusStats:
    doc_count = 0
    byte_size = 0
    histogram: dict[str, int] = {}
    for line in Path(path).read_text(encoding=TEXT_ENCODING).splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        if key == "doc_count":
            doc_count = int(value)
        elif key == "byte_size":
            byte_size = int(value)
        elif key.startswith("label."):
            histogram[key[len("label."):]] = int(value)
    return CorpusStats(doc_count=doc_count, byte_size=byte_size, label_histogram=histogram)
