"""Corpus-level keyword aggregation, frequency cut-off, and curve export.

Counting unit is (document, word): per-document keyword lists are already
deduplicated, so the count of a word equals the number of documents whose
keyword list contains it.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import TEXT_ENCODING
from .extraction import DocKeywords

KEYWORD_SOURCES = ("summaries", "whole_data")


@dataclass(frozen=True)
class KeywordFrequencyTable:
    """(word, count) entries sorted by descending count, ties by word."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        for (w1, c1), (w2, c2) in zip(self.entries, self.entries[1:]):
            if (-c1, w1) > (-c2, w2):
                raise ValueError("entries are not sorted by (-count, word)")

    def counts(self) -> dict[str, int]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class KeywordSet:
    """Masking vocabulary: the words at or above the frequency cut-off."""

    words: frozenset[str]
    threshold: int
    source: str = "summaries"

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if self.source not in KEYWORD_SOURCES:
            raise ValueError(f"source must be one of {KEYWORD_SOURCES}")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def empty(cls, source: str = "summaries") -> "KeywordSet":
        return cls(words=frozenset(), threshold=1, source=source)


def build_frequency_table(doc_keywords: Sequence[DocKeywords]) -> KeywordFrequencyTable:
    """Count in how many documents each word was extracted as a keyword."""
    counts: dict[str, int] = {}
    for dk in doc_keywords:
        for word, _ in dk.keywords:
            counts[word] = counts.get(word, 0) + 1
    entries = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return KeywordFrequencyTable(entries=tuple(entries))


def apply_cutoff(table: KeywordFrequencyTable, threshold: int,
                 source: str = "summaries") -> KeywordSet:
    """Keep words whose count is >= threshold; may return an empty set."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    words = frozenset(w for w, c in table.entries if c >= threshold)
    return KeywordSet(words=words, threshold=threshold, source=source)


def frequency_curve(table: KeywordFrequencyTable,
                    tail: int = 50) -> list[tuple[int, int]]:
    """How many distinct words sit at each frequency level, low end first.

    Restricted to the ``tail`` lowest frequency levels; this is the data
    behind the cut-off curve plots.
    """
    if tail < 1:
        raise ValueError("tail must be >= 1")
    histogram: dict[int, int] = {}
    for _, count in table.entries:
        histogram[count] = histogram.get(count, 0) + 1
    levels = sorted(histogram)[:tail]
    return [(level, histogram[level]) for level in levels]


def suggest_cutoff(table: KeywordFrequencyTable) -> int:
    """Heuristic threshold: the level just above the steepest drop in the
    number of words between adjacent frequency levels.

    Purely advisory; pick the real cut-off by inspecting the curve.
    """
    curve = frequency_curve(table, tail=len(table) or 1)
    if len(curve) < 2:
        return 1
    best_ratio = 0.0
    best_level = curve[1][0]
    for (_, n_low), (level_high, n_high) in zip(curve, curve[1:]):
        ratio = n_low / max(n_high, 1)
        if ratio > best_ratio:
            best_ratio = ratio
            best_level = level_high
    return best_level


def save_frequency_table(table: KeywordFrequencyTable, path: Path | str) -> None:
    """Tab-separated word<TAB>count, in stored order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=TEXT_ENCODING) as handle:
        for word, count in table.entries:
            handle.write(f"{word}\t{count}\n")


def load_frequency_table(path: Path | str) -> KeywordFrequencyTable:
    entries = []
    for line in Path(path).read_text(encoding=TEXT_ENCODING).splitlines():
        if not line.strip():
            continue
        word, _, count = line.partition("\t")
        entries.append((word, int(count)))
    return KeywordFrequencyTable(entries=tuple(entries))


def save_keyword_set(keywords: KeywordSet, path: Path | str) -> None:
    """One word per line, preceded by a metadata header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# threshold={keywords.threshold} source={keywords.source}"]
    lines.extend(sorted(keywords.words))
    path.write_text("\n".join(lines) + "\n", encoding=TEXT_ENCODING)


def load_keyword_set(path: Path | str) -> KeywordSet:
    lines = Path(path).read_text(encoding=TEXT_ENCODING).splitlines()
    threshold = 1
    source = "summaries"
    words = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for part in line[1:].split():
                key, _, value = part.partition("=")
                if key == "threshold":
                    threshold = int(value)
                elif key == "source":
                    source = value
            continue
        words.append(line)
    return KeywordSet(words=frozenset(words), threshold=threshold, source=source)


def save_frequency_curve(curve: Sequence[tuple[int, int]], path: Path | str) -> None:
    """CSV with columns frequency_level,num_words for plot generation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=TEXT_ENCODING, newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["frequency_level", "num_words"])
        for level, num_words in curve:
            writer.writerow([level, num_words])


def load_frequency_curve(path: Path | str) -> list[tuple[int, int]]:
    with Path(path).open(encoding=TEXT_ENCODING, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)
        return [(int(level), int(num)) for level, num in reader if level]
