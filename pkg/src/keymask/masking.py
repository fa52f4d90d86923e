"""Masking collators: keyword whole-word masking and the random baseline.

Keyword mode considers only words whose text is in the masking vocabulary.
Each candidate word is selected independently with the masking probability;
one action is then drawn for the whole word and applied to every subword
piece in its span: mask (80%), replace with uniform random tokens (10%), or
keep unchanged (10%). No other position is ever altered, and only selected
positions receive a real label (everything else gets the ignore sentinel).

Random mode is standard token-level MLM collation: each non-special token
is selected independently, with the 80/10/10 action drawn per token. With
keywords covering every word, keyword mode differs from random mode only by
the word-versus-token selection unit (documented here, not asserted).

Collators consume their RNG in a fixed order (per example, per candidate:
one selection draw, then one action draw, then one replacement draw per
replaced token), so a scripted RNG can force any path and a fixed seed
reproduces batches bit for bit. Concurrent collation needs one collator per
worker with worker i seeded as seed + i.
"""

import random
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

from .errors import ConfigError
from .filtering import KeywordSet
from .tokenizer import TokenizedExample

IGNORE_LABEL = -100

MASK_ACTION_PROB = 0.8
REPLACE_ACTION_PROB = 0.1


class RandomSource(Protocol):
    """What the collators need from an RNG (random.Random satisfies it)."""

    def random(self) -> float: ...

    def randrange(self, stop: int) -> int: ...


@dataclass(frozen=True)
class MaskingConfig:
    mode: str
    mask_token_id: int
    vocab_size: int
    masking_probability: float | None = None
    ignore_label: int = IGNORE_LABEL
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("keyword", "random"):
            raise ConfigError(f"unknown masking mode {self.mode!r}")
        if self.masking_probability is None:
            default = 0.75 if self.mode == "keyword" else 0.15
            object.__setattr__(self, "masking_probability", default)
        if not 0.0 < self.masking_probability <= 1.0:
            raise ConfigError("masking_probability must be in (0, 1]")
        if not 0 <= self.mask_token_id < self.vocab_size:
            raise ConfigError("mask_token_id must be a valid vocabulary id")
        if 0 <= self.ignore_label < self.vocab_size:
            raise ConfigError("ignore_label must lie outside the vocabulary range")


@dataclass
class MaskingAudit:
    """Per-call counters for the statistical checks and the audit log.

    A unit is one whole word in keyword mode and one token in random mode.
    """

    candidate_units: int = 0
    selected_units: int = 0
    masked_units: int = 0
    replaced_units: int = 0
    kept_units: int = 0
    candidate_tokens: int = 0
    selected_tokens: int = 0

    def merge(self, other: "MaskingAudit") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


@dataclass(frozen=True)
class CollatedBatch:
    """Post-masking token ids plus aligned supervision labels.

    ``labels[i][j]`` holds the original token id where position j was part
    of a selected unit and ``ignore_label`` everywhere else; non-selected
    positions keep their input ids bit-identical.
    """

    input_ids: tuple[tuple[int, ...], ...]
    labels: tuple[tuple[int, ...], ...]
    audit: MaskingAudit = field(default_factory=MaskingAudit)


def _apply_action(tokens: list[int], labels: list[int], span: range, action: float,
                  source: Sequence[int], config: MaskingConfig, rng: RandomSource,
                  audit: MaskingAudit) -> None:
    for pos in span:
        labels[pos] = source[pos]
    audit.selected_tokens += len(span)
    if action < MASK_ACTION_PROB:
        audit.masked_units += 1
        for pos in span:
            tokens[pos] = config.mask_token_id
    elif action < MASK_ACTION_PROB + REPLACE_ACTION_PROB:
        audit.replaced_units += 1
        for pos in span:
            tokens[pos] = rng.randrange(config.vocab_size)
    else:
        audit.kept_units += 1


def collate_keyword(batch: Sequence[TokenizedExample], keywords: KeywordSet,
                    config: MaskingConfig, rng: RandomSource) -> CollatedBatch:
    """Whole-word masking restricted to the keyword vocabulary."""
    if config.mode != "keyword":
        raise ConfigError(f"collate_keyword needs mode='keyword', got {config.mode!r}")
    all_ids = []
    all_labels = []
    audit = MaskingAudit()
    for example in batch:
        source = example.token_ids
        tokens = list(source)
        labels = [config.ignore_label] * len(source)
        for span, word in zip(example.word_spans, example.word_texts):
            if word.lower() not in keywords.words:
                continue
            audit.candidate_units += 1
            audit.candidate_tokens += span[1] - span[0]
            if rng.random() >= config.masking_probability:
                continue
            audit.selected_units += 1
            _apply_action(tokens, labels, range(*span), rng.random(),
                          source, config, rng, audit)
        all_ids.append(tuple(tokens))
        all_labels.append(tuple(labels))
    return CollatedBatch(input_ids=tuple(all_ids), labels=tuple(all_labels), audit=audit)


def collate_random(batch: Sequence[TokenizedExample], config: MaskingConfig,
                   rng: RandomSource) -> CollatedBatch:
    """Standard token-level MLM collation over non-special positions."""
    if config.mode != "random":
        raise ConfigError(f"collate_random needs mode='random', got {config.mode!r}")
    all_ids = []
    all_labels = []
    audit = MaskingAudit()
    for example in batch:
        source = example.token_ids
        tokens = list(source)
        labels = [config.ignore_label] * len(source)
        for pos in range(len(source)):
            if pos in example.special_positions:
                continue
            audit.candidate_units += 1
            audit.candidate_tokens += 1
            if rng.random() >= config.masking_probability:
                continue
            audit.selected_units += 1
            _apply_action(tokens, labels, range(pos, pos + 1), rng.random(),
                          source, config, rng, audit)
        all_ids.append(tuple(tokens))
        all_labels.append(tuple(labels))
    return CollatedBatch(input_ids=tuple(all_ids), labels=tuple(all_labels), audit=audit)


def masking_coverage(batch: Sequence[TokenizedExample], keywords: KeywordSet) -> float:
    """Share of non-special tokens that lie inside keyword word spans."""
    keyword_tokens = 0
    total = 0
    for example in batch:
        total += len(example.token_ids) - len(example.special_positions)
        for span, word in zip(example.word_spans, example.word_texts):
            if word.lower() in keywords.words:
                keyword_tokens += span[1] - span[0]
    return keyword_tokens / total if total else 0.0


class Collator:
    """Stateful wrapper binding a config, keywords, and a seeded RNG stream.

    Workers must not share instances; derive per-worker collators with
    ``for_worker`` (worker i uses seed + i).
    """

    def __init__(self, config: MaskingConfig, keywords: KeywordSet | None = None):
        if config.mode == "keyword":
            if keywords is None or not keywords.words:
                raise ConfigError("keyword mode requires a non-empty keyword set")
        self.config = config
        self.keywords = keywords
        self.rng = random.Random(config.seed)
        self.audit = MaskingAudit()

    def __call__(self, batch: Sequence[TokenizedExample]) -> CollatedBatch:
        if self.config.mode == "keyword":
            out = collate_keyword(batch, self.keywords, self.config, self.rng)
        else:
            out = collate_random(batch, self.config, self.rng)
        self.audit.merge(out.audit)
        return out

    def for_worker(self, worker_index: int) -> "Collator":
        cfg = replace(self.config, seed=self.config.seed + worker_index)
        return Collator(cfg, self.keywords)


def write_audit_csv(rows: Sequence[MaskingAudit], path) -> None:
    """Optional collator audit log: one CSV row of counters per batch."""
    import csv
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(MaskingAudit.__dataclass_fields__)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([getattr(row, name) for name in fields])
