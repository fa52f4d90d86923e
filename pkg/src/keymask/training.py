"""Continued MLM pretraining, classification fine-tuning, and evaluation.

Pretraining packs whole words into fixed-size blocks (so wall-clock tracks
corpus token count), collates with either masking mode, and optimizes with
decoupled weight decay under a constant or linear-decay schedule. Keyword
masking pairs with the constant schedule; overriding that pairing requires
an explicit flag. Fine-tuning selects the epoch checkpoint with the highest
validation F1 (ties go to the earliest epoch) and evaluates it once on test.
"""

import csv
import hashlib
import json
import logging
import random
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import torch

from .corpus import CorpusSplits, Document
from .errors import ConfigError, IntegrityError
from .filtering import KeywordSet
from .masking import Collator, CollatedBatch, MaskingConfig
from .models import SequenceClassifier, TinyEncoder, mlm_loss
from .summarize import Summary
from .tokenizer import PipelineTokenizer, TokenizedExample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PretrainConfig:
    epochs: int = 2
    batch_size: int = 16
    lr_schedule: str = "constant"
    base_lr: float = 5e-5
    collator_mode: str = "keyword"
    corpus_variant: str = "whole"
    seed: int = 0
    block_tokens: int = 128
    masking_probability: float | None = None
    weight_decay: float = 0.01
    force_schedule: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1 or self.block_tokens < 8:
            raise ConfigError("batch_size must be >= 1 and block_tokens >= 8")
        if self.lr_schedule not in ("constant", "linear_decay"):
            raise ConfigError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.collator_mode not in ("keyword", "random"):
            raise ConfigError(f"unknown collator_mode {self.collator_mode!r}")
        if self.corpus_variant not in ("whole", "summary"):
            raise ConfigError(f"unknown corpus_variant {self.corpus_variant!r}")
        if self.base_lr <= 0:
            raise ConfigError("base_lr must be positive")
        if (self.collator_mode == "keyword" and self.lr_schedule != "constant"
                and not self.force_schedule):
            raise ConfigError(
                "keyword masking pairs with the constant schedule; "
                "set force_schedule=True to override"
            )


@dataclass(frozen=True)
class FinetuneConfig:
    num_labels: int
    lr: float = 2e-5
    weight_decay: float = 0.01
    max_epochs: int = 4
    selection_metric: str = "f1"
    f1_average: str = "macro"
    pooling: str = "first"
    batch_size: int = 8
    max_seq_tokens: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.num_labels < 2:
            raise ConfigError("num_labels must be >= 2")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.selection_metric != "f1":
            raise ConfigError("selection_metric must be 'f1'")
        if self.f1_average not in ("macro", "micro", "weighted"):
            raise ConfigError(f"unknown f1_average {self.f1_average!r}")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError("lr must be positive and weight_decay non-negative")


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    f1: float


@dataclass
class TrainedRun:
    pretraining_minutes: float = 0.0
    loss_curve: list[tuple[int, float]] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    checkpoint_path: str | None = None
    skipped_batches: int = 0
    batch_digest: str | None = None


def pack_blocks(texts: Sequence[str], tokenizer: PipelineTokenizer,
                block_tokens: int) -> list[TokenizedExample]:
    """Pack whole words from consecutive texts into fixed-size blocks.

    Words are never split across blocks; a word longer than a block is
    dropped with a warning. Block size counts content tokens (delimiters
    excluded), so the number of blocks tracks the corpus token count.
    """
    vocab = tokenizer.vocab
    blocks: list[TokenizedExample] = []
    cur_ids: list[int] = [vocab.cls_id]
    cur_spans: list[tuple[int, int]] = []
    cur_words: list[str] = []
    used = 0

    def flush():
        nonlocal cur_ids, cur_spans, cur_words, used
        if not cur_spans:
            return
        cur_ids.append(vocab.sep_id)
        blocks.append(TokenizedExample(
            token_ids=tuple(cur_ids),
            word_spans=tuple(cur_spans),
            word_texts=tuple(cur_words),
            special_positions=frozenset({0, len(cur_ids) - 1}),
        ))
        cur_ids = [vocab.cls_id]
        cur_spans = []
        cur_words = []
        used = 0

    for text in texts:
        for word in tokenizer.words(text):
            pieces = vocab.encode_word(word)
            if len(pieces) > block_tokens:
                logger.warning("dropping word longer than a block: %r", word[:32])
                continue
            if used + len(pieces) > block_tokens:
                flush()
            start = len(cur_ids)
            cur_ids.extend(pieces)
            cur_spans.append((start, start + len(pieces)))
            cur_words.append(word)
            used += len(pieces)
    flush()
    return blocks


def batch_to_tensors(batch: CollatedBatch, pad_id: int,
                     ignore_label: int) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pad a ragged collated batch into (input_ids, labels, attention_mask)."""
    width = max(len(ids) for ids in batch.input_ids)
    size = len(batch.input_ids)
    input_ids = torch.full((size, width), pad_id, dtype=torch.long)
    labels = torch.full((size, width), ignore_label, dtype=torch.long)
    attention = torch.zeros((size, width), dtype=torch.long)
    for i, (ids, labs) in enumerate(zip(batch.input_ids, batch.labels)):
        input_ids[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        labels[i, : len(labs)] = torch.tensor(labs, dtype=torch.long)
        attention[i, : len(ids)] = 1
    return input_ids, labels, attention


def _digest_batch(hasher, input_ids: torch.Tensor, labels: torch.Tensor) -> None:
    hasher.update(input_ids.numpy().tobytes())
    hasher.update(labels.numpy().tobytes())


def _make_lr_lambda(schedule: str, total_steps: int):
    if schedule == "constant":
        return lambda step: 1.0
    # Linear decay to zero over the total step budget, no warmup.
    return lambda step: max(0.0, 1.0 - step / max(1, total_steps))


def pretrain(model: TinyEncoder, corpus: Sequence[Document | Summary],
             keywords: KeywordSet | None, config: PretrainConfig,
             tokenizer: PipelineTokenizer, run_dir: Path | str | None = None) -> TrainedRun:
    """Continued MLM pretraining with the configured collator.

    Runs exactly ``epochs`` passes over the packed corpus; loss is computed
    only over positions with real labels, and batches with zero supervised
    positions are skipped (counted, not an error). Wall-clock is measured
    around the training loop only. Deterministic for a fixed seed.
    """
    if config.collator_mode == "keyword" and (keywords is None or not keywords.words):
        raise ConfigError("keyword pretraining requires a non-empty keyword set")
    if not corpus:
        raise ValueError("pretraining corpus is empty")

    blocks = pack_blocks([doc.text for doc in corpus], tokenizer, config.block_tokens)
    if not blocks:
        raise ValueError("corpus packed into zero blocks")

    masking = MaskingConfig(
        mode=config.collator_mode,
        mask_token_id=tokenizer.vocab.mask_id,
        vocab_size=tokenizer.vocab_size,
        masking_probability=config.masking_probability,
        seed=config.seed,
    )
    collator = Collator(masking, keywords if config.collator_mode == "keyword" else None)

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.base_lr,
                                  weight_decay=config.weight_decay)
    steps_per_epoch = (len(blocks) + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, _make_lr_lambda(config.lr_schedule, total_steps))

    run = TrainedRun(config=asdict(config))
    hasher = hashlib.sha256()
    model.train()
    step = 0
    started = time.perf_counter()
    for epoch in range(config.epochs):
        order = list(range(len(blocks)))
        random.Random(config.seed * 1_000_003 + epoch).shuffle(order)
        for start in range(0, len(order), config.batch_size):
            examples = [blocks[i] for i in order[start : start + config.batch_size]]
            collated = collator(examples)
            input_ids, labels, attention = batch_to_tensors(
                collated, tokenizer.vocab.pad_id, masking.ignore_label)
            _digest_batch(hasher, input_ids, labels)
            if not (labels != masking.ignore_label).any():
                run.skipped_batches += 1
                continue
            logits = model.mlm_logits(input_ids, attention)
            loss = mlm_loss(logits, labels, masking.ignore_label)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            step += 1
            run.loss_curve.append((step, float(loss.detach())))
    run.pretraining_minutes = (time.perf_counter() - started) / 60.0
    run.batch_digest = hasher.hexdigest()
    model.eval()

    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        checkpoint = run_dir / "pretrained.pt"
        torch.save(model.state_dict(), checkpoint)
        run.checkpoint_path = str(checkpoint)
        _write_loss_curve(run.loss_curve, run_dir / "pretrain_loss.csv")
        (run_dir / "pretrain_config.json").write_text(
            json.dumps(run.config, indent=2) + "\n", encoding="utf-8")
    return run


def _write_loss_curve(curve: Sequence[tuple[int, float]], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "loss"])
        writer.writerows(curve)


def _encode_labeled(docs: Sequence[Document], tokenizer: PipelineTokenizer,
                    label_ids: dict[str, int], max_tokens: int):
    examples = []
    targets = []
    for doc in docs:
        if doc.label is None:
            raise IntegrityError(f"document {doc.id!r} is missing a label")
        if doc.label not in label_ids:
            raise IntegrityError(f"label {doc.label!r} outside the trained label set")
        examples.append(tokenizer.encode(doc.text, max_tokens=max_tokens))
        targets.append(label_ids[doc.label])
    return examples, targets


def _classification_batches(examples, targets, batch_size: int, pad_id: int,
                            order: Sequence[int] | None = None):
    indices = list(order) if order is not None else list(range(len(examples)))
    for start in range(0, len(indices), batch_size):
        chunk = indices[start : start + batch_size]
        width = max(len(examples[i].token_ids) for i in chunk)
        input_ids = torch.full((len(chunk), width), pad_id, dtype=torch.long)
        attention = torch.zeros((len(chunk), width), dtype=torch.long)
        for row, i in enumerate(chunk):
            ids = examples[i].token_ids
            input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            attention[row, : len(ids)] = 1
        yield input_ids, attention, torch.tensor([targets[i] for i in chunk])


def accuracy_and_f1(y_true: Sequence[int], y_pred: Sequence[int],
                    num_labels: int, average: str = "macro") -> EvalMetrics:
    """Exact-match accuracy and averaged F1 over the label set.

    Classes absent from both truth and predictions contribute an F1 of 0
    under macro averaging (they are still part of the trained label set).
    """
    if len(y_true) != len(y_pred) or not y_true:
        raise ValueError("need equally sized, non-empty prediction lists")
    correct = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    accuracy = correct / len(y_true)

    tp = Counter()
    fp = Counter()
    fn = Counter()
    for t, p in zip(y_true, y_pred):
        if t == p:
            tp[t] += 1
        else:
            fp[p] += 1
            fn[t] += 1

    if average == "micro":
        tp_all = sum(tp.values())
        fp_all = sum(fp.values())
        fn_all = sum(fn.values())
        precision = tp_all / (tp_all + fp_all) if tp_all + fp_all else 0.0
        recall = tp_all / (tp_all + fn_all) if tp_all + fn_all else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return EvalMetrics(accuracy=accuracy, f1=f1)

    per_class = []
    support = []
    for label in range(num_labels):
        denom_p = tp[label] + fp[label]
        denom_r = tp[label] + fn[label]
        precision = tp[label] / denom_p if denom_p else 0.0
        recall = tp[label] / denom_r if denom_r else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(f1)
        support.append(denom_r)

    if average == "weighted":
        total = sum(support)
        f1 = (sum(f * s for f, s in zip(per_class, support)) / total) if total else 0.0
    else:
        f1 = sum(per_class) / num_labels
    return EvalMetrics(accuracy=accuracy, f1=f1)


def evaluate(classifier: SequenceClassifier, docs: Sequence[Document],
             label_ids: dict[str, int], tokenizer: PipelineTokenizer,
             config: FinetuneConfig) -> EvalMetrics:
    """Accuracy and averaged F1 of the classifier on labeled documents."""
    if not docs:
        raise ValueError("evaluate needs a non-empty document list")
    examples, targets = _encode_labeled(docs, tokenizer, label_ids, config.max_seq_tokens)
    classifier.eval()
    predictions: list[int] = []
    with torch.no_grad():
        for input_ids, attention, _ in _classification_batches(
                examples, targets, config.batch_size, tokenizer.vocab.pad_id):
            logits = classifier(input_ids, attention)
            predictions.extend(logits.argmax(dim=-1).tolist())
    return accuracy_and_f1(targets, predictions, len(label_ids), config.f1_average)


def label_vocabulary(docs: Sequence[Document]) -> dict[str, int]:
    """Sorted label -> index mapping over the training documents."""
    labels = sorted({doc.label for doc in docs if doc.label is not None})
    return {label: i for i, label in enumerate(labels)}


def finetune(model: TinyEncoder, splits: CorpusSplits, config: FinetuneConfig,
             tokenizer: PipelineTokenizer,
             run_dir: Path | str | None = None) -> tuple[TrainedRun, SequenceClassifier,
                                                         EvalMetrics, EvalMetrics]:
    """Fine-tune a classifier, select by validation F1, evaluate once on test.

    Returns (run record, best classifier, validation metrics of the selected
    epoch, test metrics). Ties in validation F1 resolve to the earliest
    epoch.
    """
    if not splits.train or not splits.validation:
        raise ValueError("fine-tuning needs non-empty train and validation splits")
    label_ids = label_vocabulary(splits.train)
    if len(label_ids) != config.num_labels:
        raise IntegrityError(
            f"config says {config.num_labels} labels but train split has {len(label_ids)}"
        )

    torch.manual_seed(config.seed)
    classifier = SequenceClassifier(model, config.num_labels, pooling=config.pooling)
    optimizer = torch.optim.AdamW(classifier.parameters(), lr=config.lr,
                                  weight_decay=config.weight_decay)
    loss_fn = torch.nn.CrossEntropyLoss()

    train_examples, train_targets = _encode_labeled(
        splits.train, tokenizer, label_ids, config.max_seq_tokens)

    run = TrainedRun(config=asdict(config))
    best_f1 = -1.0
    best_state = None
    best_valid = None
    step = 0
    for epoch in range(config.max_epochs):
        classifier.train()
        order = list(range(len(train_examples)))
        random.Random(config.seed * 1_000_003 + epoch).shuffle(order)
        for input_ids, attention, targets in _classification_batches(
                train_examples, train_targets, config.batch_size,
                tokenizer.vocab.pad_id, order):
            logits = classifier(input_ids, attention)
            loss = loss_fn(logits, targets)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1
            run.loss_curve.append((step, float(loss.detach())))
        valid = evaluate(classifier, splits.validation, label_ids, tokenizer, config)
        logger.info("epoch %d: validation acc %.4f f1 %.4f", epoch + 1,
                    valid.accuracy, valid.f1)
        if valid.f1 > best_f1:
            best_f1 = valid.f1
            best_valid = valid
            best_state = {k: v.detach().clone() for k, v in classifier.state_dict().items()}

    classifier.load_state_dict(best_state)
    test = (evaluate(classifier, splits.test, label_ids, tokenizer, config)
            if splits.test else EvalMetrics(accuracy=float("nan"), f1=float("nan")))

    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        checkpoint = run_dir / "finetuned.pt"
        torch.save(classifier.state_dict(), checkpoint)
        run.checkpoint_path = str(checkpoint)
        _write_loss_curve(run.loss_curve, run_dir / "finetune_loss.csv")
        (run_dir / "finetune_config.json").write_text(
            json.dumps(run.config, indent=2) + "\n", encoding="utf-8")
    return run, classifier, best_valid, test
