"""Summary generation under a hard token-length contract.

A pluggable backend maps text to summary text; this module owns the length
bookkeeping: inputs are head-truncated to the input budget, outputs are
clipped so every summary is no longer than its (possibly truncated) source
and never exceeds the output budget. Token counts use the pipeline
tokenizer, the same unit the masking stage sees.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .corpus import CorpusStats, Document, TEXT_ENCODING
from .errors import BackendError, ConfigError
from .tokenizer import PipelineTokenizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SummarizerConfig:
    max_input_tokens: int = 1024
    max_output_tokens: int = 1024
    min_output_tokens: int = 1
    batch_size: int = 8

    def __post_init__(self):
        if self.max_input_tokens <= 0 or self.max_output_tokens <= 0:
            raise ConfigError("token budgets must be positive")
        if self.min_output_tokens <= 0 or self.min_output_tokens > self.max_output_tokens:
            raise ConfigError("need 0 < min_output_tokens <= max_output_tokens")
        if self.max_output_tokens > self.max_input_tokens:
            raise ConfigError("max_output_tokens must not exceed max_input_tokens")
        if self.batch_size <= 0:
            raise ConfigError("batch_size must be positive")


@dataclass(frozen=True)
class Summary:
    doc_id: str
    text: str
    token_count: int
    source_token_count: int


class SummarizationBackend(Protocol):
    """Maps texts to summary texts; deterministic for fixed inputs."""

    name: str

    def summarize_texts(self, texts: Sequence[str], config: SummarizerConfig) -> list[str]:
        ...


class TruncatingSummarizer:
    """Deterministic stub backend: keeps the first-k-token prefix of the text.

    ``keep_fraction`` sets k as a fraction of the source token count (at
    least one word is kept); ``keep_tokens`` pins k outright. Exists so the
    whole pipeline is verifiable without model weights.
    """

    def __init__(self, tokenizer: PipelineTokenizer, keep_fraction: float = 0.5,
                 keep_tokens: int | None = None):
        if keep_tokens is None and not 0.0 < keep_fraction <= 1.0:
            raise ConfigError("keep_fraction must be in (0, 1]")
        self.tokenizer = tokenizer
        self.keep_fraction = keep_fraction
        self.keep_tokens = keep_tokens
        self.name = (f"truncate:k={keep_tokens}" if keep_tokens is not None
                     else f"truncate:f={keep_fraction}")

    def summarize_texts(self, texts: Sequence[str], config: SummarizerConfig) -> list[str]:
        out = []
        for text in texts:
            if self.keep_tokens is not None:
                budget = self.keep_tokens
            else:
                total = self.tokenizer.count_tokens(text)
                budget = max(1, int(total * self.keep_fraction))
            out.append(self.tokenizer.truncate_to_tokens(text, budget))
        return out


def summarize_corpus(docs: Sequence[Document], backend: SummarizationBackend,
                     config: SummarizerConfig, tokenizer: PipelineTokenizer,
                     on_error: str = "fail") -> list[Summary]:
    """Summarize each document, order-aligned by doc_id.

    Inputs longer than ``max_input_tokens`` are head-truncated first; any
    backend output longer than min(max_output_tokens, source tokens) is
    clipped with a logged warning, so the length contract holds for every
    produced Summary. ``on_error`` is "fail" (raise, carrying the doc id) or
    "skip" (log and omit the document).
    """
    if not docs:
        raise ValueError("summarize_corpus needs a non-empty document list")
    if on_error not in ("fail", "skip"):
        raise ConfigError(f"on_error must be 'fail' or 'skip', got {on_error!r}")

    prepared: list[tuple[Document, str, int]] = []
    for doc in docs:
        text = doc.text
        count = tokenizer.count_tokens(text)
        if count > config.max_input_tokens:
            text = tokenizer.truncate_to_tokens(text, config.max_input_tokens)
            count = tokenizer.count_tokens(text)
        prepared.append((doc, text, count))

    summaries: list[Summary] = []
    for start in range(0, len(prepared), config.batch_size):
        chunk = prepared[start : start + config.batch_size]
        try:
            outputs = backend.summarize_texts([text for _, text, _ in chunk], config)
            if len(outputs) != len(chunk):
                raise BackendError(chunk[0][0].id, "backend returned a misaligned batch")
        except BackendError:
            raise
        except Exception:
            # Retry one-by-one so the failing document can be identified.
            outputs = []
            for doc, text, _ in chunk:
                try:
                    outputs.append(backend.summarize_texts([text], config)[0])
                except Exception as exc:
                    if on_error == "fail":
                        raise BackendError(doc.id, str(exc)) from exc
                    logger.warning("skipping document %s: backend failed (%s)", doc.id, exc)
                    outputs.append(None)
        for (doc, _, source_count), summary_text in zip(chunk, outputs):
            if summary_text is None:
                continue
            limit = min(config.max_output_tokens, source_count)
            out_count = tokenizer.count_tokens(summary_text)
            if out_count > limit:
                logger.warning(
                    "clipping summary of %s from %d to %d tokens", doc.id, out_count, limit
                )
                summary_text = tokenizer.truncate_to_tokens(summary_text, limit)
                out_count = tokenizer.count_tokens(summary_text)
            summaries.append(Summary(
                doc_id=doc.id,
                text=summary_text,
                token_count=out_count,
                source_token_count=source_count,
            ))
    return summaries


def compaction_ratio(originals: CorpusStats, summaries: CorpusStats) -> float:
    """summaries.byte_size / originals.byte_size, in (0, 1] for real corpora."""
    if originals.byte_size <= 0:
        raise ValueError("original corpus has zero byte size")
    return summaries.byte_size / originals.byte_size


def save_summaries(summaries: Sequence[Summary], path: Path | str,
                   config: SummarizerConfig | None = None,
                   backend_name: str | None = None) -> None:
    """Persist summaries as line-delimited records plus a sidecar meta file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=TEXT_ENCODING) as handle:
        for s in summaries:
            handle.write(json.dumps({
                "id": s.doc_id,
                "text": s.text,
                "token_count": s.token_count,
                "source_token_count": s.source_token_count,
            }, ensure_ascii=False) + "\n")
    if config is not None or backend_name is not None:
        meta = {
            "backend": backend_name,
            "max_input_tokens": config.max_input_tokens if config else None,
            "max_output_tokens": config.max_output_tokens if config else None,
            "min_output_tokens": config.min_output_tokens if config else None,
        }
        path.with_suffix(path.suffix + ".meta.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding=TEXT_ENCODING
        )


def load_summaries(path: Path | str) -> list[Summary]:
    summaries = []
    for line in Path(path).read_text(encoding=TEXT_ENCODING).splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        summaries.append(Summary(
            doc_id=record["id"],
            text=record["text"],
            token_count=record["token_count"],
            source_token_count=record["source_token_count"],
        ))
    return summaries
