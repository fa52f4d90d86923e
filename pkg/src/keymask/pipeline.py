"""End-to-end orchestration of the five-way experiment matrix.

Every stage reads and writes artifacts under one output directory, so
stages can run as separate commands or all at once (``run_matrix``). All
randomness flows from one master seed; per-stage seeds are derived by
hashing the stage name and logged next to the artifacts, and a complete
config snapshot is written so any run can be reproduced bit for bit.

Matrix rows:

    none            fine-tune only
    random_whole    random masking on the whole unlabeled data
    random_summary  random masking on the summaries
    keyword_whole   keyword masking, keywords from the whole data
    keyword_summary keyword masking, keywords from the summaries
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import torch
import yaml

from . import corpus as corpus_io
from .corpus import CorpusSplits, corpus_stats
from .errors import ConfigError, MissingArtifactError
from .extraction import (ExtractionConfig, HashEmbeddingBackend, extract_keywords,
                         save_doc_keywords)
from .filtering import (apply_cutoff, build_frequency_table, frequency_curve,
                        load_frequency_curve, load_frequency_table, load_keyword_set,
                        save_frequency_curve, save_frequency_table, save_keyword_set,
                        suggest_cutoff)
from .models import EncoderConfig, TinyEncoder, build_encoder
from .reporting import (ROW_ORDER, RunReport, build_table, emit_frequency_figure,
                        verify_report_consistency, write_reports)
from .summarize import (SummarizerConfig, TruncatingSummarizer, compaction_ratio,
                        load_summaries, save_summaries, summarize_corpus)
from .tokenizer import PipelineTokenizer, SubwordVocab
from .training import FinetuneConfig, PretrainConfig, finetune, pretrain

logger = logging.getLogger(__name__)

KEYWORD_SOURCES = ("summaries", "whole_data")

ROW_SPECS = {
    "none": {"data": "none", "method": "none"},
    "random_whole": {"data": "whole", "method": "random"},
    "random_summary": {"data": "summary", "method": "random"},
    "keyword_whole": {"data": "whole", "method": "keyword"},
    "keyword_summary": {"data": "summary", "method": "keyword"},
}


def derive_seed(master_seed: int, stage: str) -> int:
    """Stable 31-bit per-stage seed derived from the master seed."""
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


@dataclass(frozen=True)
class PretrainSettings:
    epochs: int = 2
    batch_size: int = 16
    base_lr: float = 5e-5
    block_tokens: int = 128
    weight_decay: float = 0.01
    keyword_probability: float = 0.75
    random_probability: float = 0.15

    def to_config(self, mode: str, variant: str, seed: int) -> PretrainConfig:
        return PretrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr_schedule="constant" if mode == "keyword" else "linear_decay",
            base_lr=self.base_lr,
            collator_mode=mode,
            corpus_variant=variant,
            seed=seed,
            block_tokens=self.block_tokens,
            masking_probability=(self.keyword_probability if mode == "keyword"
                                 else self.random_probability),
            weight_decay=self.weight_decay,
        )


@dataclass(frozen=True)
class FinetuneSettings:
    lr: float = 2e-5
    weight_decay: float = 0.01
    max_epochs: int = 4
    f1_average: str = "macro"
    pooling: str = "first"
    batch_size: int = 8
    max_seq_tokens: int = 128

    def to_config(self, num_labels: int, seed: int) -> FinetuneConfig:
        return FinetuneConfig(
            num_labels=num_labels,
            lr=self.lr,
            weight_decay=self.weight_decay,
            max_epochs=self.max_epochs,
            f1_average=self.f1_average,
            pooling=self.pooling,
            batch_size=self.batch_size,
            max_seq_tokens=self.max_seq_tokens,
            seed=seed,
        )


@dataclass(frozen=True)
class PipelineConfig:
    corpus_path: str
    corpus_format: str = "jsonl"
    output_dir: str = "keymask-out"
    master_seed: int = 13
    rows: tuple[str, ...] = ROW_ORDER
    model_id: str = "tiny-encoder"
    hidden_size: int = 128
    num_layers: int = 2
    num_heads: int = 4
    max_positions: int = 512
    max_vocab: int = 4000
    lowercase: bool = True
    summarizer_backend: str = "stub"
    stub_keep_fraction: float = 0.5
    summarizer: SummarizerConfig = field(default_factory=SummarizerConfig)
    embedding_backend: str = "hash"
    embedding_dim: int = 16
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    cutoff_summaries: int | str = "auto"
    cutoff_whole: int | str = "auto"
    pretrain: PretrainSettings = field(default_factory=PretrainSettings)
    finetune: FinetuneSettings = field(default_factory=FinetuneSettings)

    def __post_init__(self):
        unknown = [row for row in self.rows if row not in ROW_SPECS]
        if unknown:
            raise ConfigError(f"unknown matrix rows {unknown}; valid: {list(ROW_SPECS)}")
        if not self.rows:
            raise ConfigError("row selection is empty")
        for cutoff in (self.cutoff_summaries, self.cutoff_whole):
            if cutoff != "auto" and (not isinstance(cutoff, int) or cutoff < 1):
                raise ConfigError(f"cut-off must be 'auto' or an integer >= 1, got {cutoff!r}")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["rows"] = list(self.rows)
        out["extraction"]["ngram_range"] = list(self.extraction.ngram_range)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        data = dict(raw)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "rows" in data:
            data["rows"] = tuple(data["rows"])
        if "summarizer" in data and isinstance(data["summarizer"], dict):
            data["summarizer"] = SummarizerConfig(**data["summarizer"])
        if "extraction" in data and isinstance(data["extraction"], dict):
            section = dict(data["extraction"])
            if "ngram_range" in section:
                section["ngram_range"] = tuple(section["ngram_range"])
            data["extraction"] = ExtractionConfig(**section)
        if "pretrain" in data and isinstance(data["pretrain"], dict):
            data["pretrain"] = PretrainSettings(**data["pretrain"])
        if "finetune" in data and isinstance(data["finetune"], dict):
            data["finetune"] = FinetuneSettings(**data["finetune"])
        return cls(**data)

    @classmethod
    def from_yaml(cls, path: Path | str) -> "PipelineConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} does not hold a mapping")
        return cls.from_dict(raw)

    def save_yaml(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=True),
                        encoding="utf-8")


class Workspace:
    """Artifact paths and loaders for one pipeline output directory."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.root = Path(config.output_dir)

    # paths
    @property
    def corpus_file(self) -> Path:
        return self.root / "corpus" / "corpus.jsonl"

    @property
    def whole_stats_file(self) -> Path:
        return self.root / "corpus" / "stats_whole.kv"

    @property
    def vocab_file(self) -> Path:
        return self.root / "tokenizer" / "vocab.txt"

    @property
    def summaries_file(self) -> Path:
        return self.root / "summaries" / "summaries.jsonl"

    @property
    def summary_stats_file(self) -> Path:
        return self.root / "summaries" / "stats_summary.kv"

    @property
    def compaction_file(self) -> Path:
        return self.root / "summaries" / "compaction.kv"

    def keywords_dir(self, source: str) -> Path:
        return self.root / "keywords" / source

    def run_dir(self, row_id: str) -> Path:
        return self.root / "runs" / row_id

    @property
    def encoder_init_file(self) -> Path:
        return self.root / "runs" / "encoder_init.pt"

    @property
    def report_dir(self) -> Path:
        return self.root / "report"

    @property
    def seeds_file(self) -> Path:
        return self.root / "seeds.json"

    # bookkeeping
    def record_seed(self, stage: str) -> int:
        seed = derive_seed(self.config.master_seed, stage)
        seeds = {}
        if self.seeds_file.exists():
            seeds = json.loads(self.seeds_file.read_text(encoding="utf-8"))
        seeds[stage] = seed
        self.seeds_file.parent.mkdir(parents=True, exist_ok=True)
        self.seeds_file.write_text(json.dumps(seeds, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
        return seed

    def snapshot_config(self) -> None:
        self.config.save_yaml(self.root / "config.snapshot.yaml")

    # loaders with actionable errors
    def _require(self, path: Path, producer: str) -> Path:
        if not path.exists():
            raise MissingArtifactError(
                f"missing {path}; run `keymask {producer}` first")
        return path

    def load_splits(self) -> CorpusSplits:
        return corpus_io.load_corpus(self._require(self.corpus_file, "ingest"))

    def load_tokenizer(self) -> PipelineTokenizer:
        vocab = SubwordVocab.load(self._require(self.vocab_file, "ingest"))
        return PipelineTokenizer(vocab, lowercase=self.config.lowercase)

    def load_summaries(self):
        return load_summaries(self._require(self.summaries_file, "summarize"))

    def load_keywords(self, source: str):
        path = self.keywords_dir(source) / "keywords.txt"
        return load_keyword_set(self._require(path, f"filter --source {source}"))


def _summarization_backend(config: PipelineConfig, tokenizer: PipelineTokenizer):
    name = config.summarizer_backend
    if name == "stub":
        return TruncatingSummarizer(tokenizer, keep_fraction=config.stub_keep_fraction)
    if name.startswith("hf:"):
        from .hf import TransformersSummarizationBackend
        return TransformersSummarizationBackend(name[3:])
    raise ConfigError(f"unknown summarizer backend {name!r} (use 'stub' or 'hf:<model>')")


def _embedding_backend(config: PipelineConfig, seed: int):
    name = config.embedding_backend
    if name == "hash":
        return HashEmbeddingBackend(dim=config.embedding_dim, seed=seed)
    if name.startswith("hf:"):
        from .hf import TransformersEmbeddingBackend
        return TransformersEmbeddingBackend(name[3:])
    raise ConfigError(f"unknown embedding backend {name!r} (use 'hash' or 'hf:<model>')")


# -- stages ------------------------------------------------------------------


def run_ingest(config: PipelineConfig) -> CorpusSplits:
    """Load, validate, and canonicalize the corpus; build the tokenizer."""
    ws = Workspace(config)
    splits = corpus_io.load_corpus(config.corpus_path, config.corpus_format)
    corpus_io.save_corpus(splits, ws.corpus_file)
    corpus_io.write_stats(corpus_stats(list(splits.unlabeled)), ws.whole_stats_file)

    vocab = SubwordVocab.build(
        (doc.text for doc in splits.all_documents()),
        max_size=config.max_vocab,
        lowercase=config.lowercase,
    )
    ws.vocab_file.parent.mkdir(parents=True, exist_ok=True)
    vocab.save(ws.vocab_file)
    ws.snapshot_config()
    logger.info("ingested corpus: train/valid/test/unlabeled = %s, vocab %d",
                splits.counts, len(vocab))
    return splits


def run_summarize(config: PipelineConfig) -> float:
    """Summarize the unlabeled pool; persist summaries, stats, and the
    compaction ratio. Returns the ratio."""
    ws = Workspace(config)
    splits = ws.load_splits()
    if not splits.unlabeled:
        raise ConfigError("corpus has no unlabeled documents to summarize")
    tokenizer = ws.load_tokenizer()
    backend = _summarization_backend(config, tokenizer)
    ws.record_seed("summarize")
    summaries = summarize_corpus(list(splits.unlabeled), backend,
                                 config.summarizer, tokenizer)
    save_summaries(summaries, ws.summaries_file, config.summarizer, backend.name)

    originals = corpus_stats(list(splits.unlabeled))
    compacted = corpus_stats([corpus_io.Document(id=s.doc_id, text=s.text)
                              for s in summaries])
    corpus_io.write_stats(compacted, ws.summary_stats_file)
    ratio = compaction_ratio(originals, compacted)
    ws.compaction_file.write_text(
        f"original_bytes={originals.byte_size}\n"
        f"summary_bytes={compacted.byte_size}\n"
        f"compaction_ratio={ratio!r}\n",
        encoding="utf-8")
    ws.snapshot_config()
    logger.info("summarized %d documents, compaction ratio %.4f", len(summaries), ratio)
    return ratio


def run_extract(config: PipelineConfig, source: str) -> None:
    """Extract per-document keywords from summaries or the whole data and
    persist the document keywords, frequency table, and curve CSV."""
    if source not in KEYWORD_SOURCES:
        raise ConfigError(f"source must be one of {KEYWORD_SOURCES}")
    ws = Workspace(config)
    if source == "summaries":
        texts = [(s.doc_id, s.text) for s in ws.load_summaries()]
    else:
        texts = [(d.id, d.text) for d in ws.load_splits().unlabeled]
    # one embedding seed for both sources: identical inputs must produce
    # identical keyword sets regardless of which source they came from
    seed = ws.record_seed("extract")
    backend = _embedding_backend(config, seed)
    doc_keywords = extract_keywords(texts, backend, config.extraction)
    out = ws.keywords_dir(source)
    save_doc_keywords(doc_keywords, out / "doc_keywords.jsonl")
    table = build_frequency_table(doc_keywords)
    save_frequency_table(table, out / "frequency.tsv")
    save_frequency_curve(frequency_curve(table, tail=50), out / "curve.csv")
    (out / "meta.json").write_text(json.dumps({
        "backend": backend.name,
        "stopword_list_id": config.extraction.stopword_list_id,
        "max_keywords_per_doc": config.extraction.max_keywords_per_doc,
        "diversity": config.extraction.diversity,
        "use_mmr": config.extraction.use_mmr,
    }, indent=2) + "\n", encoding="utf-8")
    ws.snapshot_config()
    logger.info("extracted keywords from %s: %d documents, %d distinct words",
                source, len(texts), len(table))


def run_filter(config: PipelineConfig, source: str) -> int:
    """Apply the frequency cut-off for one keyword source; returns the
    threshold actually used ('auto' resolves via the curve heuristic)."""
    if source not in KEYWORD_SOURCES:
        raise ConfigError(f"source must be one of {KEYWORD_SOURCES}")
    ws = Workspace(config)
    table_path = ws.keywords_dir(source) / "frequency.tsv"
    if not table_path.exists():
        raise MissingArtifactError(
            f"missing {table_path}; run `keymask extract --source {source}` first")
    table = load_frequency_table(table_path)
    configured = (config.cutoff_summaries if source == "summaries"
                  else config.cutoff_whole)
    threshold = suggest_cutoff(table) if configured == "auto" else int(configured)
    keywords = apply_cutoff(table, threshold, source=source)
    save_keyword_set(keywords, ws.keywords_dir(source) / "keywords.txt")
    ws.snapshot_config()
    logger.info("filtered %s keywords at threshold %d: %d words kept",
                source, threshold, len(keywords))
    return threshold


def _load_init_encoder(ws: Workspace, tokenizer: PipelineTokenizer) -> TinyEncoder:
    """Shared randomly initialized encoder: every matrix row starts from the
    same weights so rows differ only by their pretraining."""
    config = ws.config
    enc_config = EncoderConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=config.hidden_size,
        num_layers=config.num_layers,
        num_heads=config.num_heads,
        max_positions=config.max_positions,
    )
    if not ws.encoder_init_file.exists():
        seed = ws.record_seed("encoder_init")
        encoder = build_encoder(enc_config, seed)
        ws.encoder_init_file.parent.mkdir(parents=True, exist_ok=True)
        torch.save(encoder.state_dict(), ws.encoder_init_file)
        return encoder
    encoder = TinyEncoder(enc_config)
    encoder.load_state_dict(torch.load(ws.encoder_init_file, weights_only=True))
    return encoder


def run_pretrain_row(config: PipelineConfig, row_id: str) -> None:
    """Run the pretraining phase of one matrix row."""
    spec = ROW_SPECS[row_id]
    if spec["method"] == "none":
        raise ConfigError("row 'none' has no pretraining phase")
    ws = Workspace(config)
    tokenizer = ws.load_tokenizer()
    encoder = _load_init_encoder(ws, tokenizer)

    if spec["data"] == "summary":
        docs = ws.load_summaries()
    else:
        docs = list(ws.load_splits().unlabeled)
    keywords = None
    if spec["method"] == "keyword":
        source = "summaries" if spec["data"] == "summary" else "whole_data"
        keywords = ws.load_keywords(source)

    seed = ws.record_seed(f"pretrain:{row_id}")
    pt_config = config.pretrain.to_config(spec["method"], spec["data"], seed)
    run = pretrain(encoder, docs, keywords, pt_config, tokenizer,
                   run_dir=ws.run_dir(row_id))
    pretrain_meta = {
        "pretraining_minutes": run.pretraining_minutes,
        "skipped_batches": run.skipped_batches,
        "batch_digest": run.batch_digest,
        "steps": len(run.loss_curve),
        "final_loss": run.loss_curve[-1][1] if run.loss_curve else None,
    }
    (ws.run_dir(row_id) / "pretrain_meta.json").write_text(
        json.dumps(pretrain_meta, indent=2) + "\n", encoding="utf-8")
    ws.snapshot_config()


def run_finetune_row(config: PipelineConfig, row_id: str) -> RunReport:
    """Fine-tune one matrix row (loading its pretrained weights if any) and
    write the row's raw report record."""
    spec = ROW_SPECS[row_id]
    ws = Workspace(config)
    splits = ws.load_splits()
    tokenizer = ws.load_tokenizer()
    encoder = _load_init_encoder(ws, tokenizer)

    pretrain_minutes = 0.0
    batch_digest = None
    if spec["method"] != "none":
        checkpoint = ws.run_dir(row_id) / "pretrained.pt"
        if not checkpoint.exists():
            raise MissingArtifactError(
                f"missing {checkpoint}; run `keymask pretrain --row {row_id}` first")
        encoder.load_state_dict(torch.load(checkpoint, weights_only=True))
        meta = json.loads((ws.run_dir(row_id) / "pretrain_meta.json")
                          .read_text(encoding="utf-8"))
        pretrain_minutes = meta["pretraining_minutes"]
        batch_digest = meta.get("batch_digest")

    from .training import label_vocabulary
    num_labels = len(label_vocabulary(splits.train))
    seed = ws.record_seed(f"finetune:{row_id}")
    ft_config = config.finetune.to_config(num_labels, seed)
    _, _, valid, test = finetune(encoder, splits, ft_config, tokenizer,
                                 run_dir=ws.run_dir(row_id))

    record = {
        "row_id": row_id,
        "model_id": config.model_id,
        "pretraining_data": spec["data"],
        "pretraining_method": spec["method"],
        "valid_acc": valid.accuracy,
        "valid_f1": valid.f1,
        "test_acc": test.accuracy,
        "test_f1": test.f1,
        "pretraining_minutes": pretrain_minutes,
        "pretrain_batch_digest": batch_digest,
    }
    run_dir = ws.run_dir(row_id)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "report.json").write_text(json.dumps(record, indent=2) + "\n",
                                         encoding="utf-8")
    (run_dir / "metrics.kv").write_text(
        "".join(f"{key}={value!r}\n" if isinstance(value, float)
                else f"{key}={value}\n"
                for key, value in record.items() if key != "pretrain_batch_digest"),
        encoding="utf-8")
    ws.snapshot_config()
    return _report_from_record(record)


def _report_from_record(record: dict) -> RunReport:
    return RunReport(
        row_id=record["row_id"],
        model_id=record["model_id"],
        pretraining_data=record["pretraining_data"],
        pretraining_method=record["pretraining_method"],
        valid_acc=record["valid_acc"],
        valid_f1=record["valid_f1"],
        test_acc=record["test_acc"],
        test_f1=record["test_f1"],
        pretraining_minutes=record["pretraining_minutes"],
    )


def collect_reports(config: PipelineConfig) -> list[RunReport]:
    """Read per-row raw records and attach the cross-row ratio columns.

    Time ratio normalizes by the slowest pretraining row (the baseline row
    name is recorded in the report metadata); data size ratio compares each
    row's pretraining corpus bytes to the whole unlabeled data.
    """
    ws = Workspace(config)
    records = []
    for row_id in config.rows:
        path = ws.run_dir(row_id) / "report.json"
        if not path.exists():
            raise MissingArtifactError(
                f"missing {path}; run `keymask finetune --row {row_id}` first")
        records.append(json.loads(path.read_text(encoding="utf-8")))

    whole_bytes = corpus_io.read_stats(ws.whole_stats_file).byte_size
    summary_bytes = None
    if ws.summary_stats_file.exists():
        summary_bytes = corpus_io.read_stats(ws.summary_stats_file).byte_size

    with_time = [r for r in records if r["pretraining_method"] != "none"]
    slowest = max((r["pretraining_minutes"] for r in with_time), default=0.0)
    baseline = max(with_time, key=lambda r: r["pretraining_minutes"])["row_id"] \
        if with_time else None

    reports = []
    for record in records:
        time_ratio = None
        size_ratio = None
        if record["pretraining_method"] != "none":
            time_ratio = (record["pretraining_minutes"] / slowest) if slowest else None
            if record["pretraining_data"] == "whole":
                size_ratio = 1.0
            elif summary_bytes is not None and whole_bytes:
                size_ratio = summary_bytes / whole_bytes
        reports.append(dataclasses.replace(
            _report_from_record(record),
            time_ratio=time_ratio,
            data_size_ratio=size_ratio,
        ))
    if baseline is not None:
        meta_path = ws.report_dir / "meta.json"
        meta_path.parent.mkdir(parents=True, exist_ok=True)
        meta_path.write_text(json.dumps({"time_ratio_baseline_row": baseline},
                                        indent=2) + "\n", encoding="utf-8")
    return reports


def run_report(config: PipelineConfig) -> list[RunReport]:
    """Aggregate row records into the report table, Markdown view, raw rows
    file, and (when curve data exists) the frequency figures."""
    ws = Workspace(config)
    reports = collect_reports(config)
    verify_report_consistency(reports)
    table = build_table(reports)
    ws.report_dir.mkdir(parents=True, exist_ok=True)
    (ws.report_dir / "report.tsv").write_text(table.to_tsv(), encoding="utf-8")
    (ws.report_dir / "report.md").write_text(table.to_markdown(), encoding="utf-8")
    write_reports(reports, ws.report_dir / "report_rows.tsv")

    for source in KEYWORD_SOURCES:
        curve_path = ws.keywords_dir(source) / "curve.csv"
        keywords_path = ws.keywords_dir(source) / "keywords.txt"
        if curve_path.exists() and keywords_path.exists():
            curve = load_frequency_curve(curve_path)
            if curve:
                threshold = load_keyword_set(keywords_path).threshold
                emit_frequency_figure(
                    curve, threshold,
                    ws.report_dir / f"frequency_{source}.png",
                    ws.report_dir / f"frequency_{source}.csv")
    ws.snapshot_config()
    return reports


def matrix_plan(config: PipelineConfig) -> list[str]:
    """Ordered execution plan for the configured rows (dry-run output)."""
    needs_summaries = any(ROW_SPECS[row]["data"] == "summary" for row in config.rows)
    needs_kw_summaries = "keyword_summary" in config.rows
    needs_kw_whole = "keyword_whole" in config.rows
    steps = ["ingest"]
    if needs_summaries or needs_kw_summaries:
        steps.append("summarize")
    if needs_kw_summaries:
        steps.extend(["extract --source summaries", "filter --source summaries"])
    if needs_kw_whole:
        steps.extend(["extract --source whole_data", "filter --source whole_data"])
    for row in config.rows:
        if ROW_SPECS[row]["method"] != "none":
            steps.append(f"pretrain --row {row}")
        steps.append(f"finetune --row {row}")
    steps.append("report")
    return steps


def run_matrix(config: PipelineConfig) -> list[RunReport]:
    """Run the full pipeline for the configured rows and emit the report."""
    plan = matrix_plan(config)
    logger.info("matrix plan: %s", ", ".join(plan))
    run_ingest(config)
    if "summarize" in plan:
        run_summarize(config)
    for source in KEYWORD_SOURCES:
        if f"extract --source {source}" in plan:
            run_extract(config, source)
            run_filter(config, source)
    for row in config.rows:
        if ROW_SPECS[row]["method"] != "none":
            run_pretrain_row(config, row)
        run_finetune_row(config, row)
    return run_report(config)
