"""Compact domain-adaptive pretraining toolkit.

Compacts an unlabeled target-domain corpus into summaries and frequent
keywords, masks only those keywords during continued MLM pretraining, and
compares the resulting fine-tuned classifiers against random-masking and
no-pretraining baselines.
"""

from .corpus import (CorpusSplits, CorpusStats, Document, corpus_stats,
                     derive_test_from_train, load_corpus, save_corpus)
from .errors import (BackendError, ConfigError, CorpusFormatError, IntegrityError,
                     KeymaskError, MissingArtifactError)
from .extraction import (DocKeywords, EmbeddingBackend, ExtractionConfig,
                         HashEmbeddingBackend, candidate_terms, extract_keywords,
                         mmr_select)
from .filtering import (KeywordFrequencyTable, KeywordSet, apply_cutoff,
                        build_frequency_table, frequency_curve, suggest_cutoff)
from .masking import (CollatedBatch, Collator, MaskingAudit, MaskingConfig,
                      collate_keyword, collate_random, masking_coverage)
from .models import EncoderConfig, SequenceClassifier, TinyEncoder, build_encoder
from .pipeline import PipelineConfig, run_matrix
from .reporting import RunReport, build_table, emit_frequency_figure
from .summarize import (SummarizationBackend, Summary, SummarizerConfig,
                        TruncatingSummarizer, compaction_ratio, summarize_corpus)
from .tokenizer import PipelineTokenizer, SubwordVocab, TokenizedExample
from .training import (EvalMetrics, FinetuneConfig, PretrainConfig, TrainedRun,
                       accuracy_and_f1, evaluate, finetune, pretrain)

__version__ = "0.1.0"

__all__ = [
    "BackendError", "CollatedBatch", "Collator", "ConfigError", "CorpusFormatError",
    "CorpusSplits", "CorpusStats", "DocKeywords", "Document", "EmbeddingBackend",
    "EncoderConfig", "EvalMetrics", "ExtractionConfig", "FinetuneConfig",
    "HashEmbeddingBackend", "IntegrityError", "KeymaskError", "KeywordFrequencyTable",
    "KeywordSet", "MaskingAudit", "MaskingConfig", "MissingArtifactError",
    "PipelineConfig", "PipelineTokenizer", "PretrainConfig", "RunReport",
    "SequenceClassifier", "SubwordVocab", "SummarizationBackend", "Summary",
    "SummarizerConfig", "TinyEncoder", "TokenizedExample", "TrainedRun",
    "TruncatingSummarizer", "accuracy_and_f1", "apply_cutoff", "build_encoder",
    "build_frequency_table", "build_table", "candidate_terms", "collate_keyword",
    "collate_random", "compaction_ratio", "corpus_stats", "derive_test_from_train",
    "emit_frequency_figure", "evaluate", "extract_keywords", "finetune",
    "frequency_curve", "load_corpus", "masking_coverage", "mmr_select", "pretrain",
    "run_matrix", "save_corpus", "suggest_cutoff", "summarize_corpus",
]
