"""Per-document keyword extraction: candidates, embeddings, MMR selection.

Selection is greedy maximal marginal relevance over cosine similarities:
the first pick maximizes similarity to the document, each later pick
maximizes (1 - diversity) * relevance - diversity * redundancy, where
redundancy is the highest similarity to anything already selected. Ties
break toward the lexicographically smaller word so runs are reproducible
down to the bit.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .corpus import TEXT_ENCODING
from .errors import BackendError, ConfigError
from .text import is_wordlike, load_stopwords, split_words

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionConfig:
    max_keywords_per_doc: int = 10
    ngram_range: tuple[int, int] = (1, 1)
    use_mmr: bool = True
    diversity: float = 0.8
    stopword_list_id: str = "english-v1"
    lowercase: bool = True

    def __post_init__(self):
        if self.max_keywords_per_doc < 1:
            raise ConfigError("max_keywords_per_doc must be >= 1")
        low, high = self.ngram_range
        if not 1 <= low <= high:
            raise ConfigError(f"bad ngram_range {self.ngram_range}")
        if high > 1:
            raise ConfigError("only unigram extraction is supported")
        if not 0.0 <= self.diversity <= 1.0:
            raise ConfigError("diversity must be in [0, 1]")


class EmbeddingBackend(Protocol):
    """Maps text spans to fixed-dimension vectors; deterministic per input."""

    name: str

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        ...


class HashEmbeddingBackend:
    """Deterministic stub: each word hashes to a fixed unit vector, a text
    embeds as the mean of its word vectors.

    Cross-platform deterministic (sha256, not Python's randomized hash), and
    documents sharing vocabulary land close together, so frequency structure
    in synthetic corpora survives extraction.
    """

    def __init__(self, dim: int = 16, seed: int = 0):
        if dim <= 0:
            raise ConfigError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.name = f"hash:d={dim},seed={seed}"
        self._cache: dict[str, np.ndarray] = {}

    def _word_vector(self, word: str) -> np.ndarray:
        vec = self._cache.get(word)
        if vec is None:
            digest = hashlib.sha256(f"{self.seed}:{word}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[word] = vec
        return vec

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            words = [w.lower() for w in split_words(text)]
            if words:
                out[i] = np.mean([self._word_vector(w) for w in words], axis=0)
            else:
                out[i] = self._word_vector("")
        return out


@dataclass(frozen=True)
class DocKeywords:
    """Ordered keywords of one document with their document relevances."""

    doc_id: str
    keywords: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def words(self) -> list[str]:
        return [w for w, _ in self.keywords]


def candidate_terms(text: str, config: ExtractionConfig) -> list[str]:
    """Unique word-level candidates in first-occurrence order.

    Words are lowercased (per config), stopwords and tokens without letters
    or shorter than two characters are dropped.
    """
    stopwords = load_stopwords(config.stopword_list_id)
    seen: set[str] = set()
    out: list[str] = []
    for word in split_words(text):
        if config.lowercase:
            word = word.lower()
        if word in seen or word.lower() in stopwords or not is_wordlike(word):
            continue
        seen.add(word)
        out.append(word)
    return out


def _norm(v: np.ndarray) -> float:
    # sqrt of the exact dot product (not BLAS nrm2, whose scaled accumulation
    # can differ in the last ulp and upset exact tie-breaking)
    return math.sqrt(float(np.dot(v, v)))


def _cosine(a: np.ndarray, b: np.ndarray, na: float, nb: float) -> float:
    return float(np.dot(a, b)) / (na * nb)


def mmr_select(doc_vector: np.ndarray, candidates: Sequence[tuple[str, np.ndarray]],
               k: int, diversity: float) -> list[tuple[str, float]]:
    """Greedy MMR over cosine similarities; returns (word, relevance) pairs.

    Stops after min(k, len(candidates)) picks. Relevance recorded for each
    pick is its cosine to the document, not its MMR score. Zero vectors are
    rejected (cosine undefined).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not candidates:
        return []
    doc_vector = np.asarray(doc_vector, dtype=np.float64)
    doc_norm = _norm(doc_vector)
    if doc_norm == 0.0:
        raise ValueError("document vector is zero; cosine undefined")

    words = [w for w, _ in candidates]
    vectors = [np.asarray(v, dtype=np.float64) for _, v in candidates]
    norms = [_norm(v) for v in vectors]
    for word, norm, vec in zip(words, norms, vectors):
        if norm == 0.0:
            raise ValueError(f"candidate {word!r} has a zero vector; cosine undefined")
        if vec.shape != doc_vector.shape:
            raise ValueError(f"candidate {word!r} has dimension {vec.shape}, "
                             f"expected {doc_vector.shape}")

    relevance = [_cosine(v, doc_vector, n, doc_norm) for v, n in zip(vectors, norms)]

    remaining = list(range(len(candidates)))
    selected: list[int] = []
    while remaining and len(selected) < k:
        best_idx = None
        best_score = None
        for idx in remaining:
            if not selected:
                score = relevance[idx]
            else:
                redundancy = max(
                    _cosine(vectors[idx], vectors[j], norms[idx], norms[j])
                    for j in selected
                )
                score = (1.0 - diversity) * relevance[idx] - diversity * redundancy
            if (best_score is None or score > best_score
                    or (score == best_score and words[idx] < words[best_idx])):
                best_score = score
                best_idx = idx
        selected.append(best_idx)
        remaining.remove(best_idx)
    return [(words[i], relevance[i]) for i in selected]


def extract_keywords(docs: Iterable[tuple[str, str]], backend: EmbeddingBackend,
                     config: ExtractionConfig, on_error: str = "fail") -> list[DocKeywords]:
    """Extract up to ``max_keywords_per_doc`` keywords per (doc_id, text).

    The full text is embedded once per document and all candidates in one
    batch; documents with no candidates yield an empty keyword list. With
    ``use_mmr`` disabled, selection degenerates to plain top-k by relevance
    (equivalent to diversity = 0).
    """
    if on_error not in ("fail", "skip"):
        raise ConfigError(f"on_error must be 'fail' or 'skip', got {on_error!r}")
    results: list[DocKeywords] = []
    for doc_id, text in docs:
        candidates = candidate_terms(text, config)
        if not candidates:
            results.append(DocKeywords(doc_id=doc_id, keywords=()))
            continue
        try:
            doc_vec = backend.embed_texts([text])[0]
            cand_vecs = backend.embed_texts(candidates)
        except Exception as exc:
            if on_error == "fail":
                raise BackendError(doc_id, str(exc)) from exc
            logger.warning("skipping document %s: embedding failed (%s)", doc_id, exc)
            continue
        diversity = config.diversity if config.use_mmr else 0.0
        picks = mmr_select(
            doc_vec,
            list(zip(candidates, cand_vecs)),
            k=config.max_keywords_per_doc,
            diversity=diversity,
        )
        results.append(DocKeywords(doc_id=doc_id, keywords=tuple(picks)))
    return results


def save_doc_keywords(doc_keywords: Sequence[DocKeywords], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=TEXT_ENCODING) as handle:
        for dk in doc_keywords:
            handle.write(json.dumps({
                "doc_id": dk.doc_id,
                "keywords": [[w, r] for w, r in dk.keywords],
            }, ensure_ascii=False) + "\n")


def load_doc_keywords(path: Path | str) -> list[DocKeywords]:
    out = []
    for line in Path(path).read_text(encoding=TEXT_ENCODING).splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        out.append(DocKeywords(
            doc_id=record["doc_id"],
            keywords=tuple((w, float(r)) for w, r in record["keywords"]),
        ))
    return out
