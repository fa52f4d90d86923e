"""Corpus-local subword tokenizer with word alignment.

The tokenizer assigns every subword piece to exactly one source word, which
is what whole-word masking needs: a word's pieces form one contiguous span.
The vocabulary is built from the corpus itself (most frequent words stay
whole, everything else decomposes greedily into pieces), so the toolkit is
runnable without any pretrained weights.
"""

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .text import split_words

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MASK_TOKEN = "[MASK]"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN)

CONTINUATION = "##"


@dataclass(frozen=True)
class TokenizedExample:
    """One encoded sequence plus the word alignment the collators rely on.

    ``word_spans[i]`` is the half-open token-index range covering all pieces
    of ``word_texts[i]``; spans are disjoint, ordered, and never overlap
    ``special_positions``.
    """

    token_ids: tuple[int, ...]
    word_spans: tuple[tuple[int, int], ...]
    word_texts: tuple[str, ...]
    special_positions: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if len(self.word_spans) != len(self.word_texts):
            raise ValueError("word_spans and word_texts must be aligned")
        prev_end = 0
        for start, end in self.word_spans:
            if not (prev_end <= start < end <= len(self.token_ids)):
                raise ValueError(f"bad word span ({start}, {end})")
            if any(i in self.special_positions for i in range(start, end)):
                raise ValueError("word span overlaps a special position")
            prev_end = end


class SubwordVocab:
    """Frequency-built vocabulary: specials, single characters, whole words."""

    def __init__(self, tokens: list[str]):
        if list(tokens[: len(SPECIAL_TOKENS)]) != list(SPECIAL_TOKENS):
            raise ConfigError("vocabulary must start with the special tokens")
        self.tokens = list(tokens)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ConfigError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self.index[PAD_TOKEN]

    @property
    def unk_id(self) -> int:
        return self.index[UNK_TOKEN]

    @property
    def cls_id(self) -> int:
        return self.index[CLS_TOKEN]

    @property
    def sep_id(self) -> int:
        return self.index[SEP_TOKEN]

    @property
    def mask_id(self) -> int:
        return self.index[MASK_TOKEN]

    @classmethod
    def build(cls, texts, max_size: int = 8000, min_word_freq: int = 1,
              lowercase: bool = True) -> "SubwordVocab":
        """Build a vocabulary from raw texts.

        All single characters seen in words are included (as word-initial and
        continuation pieces) so any in-alphabet word encodes without [UNK];
        the most frequent words are then added whole, ties broken
        alphabetically so the build is deterministic.
        """
        word_freq: Counter[str] = Counter()
        for text in texts:
            for word in split_words(text):
                word_freq[word.lower() if lowercase else word] += 1

        chars = sorted({ch for word in word_freq for ch in word})
        tokens = list(SPECIAL_TOKENS)
        tokens.extend(chars)
        tokens.extend(CONTINUATION + ch for ch in chars)

        seen = set(tokens)
        by_freq = sorted(word_freq.items(), key=lambda kv: (-kv[1], kv[0]))
        for word, freq in by_freq:
            if len(tokens) >= max_size:
                break
            if freq < min_word_freq or word in seen:
                continue
            tokens.append(word)
            seen.add(word)
        return cls(tokens)

    def encode_word(self, word: str) -> list[int]:
        """Greedy longest-match decomposition; [UNK] if a char is unknown."""
        pieces: list[int] = []
        i = 0
        n = len(word)
        while i < n:
            prefix = "" if i == 0 else CONTINUATION
            match = None
            for j in range(n, i, -1):
                candidate = prefix + word[i:j]
                tok_id = self.index.get(candidate)
                if tok_id is not None:
                    match = (tok_id, j)
                    break
            if match is None:
                return [self.unk_id]
            pieces.append(match[0])
            i = match[1]
        return pieces

    def save(self, path: Path | str) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "SubwordVocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([line for line in lines if line])


class PipelineTokenizer:
    """Applies the shared word segmentation, then subword decomposition.

    ``encode`` wraps content tokens in [CLS] ... [SEP]; token budgets passed
    to ``encode``/``count_tokens``/``truncate_to_tokens`` count content
    tokens only, never the delimiters.
    """

    def __init__(self, vocab: SubwordVocab, lowercase: bool = True):
        self.vocab = vocab
        self.lowercase = lowercase

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def words(self, text: str) -> list[str]:
        """Word segmentation as the tokenizer sees it (casing applied)."""
        words = split_words(text)
        if self.lowercase:
            words = [w.lower() for w in words]
        return words

    def encode(self, text: str, max_tokens: int | None = None) -> TokenizedExample:
        """Encode text, truncating whole words from the tail past the budget."""
        token_ids = [self.vocab.cls_id]
        word_spans: list[tuple[int, int]] = []
        word_texts: list[str] = []
        budget = max_tokens if max_tokens is not None else float("inf")
        used = 0
        for word in self.words(text):
            pieces = self.vocab.encode_word(word)
            if used + len(pieces) > budget:
                break
            start = len(token_ids)
            token_ids.extend(pieces)
            word_spans.append((start, start + len(pieces)))
            word_texts.append(word)
            used += len(pieces)
        token_ids.append(self.vocab.sep_id)
        return TokenizedExample(
            token_ids=tuple(token_ids),
            word_spans=tuple(word_spans),
            word_texts=tuple(word_texts),
            special_positions=frozenset({0, len(token_ids) - 1}),
        )

    def count_tokens(self, text: str) -> int:
        """Number of content tokens (no delimiters)."""
        return sum(len(self.vocab.encode_word(w)) for w in self.words(text))

    def truncate_to_tokens(self, text: str, max_tokens: int) -> str:
        """Keep the longest head of whole words that fits the token budget.

        Returns the original string when it already fits, so truncation never
        perturbs text that satisfies the length contract.
        """
        words_raw = split_words(text)
        used = 0
        keep = 0
        for word in words_raw:
            w = word.lower() if self.lowercase else word
            pieces = self.vocab.encode_word(w)
            if used + len(pieces) > max_tokens:
                break
            used += len(pieces)
            keep += 1
        if keep == len(words_raw):
            return text
        return " ".join(words_raw[:keep])
