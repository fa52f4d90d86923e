"""Word segmentation and stopword lists.

One segmentation rule is shared by the subword tokenizer, the keyword
candidate generator, and keyword matching in the masking collator, so a
word extracted as a keyword is always recognizable downstream.
"""

import re
from functools import lru_cache
from importlib import resources

# Runs of unicode letters/digits; punctuation and whitespace are separators.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_LETTER_RE = re.compile(r"[^\W\d_]", re.UNICODE)

STOPWORD_LISTS = {
    "english-v1": "stopwords_english_v1.txt",
    "none": None,
}


def split_words(text: str) -> list[str]:
    """Split text into word tokens (original case, original order)."""
    return _WORD_RE.findall(text)


def is_wordlike(word: str) -> bool:
    """True for tokens of length >= 2 that contain at least one letter."""
    return len(word) >= 2 and _LETTER_RE.search(word) is not None


@lru_cache(maxsize=None)
def load_stopwords(list_id: str) -> frozenset[str]:
    """Load a versioned stopword list shipped with the package.

    The identifier is recorded in run metadata so extraction runs are
    reproducible; ``"none"`` disables stopword removal.
    """
    if list_id not in STOPWORD_LISTS:
        raise KeyError(f"unknown stopword list {list_id!r}; known: {sorted(STOPWORD_LISTS)}")
    filename = STOPWORD_LISTS[list_id]
    if filename is None:
        return frozenset()
    data = resources.files("keymask.data").joinpath(filename).read_text(encoding="utf-8")
    words = {line.strip().lower() for line in data.splitlines()}
    return frozenset(w for w in words if w and not w.startswith("#"))
