import random

import pytest

from keymask.corpus import Document
from keymask.filtering import KeywordSet
from keymask.synth import SyntheticSpec, make_synthetic_corpus
from keymask.tokenizer import PipelineTokenizer, SubwordVocab, TokenizedExample


class ScriptedRng:
    """RNG stub that replays a fixed script of draws.

    ``random()`` pops from ``uniforms``; ``randrange(n)`` pops from
    ``integers``. Running out of script is a test bug and raises.
    """

    def __init__(self, uniforms=(), integers=()):
        self.uniforms = list(uniforms)
        self.integers = list(integers)

    def random(self):
        return self.uniforms.pop(0)

    def randrange(self, stop):
        value = self.integers.pop(0)
        assert 0 <= value < stop
        return value


class RecordingRng:
    """Wraps random.Random and records every draw, for replay oracles."""

    def __init__(self, seed):
        self._rng = random.Random(seed)
        self.draws = []

    def random(self):
        value = self._rng.random()
        self.draws.append(("u", value))
        return value

    def randrange(self, stop):
        value = self._rng.randrange(stop)
        self.draws.append(("i", value))
        return value


def make_example(word_pieces, vocab_size=1000, first_id=10):
    """Build a TokenizedExample by hand: word i gets word_pieces[i] tokens.

    Words are named w0, w1, ...; token ids are distinct and deterministic.
    """
    token_ids = [2]  # [CLS]
    spans = []
    words = []
    next_id = first_id
    for i, n_pieces in enumerate(word_pieces):
        start = len(token_ids)
        for _ in range(n_pieces):
            token_ids.append(next_id)
            next_id += 1
        spans.append((start, start + n_pieces))
        words.append(f"w{i}")
    token_ids.append(3)  # [SEP]
    return TokenizedExample(
        token_ids=tuple(token_ids),
        word_spans=tuple(spans),
        word_texts=tuple(words),
        special_positions=frozenset({0, len(token_ids) - 1}),
    )


@pytest.fixture(scope="session")
def tiny_splits():
    return make_synthetic_corpus(SyntheticSpec(
        n_train=24, n_validation=8, n_test=8, n_unlabeled=40, seed=11))


@pytest.fixture(scope="session")
def tiny_tokenizer(tiny_splits):
    vocab = SubwordVocab.build(
        (doc.text for doc in tiny_splits.all_documents()), max_size=2000)
    return PipelineTokenizer(vocab)


@pytest.fixture
def keyword_set():
    return KeywordSet(words=frozenset({"w0", "w2"}), threshold=1, source="summaries")


def docs_from_texts(texts, prefix="d", label=None):
    return [Document(id=f"{prefix}{i}", text=text, label=label)
            for i, text in enumerate(texts)]
