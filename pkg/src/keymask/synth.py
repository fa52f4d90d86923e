"""Synthetic corpora with planted domain keywords.

Used by the test suite and the CLI demo mode: labeled documents embed a
label-revealing signature word (so a linear bag-of-words model can solve the
task), and all documents repeat a shared pool of domain keywords often
enough to clear a frequency cut-off, while filler words stay rare.
"""

import random
from dataclasses import dataclass

from .corpus import CorpusSplits, Document


@dataclass(frozen=True)
class SyntheticSpec:
    n_train: int = 80
    n_validation: int = 20
    n_test: int = 20
    n_unlabeled: int = 200
    num_labels: int = 2
    words_per_doc: int = 48
    domain_keywords: int = 12
    keyword_slots: int = 10
    filler_vocab: int = 600
    seed: int = 0


def _coin_word(rng: random.Random, length: int = 7) -> str:
    return "".join(rng.choice("bcdfghjklmnpqrstvwz") if i % 2 == 0
                   else rng.choice("aeiou") for i in range(length))


def make_synthetic_corpus(spec: SyntheticSpec = SyntheticSpec()) -> CorpusSplits:
    """Build a deterministic synthetic corpus from a SyntheticSpec.

    Every document has exactly ``words_per_doc`` words: a fixed number of
    slots carry domain keywords (and, for labeled docs, the label signature
    occupies the first slot), the rest are low-frequency filler.
    """
    rng = random.Random(spec.seed)
    fillers = sorted({_coin_word(rng) for _ in range(spec.filler_vocab * 2)})[: spec.filler_vocab]
    reserved = set(fillers)

    def fresh_word(prefix: str) -> str:
        while True:
            word = prefix + _coin_word(rng, 5)
            if word not in reserved:
                reserved.add(word)
                return word

    keywords = [fresh_word("dom") for _ in range(spec.domain_keywords)]
    signatures = [fresh_word("sig") for _ in range(spec.num_labels)]

    def build_doc(doc_id: str, label_index: int | None) -> Document:
        words = []
        if label_index is not None:
            words.append(signatures[label_index])
        while len(words) < spec.keyword_slots:
            words.append(rng.choice(keywords))
        while len(words) < spec.words_per_doc:
            words.append(rng.choice(fillers))
        rng.shuffle(words)
        label = f"class{label_index}" if label_index is not None else None
        return Document(id=doc_id, text=" ".join(words), label=label)

    def labeled(prefix: str, count: int) -> tuple[Document, ...]:
        return tuple(build_doc(f"{prefix}{i:05d}", i % spec.num_labels)
                     for i in range(count))

    return CorpusSplits(
        train=labeled("tr", spec.n_train),
        validation=labeled("va", spec.n_validation),
        test=labeled("te", spec.n_test),
        unlabeled=tuple(build_doc(f"un{i:05d}", None) for i in range(spec.n_unlabeled)),
    )
