import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keymask.extraction import DocKeywords
from keymask.filtering import (KeywordFrequencyTable, KeywordSet, apply_cutoff,
                               build_frequency_table, frequency_curve,
                               load_frequency_curve, load_frequency_table,
                               load_keyword_set, save_frequency_curve,
                               save_frequency_table, save_keyword_set, suggest_cutoff)


def dk(doc_id, words):
    return DocKeywords(doc_id=doc_id, keywords=tuple((w, 0.5) for w in words))


def random_doc_keywords(n_docs, vocab, rng):
    rows = []
    for i in range(n_docs):
        count = rng.randint(0, 10)
        words = rng.sample(vocab, min(count, len(vocab)))
        rows.append(dk(f"d{i}", words))
    return rows


def test_build_frequency_table_basic():
    table = build_frequency_table([dk("1", ["a", "b"]), dk("2", ["a"]), dk("3", ["a", "c"])])
    assert table.entries == (("a", 3), ("b", 1), ("c", 1))


def test_build_frequency_table_empty():
    assert build_frequency_table([]).entries == ()


def test_table_matches_naive_recount():
    rng = random.Random(3)
    vocab = [f"word{i}" for i in range(60)]
    rows = random_doc_keywords(1000, vocab, rng)
    table = build_frequency_table(rows)
    naive = Counter()
    for row in rows:
        for word, _ in row.keywords:
            naive[word] += 1
    assert table.counts() == dict(naive)
    # sorted invariant on every adjacent pair
    for (w1, c1), (w2, c2) in zip(table.entries, table.entries[1:]):
        assert c1 > c2 or (c1 == c2 and w1 < w2)


def test_table_permutation_invariant():
    rng = random.Random(5)
    vocab = [f"w{i}" for i in range(20)]
    rows = random_doc_keywords(50, vocab, rng)
    shuffled = list(rows)
    rng.shuffle(shuffled)
    assert build_frequency_table(rows) == build_frequency_table(shuffled)


def test_bad_sort_order_rejected():
    with pytest.raises(ValueError):
        KeywordFrequencyTable(entries=(("a", 1), ("b", 5)))
    with pytest.raises(ValueError):
        KeywordFrequencyTable(entries=(("b", 2), ("a", 2)))


def test_apply_cutoff_basic():
    table = KeywordFrequencyTable(entries=(("a", 10), ("b", 7), ("c", 1)))
    assert apply_cutoff(table, 8).words == {"a"}
    assert apply_cutoff(table, 1).words == {"a", "b", "c"}
    assert apply_cutoff(table, 99).words == frozenset()
    with pytest.raises(ValueError):
        apply_cutoff(table, 0)


def test_cutoff_monotone_and_naive_equal():
    rng = random.Random(11)
    vocab = [f"term{i}" for i in range(40)]
    rows = random_doc_keywords(300, vocab, rng)
    table = build_frequency_table(rows)
    naive = Counter()
    for row in rows:
        for word, _ in row.keywords:
            naive[word] += 1
    previous = None
    for threshold in range(1, 11):
        keywords = apply_cutoff(table, threshold)
        assert keywords.words == {w for w, c in naive.items() if c >= threshold}
        if previous is not None:
            assert keywords.words <= previous
        previous = keywords.words
    assert len(apply_cutoff(table, 1).words) == len(naive)


def test_keyword_set_validation():
    with pytest.raises(ValueError):
        KeywordSet(words=frozenset(), threshold=0)
    with pytest.raises(ValueError):
        KeywordSet(words=frozenset(), threshold=1, source="elsewhere")


def test_frequency_curve_basic():
    table = KeywordFrequencyTable(entries=(("a", 3), ("b", 1), ("c", 1)))
    assert frequency_curve(table, tail=50) == [(1, 2), (3, 1)]
    assert frequency_curve(table, tail=1) == [(1, 2)]
    with pytest.raises(ValueError):
        frequency_curve(table, tail=0)


def test_curve_total_equals_distinct_words():
    rng = random.Random(13)
    vocab = [f"w{i}" for i in range(80)]
    rows = random_doc_keywords(400, vocab, rng)
    table = build_frequency_table(rows)
    curve = frequency_curve(table, tail=10**9)
    assert sum(n for _, n in curve) == len({w for row in rows for w, _ in row.keywords})


def test_suggest_cutoff_finds_the_leap():
    # 8000 singletons, then a long quiet tail from level 8 up: cut at 8
    entries = tuple(sorted(
        [(f"rare{i}", 1) for i in range(8000)] + [(f"mid{i}", 2) for i in range(300)]
        + [(f"hot{i}", 8 + i) for i in range(30)],
        key=lambda kv: (-kv[1], kv[0])))
    table = KeywordFrequencyTable(entries=entries)
    assert suggest_cutoff(table) == 8
    assert suggest_cutoff(KeywordFrequencyTable(entries=(("a", 1),))) == 1


def test_round_trips(tmp_path):
    table = KeywordFrequencyTable(entries=(("alpha", 4), ("beta", 2), ("gamma", 2)))
    save_frequency_table(table, tmp_path / "freq.tsv")
    assert load_frequency_table(tmp_path / "freq.tsv") == table

    keywords = apply_cutoff(table, 2, source="whole_data")
    save_keyword_set(keywords, tmp_path / "kw.txt")
    loaded = load_keyword_set(tmp_path / "kw.txt")
    assert loaded == keywords
    header = (tmp_path / "kw.txt").read_text().splitlines()[0]
    assert header == "# threshold=2 source=whole_data"

    curve = frequency_curve(table, tail=50)
    save_frequency_curve(curve, tmp_path / "curve.csv")
    assert load_frequency_curve(tmp_path / "curve.csv") == curve


@given(st.lists(st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), unique=True,
                         max_size=5), max_size=30),
       st.integers(min_value=1, max_value=6))
@settings(max_examples=60, deadline=None)
def test_cutoff_monotonicity_property(word_lists, threshold):
    rows = [dk(f"d{i}", words) for i, words in enumerate(word_lists)]
    table = build_frequency_table(rows)
    tighter = apply_cutoff(table, threshold + 1)
    looser = apply_cutoff(table, threshold)
    assert tighter.words <= looser.words
