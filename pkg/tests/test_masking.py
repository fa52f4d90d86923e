import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keymask.errors import ConfigError
from keymask.filtering import KeywordSet
from keymask.masking import (IGNORE_LABEL, Collator, MaskingConfig, collate_keyword,
                             collate_random, masking_coverage, write_audit_csv)

from conftest import RecordingRng, ScriptedRng, make_example

VOCAB = 1000
MASK = 4


def kw_config(p=None, seed=0):
    return MaskingConfig(mode="keyword", mask_token_id=MASK, vocab_size=VOCAB,
                         masking_probability=p, seed=seed)


def rnd_config(p=None, seed=0):
    return MaskingConfig(mode="random", mask_token_id=MASK, vocab_size=VOCAB,
                         masking_probability=p, seed=seed)


def test_config_defaults_by_mode():
    assert kw_config().masking_probability == 0.75
    assert rnd_config().masking_probability == 0.15


def test_config_validation():
    with pytest.raises(ConfigError):
        MaskingConfig(mode="sideways", mask_token_id=MASK, vocab_size=VOCAB)
    with pytest.raises(ConfigError):
        kw_config(p=0.0)
    with pytest.raises(ConfigError):
        kw_config(p=1.5)
    with pytest.raises(ConfigError):
        MaskingConfig(mode="keyword", mask_token_id=VOCAB, vocab_size=VOCAB)
    with pytest.raises(ConfigError):
        MaskingConfig(mode="keyword", mask_token_id=MASK, vocab_size=VOCAB,
                      ignore_label=5)


def test_wrong_mode_rejected(keyword_set):
    example = make_example([1])
    with pytest.raises(ConfigError):
        collate_keyword([example], keyword_set, rnd_config(), random.Random(0))
    with pytest.raises(ConfigError):
        collate_random([example], kw_config(), random.Random(0))


def test_no_keywords_means_identity():
    example = make_example([2, 1, 3])
    empty = KeywordSet(words=frozenset({"absent"}), threshold=1)
    out = collate_keyword([example], empty, kw_config(), random.Random(0))
    assert out.input_ids[0] == example.token_ids
    assert set(out.labels[0]) == {IGNORE_LABEL}
    assert out.audit.candidate_units == 0


def test_forced_select_and_mask(keyword_set):
    example = make_example([3])  # one word "w0", three pieces
    rng = ScriptedRng(uniforms=[0.0, 0.0])  # select, then action < 0.8 -> mask
    out = collate_keyword([example], keyword_set, kw_config(), rng)
    span = example.word_spans[0]
    assert out.input_ids[0][span[0]:span[1]] == (MASK, MASK, MASK)
    assert out.labels[0][span[0]:span[1]] == example.token_ids[span[0]:span[1]]
    assert out.labels[0][0] == IGNORE_LABEL  # [CLS]


def test_forced_select_and_replace(keyword_set):
    example = make_example([2])
    rng = ScriptedRng(uniforms=[0.0, 0.85], integers=[7, 7])  # replace
    out = collate_keyword([example], keyword_set, kw_config(), rng)
    span = example.word_spans[0]
    assert out.input_ids[0][span[0]:span[1]] == (7, 7)
    assert out.labels[0][span[0]:span[1]] == example.token_ids[span[0]:span[1]]


def test_forced_select_and_keep(keyword_set):
    example = make_example([2])
    rng = ScriptedRng(uniforms=[0.0, 0.95])  # keep
    out = collate_keyword([example], keyword_set, kw_config(), rng)
    assert out.input_ids[0] == example.token_ids
    span = example.word_spans[0]
    assert out.labels[0][span[0]:span[1]] == example.token_ids[span[0]:span[1]]


def test_non_keyword_words_never_touched(keyword_set):
    # w1 is not a keyword; only w0/w2 are candidates
    example = make_example([1, 2, 1])
    rng = ScriptedRng(uniforms=[0.0, 0.0, 0.0, 0.0])  # both candidates: select+mask
    out = collate_keyword([example], keyword_set, kw_config(), rng)
    w1 = example.word_spans[1]
    assert out.input_ids[0][w1[0]:w1[1]] == example.token_ids[w1[0]:w1[1]]
    assert all(label == IGNORE_LABEL for label in out.labels[0][w1[0]:w1[1]])


def test_random_forced_nothing_selected():
    example = make_example([1, 1])
    rng = ScriptedRng(uniforms=[0.99, 0.99])
    out = collate_random([example], rnd_config(), rng)
    assert out.input_ids[0] == example.token_ids
    assert set(out.labels[0]) == {IGNORE_LABEL}


def test_random_forced_single_token_replace():
    example = make_example([1])
    rng = ScriptedRng(uniforms=[0.0, 0.85], integers=[123])
    out = collate_random([example], rnd_config(), rng)
    position = example.word_spans[0][0]
    assert 0 <= out.input_ids[0][position] < VOCAB
    assert out.labels[0][position] == example.token_ids[position]


def test_empty_batch_is_empty_output(keyword_set):
    out = collate_keyword([], keyword_set, kw_config(), random.Random(0))
    assert out.input_ids == () and out.labels == ()


def test_keyword_monte_carlo_fractions(keyword_set):
    # 12,000 candidate occurrences of multi-piece keyword words
    batch = [make_example([2, 1, 3, 1]) for _ in range(6000)]
    rng = random.Random(99)
    out = collate_keyword(batch, keyword_set, kw_config(), rng)
    selected = masked = kept = replaced = 0
    for example, ids, labels in zip(batch, out.input_ids, out.labels):
        for span, word in zip(example.word_spans, example.word_texts):
            if word not in keyword_set.words:
                continue
            window = slice(span[0], span[1])
            if labels[window] == example.token_ids[window]:
                selected += 1
                if all(t == MASK for t in ids[window]):
                    masked += 1
                elif ids[window] == example.token_ids[window]:
                    kept += 1
                else:
                    replaced += 1
    candidates = 2 * len(batch)
    assert candidates >= 10_000
    assert selected / candidates == pytest.approx(0.75, abs=0.02)
    assert masked / selected == pytest.approx(0.80, abs=0.02)
    assert replaced / selected == pytest.approx(0.10, abs=0.02)
    assert kept / selected == pytest.approx(0.10, abs=0.02)


def test_random_monte_carlo_fraction():
    batch = [make_example([1] * 20) for _ in range(600)]
    out = collate_random(batch, rnd_config(), random.Random(17))
    total = sum(len(e.token_ids) - 2 for e in batch)
    selected = sum(1 for labels in out.labels for lab in labels if lab != IGNORE_LABEL)
    assert total >= 10_000
    assert selected / total == pytest.approx(0.15, abs=0.015)


def test_replay_oracle_confirms_whole_word_atomicity(keyword_set):
    """Replay the recorded RNG stream to derive each word's selection and
    action independently, then check the collator's output token patterns."""
    batch = [make_example([2, 3, 1, 2]) for _ in range(40)]
    config = kw_config(seed=1)
    rng = RecordingRng(1)
    out = collate_keyword(batch, keyword_set, config, rng)

    draws = list(rng.draws)

    def next_draw(kind):
        tag, value = draws.pop(0)
        assert tag == kind
        return value

    for example, ids, labels in zip(batch, out.input_ids, out.labels):
        for span, word in zip(example.word_spans, example.word_texts):
            window = slice(span[0], span[1])
            if word not in keyword_set.words:
                assert all(lab == IGNORE_LABEL for lab in labels[window])
                continue
            if next_draw("u") >= config.masking_probability:
                assert all(lab == IGNORE_LABEL for lab in labels[window])
                assert ids[window] == example.token_ids[window]
                continue
            assert labels[window] == example.token_ids[window]
            action = next_draw("u")
            if action < 0.8:
                assert all(t == MASK for t in ids[window])
            elif action < 0.9:
                expected = tuple(next_draw("i") for _ in range(span[1] - span[0]))
                assert ids[window] == expected
            else:
                assert ids[window] == example.token_ids[window]
    assert not draws  # every recorded draw is accounted for


@given(st.lists(st.lists(st.integers(min_value=1, max_value=3), min_size=1,
                         max_size=6), min_size=1, max_size=6),
       st.integers(min_value=0, max_value=2**31))
@settings(max_examples=60, deadline=None)
def test_purity_property(shape_lists, seed):
    batch = [make_example(pieces) for pieces in shape_lists]
    keywords = KeywordSet(words=frozenset({"w0", "w1", "w3"}), threshold=1)
    out = collate_keyword(batch, keywords, kw_config(), random.Random(seed))
    for example, ids, labels in zip(batch, out.input_ids, out.labels):
        labeled = {i for i, lab in enumerate(labels) if lab != IGNORE_LABEL}
        candidate_positions = set()
        for span, word in zip(example.word_spans, example.word_texts):
            if word in keywords.words:
                candidate_positions.update(range(span[0], span[1]))
        # labels only inside candidate words, covering whole spans
        assert labeled <= candidate_positions
        for span, word in zip(example.word_spans, example.word_texts):
            inside = set(range(span[0], span[1]))
            assert inside <= labeled or not (inside & labeled)
        for i, (token, label) in enumerate(zip(ids, labels)):
            if label == IGNORE_LABEL:
                assert token == example.token_ids[i]
            else:
                assert label == example.token_ids[i]


@given(st.lists(st.lists(st.integers(min_value=1, max_value=3), min_size=1,
                         max_size=5), min_size=1, max_size=5),
       st.integers(min_value=0, max_value=2**31))
@settings(max_examples=40, deadline=None)
def test_random_mode_purity_property(shape_lists, seed):
    batch = [make_example(pieces) for pieces in shape_lists]
    out = collate_random(batch, rnd_config(), random.Random(seed))
    for example, ids, labels in zip(batch, out.input_ids, out.labels):
        for i, (token, label) in enumerate(zip(ids, labels)):
            if label == IGNORE_LABEL:
                assert token == example.token_ids[i]
            else:
                assert i not in example.special_positions
                assert label == example.token_ids[i]


def test_masking_coverage(keyword_set):
    examples = [make_example([2, 1, 3])]  # w0 (kw, 2 pieces), w1, w2 (kw, 3 pieces)
    assert masking_coverage(examples, keyword_set) == pytest.approx(5 / 6)
    nothing = KeywordSet(words=frozenset({"zz"}), threshold=1)
    assert masking_coverage(examples, nothing) == 0.0
    everything = KeywordSet(words=frozenset({"w0", "w1", "w2"}), threshold=1)
    assert masking_coverage(examples, everything) == 1.0
    assert masking_coverage([], keyword_set) == 0.0


def test_masking_coverage_matches_naive_scan(keyword_set):
    rng = random.Random(8)
    batch = [make_example([rng.randint(1, 4) for _ in range(rng.randint(1, 8))])
             for _ in range(50)]
    inside = 0
    total = 0
    for example in batch:
        for position in range(len(example.token_ids)):
            if position in example.special_positions:
                continue
            total += 1
            for span, word in zip(example.word_spans, example.word_texts):
                if span[0] <= position < span[1] and word in keyword_set.words:
                    inside += 1
    assert masking_coverage(batch, keyword_set) == pytest.approx(inside / total)


def test_collator_class_determinism(keyword_set):
    batch = [make_example([2, 1, 2]) for _ in range(5)]
    config = kw_config(seed=21)
    first = Collator(config, keyword_set)
    second = Collator(config, keyword_set)
    assert first(batch) == second(batch)
    assert first(batch) == second(batch)  # streams stay in lockstep
    worker = first.for_worker(3)
    assert worker.config.seed == config.seed + 3


def test_collator_requires_keywords():
    with pytest.raises(ConfigError):
        Collator(kw_config(), None)
    with pytest.raises(ConfigError):
        Collator(kw_config(), KeywordSet.empty())


def test_audit_csv(tmp_path, keyword_set):
    batch = [make_example([2, 1])]
    collator = Collator(kw_config(seed=3), keyword_set)
    out = collator(batch)
    write_audit_csv([out.audit], tmp_path / "audit.csv")
    lines = (tmp_path / "audit.csv").read_text().splitlines()
    assert lines[0].startswith("candidate_units,selected_units")
    assert len(lines) == 2
