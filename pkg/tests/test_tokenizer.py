"""Vocabulary training, tokenization, and round-trip properties."""

import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textpix.tokenizer import (PAD_ID, UNKNOWN, TokenSequence, Vocabulary,
                               detokenize, load_vocab, save_vocab, tokenize,
                               train_vocab)

words = st.text(alphabet="abcdef", min_size=1, max_size=8)
texts = st.lists(words, min_size=1, max_size=12).map(" ".join)


def test_train_vocab_rejects_empty_corpus():
    with pytest.raises(ValueError):
        train_vocab([], 10)
    with pytest.raises(ValueError):
        train_vocab(["   "], 10)


def test_train_vocab_rejects_tiny_budget():
    # Alphabet {a, ##a} plus <unk> needs at least 3 slots.
    with pytest.raises(ValueError):
        train_vocab(["aa"], 2)


def test_single_word_merge_hand_run():
    # Hand-run: "aa" -> symbols [a, ##a]; size 3 leaves no merge budget,
    # size 4 admits exactly the merge (a, ##a) -> "aa".
    small = train_vocab(["aa"], 3)
    assert set(small.entries) == {"a", "##a", UNKNOWN}
    larger = train_vocab(["aa"], 4)
    assert set(larger.entries) == {"a", "##a", "aa", UNKNOWN}


def test_suffix_units_emerge_from_inflected_words():
    vocab = train_vocab(["walk walking talk talking"], 32)
    assert "walk" in vocab
    assert "talk" in vocab
    assert "##ing" in vocab


def test_ids_are_bijection_onto_range():
    vocab = train_vocab(["walk walking talk talking"], 24)
    ids = sorted(vocab.entries.values())
    assert ids == list(range(1, vocab.size + 1))
    assert PAD_ID not in vocab.entries.values()
    assert vocab.entries[UNKNOWN] == vocab.size


def test_vocabulary_rejects_non_bijective_ids():
    with pytest.raises(ValueError):
        Vocabulary({"a": 1, "b": 3})


def test_tokenize_pads_to_fixed_length():
    vocab = train_vocab(["ab ab cd"], 12)
    seq = tokenize("ab cd", vocab, 6)
    assert seq.length == 6
    assert seq.ids[seq.true_length:].tolist() == [PAD_ID] * (6 - seq.true_length)
    assert (seq.ids[:seq.true_length] != PAD_ID).all()


def test_tokenize_truncates_to_prefix():
    vocab = train_vocab(["a b c d e f"], 16)
    full = tokenize("a b c d e f", vocab, 6)
    cut = tokenize("a b c d e f", vocab, 4)
    assert cut.true_length == 4
    np.testing.assert_array_equal(cut.ids, full.ids[:4])


def test_tokenize_empty_text_is_an_error():
    vocab = train_vocab(["ab"], 8)
    with pytest.raises(ValueError):
        tokenize("", vocab, 4)
    with pytest.raises(ValueError):
        tokenize("   ", vocab, 4)


def test_unknown_word_maps_to_unk_id():
    vocab = train_vocab(["ab ba"], 8)
    seq = tokenize("ab zz", vocab, 5)
    assert vocab.unknown_id in seq.ids.tolist()
    assert seq.ids[seq.true_length - 1] == vocab.unknown_id


def test_token_sequence_invariants_enforced():
    with pytest.raises(ValueError):
        TokenSequence(np.array([1, 0, 2, 0]), true_length=3)  # pad inside
    with pytest.raises(ValueError):
        TokenSequence(np.array([1, 2, 0, 0]), true_length=3)  # pad counted
    seq = TokenSequence(np.array([1, 2, 0, 0]), true_length=2)
    np.testing.assert_array_equal(seq.mask(), [True, True, False, False])


@settings(max_examples=60, deadline=None)
@given(texts)
def test_padding_iff_past_true_length(text):
    vocab = train_vocab([text], 64)
    seq = tokenize(text, vocab, 24)
    for i in range(seq.length):
        assert (seq.ids[i] == PAD_ID) == (i >= seq.true_length)


@settings(max_examples=60, deadline=None)
@given(texts)
def test_detokenize_round_trip_without_truncation(text):
    vocab = train_vocab([text], 128)
    seq = tokenize(text, vocab, 64)
    if seq.true_length < 64 and vocab.unknown_id not in seq.ids:
        assert detokenize(seq, vocab) == text


def test_detokenize_known_example():
    vocab = train_vocab(["walk walking talk talking"], 32)
    seq = tokenize("walking talk", vocab, 8)
    assert detokenize(seq, vocab) == "walking talk"


@settings(max_examples=30, deadline=None)
@given(st.lists(texts, min_size=1, max_size=4), st.integers(0, 40))
def test_vocab_serialization_round_trip(corpus, extra):
    vocab = train_vocab(corpus, 16 + extra)
    with tempfile.TemporaryDirectory() as tmp:
        first = Path(tmp) / "vocab.tsv"
        second = Path(tmp) / "vocab2.tsv"
        save_vocab(first, vocab)
        loaded = load_vocab(first)
        assert loaded.entries == vocab.entries
        save_vocab(second, loaded)
        assert first.read_bytes() == second.read_bytes()


def test_every_corpus_word_is_representable():
    corpus = ["abc abcd bcd", "dddd a"]
    vocab = train_vocab(corpus, 40)
    for word in " ".join(corpus).split():
        seq = tokenize(word, vocab, 16)
        assert vocab.unknown_id not in seq.ids[:seq.true_length]
        assert detokenize(seq, vocab) == word
