import pytest
from hypothesis import given, strategies as st

from fec.core import ngrams, tokenize


def test_whitespace_and_punct_split():
    assert tokenize("Paris is the capital of France.").tokens == (
        "paris", "is", "the", "capital", "of", "france", ".",
    )


def test_empty_input():
    assert tokenize("").tokens == ()


def test_sic_claim_from_error_analysis():
    assert tokenize("Exit the King is by man.").tokens == (
        "exit", "the", "king", "is", "by", "man", ".",
    )


def test_roundtrip_idempotent_at_token_level():
    seq = tokenize("Ghost, the film was released in 1994")
    again = tokenize(seq.detokenize())
    assert again.tokens == seq.tokens


@given(st.text(max_size=80))
def test_tokenize_deterministic(text):
    assert tokenize(text).tokens == tokenize(text).tokens


def test_unigram_counts():
    assert dict(ngrams(("a", "b", "a"), 1).counts) == {("a",): 2, ("b",): 1}


def test_bigram_counts():
    assert dict(ngrams(("a", "b", "a"), 2).counts) == {("a", "b"): 1, ("b", "a"): 1}


def test_short_sequence_yields_empty_multiset():
    assert ngrams(("a",), 2).counts == {}


def test_order_out_of_range():
    with pytest.raises(ValueError):
        ngrams(("a", "b"), 5)
    with pytest.raises(ValueError):
        ngrams(("a", "b"), 0)


@given(st.lists(st.sampled_from("abcde"), max_size=20), st.integers(min_value=1, max_value=4))
def test_total_count_identity(tokens, n):
    assert ngrams(tokens, n).total() == max(0, len(tokens) - n + 1)
