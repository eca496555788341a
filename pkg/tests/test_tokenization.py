import pytest
from hypothesis import given, strategies as st

from steval.tokenization import (
    TokenStream,
    TokenizationLevel,
    boundary_offsets,
    concat_streams,
    join_tokens,
    nfc,
    tokenize,
)

WORD = TokenizationLevel.WORD
CHAR = TokenizationLevel.CHARACTER


def test_word_split():
    assert tokenize("wir gehen davon", WORD).tokens == ("wir", "gehen", "davon")


def test_empty_text_char():
    assert tokenize("", CHAR).tokens == ()


def test_char_excludes_whitespace():
    assert tokenize("我们 假设", CHAR).tokens == ("我", "们", "假", "设")


def test_word_split_on_unicode_whitespace_runs():
    assert tokenize("a b\t\tc \n d", WORD).tokens == ("a", "b", "c", "d")


def test_join_word():
    assert join_tokens(TokenStream(("a", "b"), WORD)) == "a b"


def test_join_char():
    assert join_tokens(TokenStream(("我", "们"), CHAR)) == "我们"


def test_join_empty():
    assert join_tokens(TokenStream((), WORD)) == ""


def test_concat_order_preserved():
    streams = [TokenStream(("a",), WORD), TokenStream(("b", "c"), WORD)]
    assert concat_streams(streams).tokens == ("a", "b", "c")


def test_concat_single_empty():
    assert concat_streams([TokenStream((), WORD)]).tokens == ()


def test_concat_empty_middle():
    streams = [
        TokenStream(("x", "y"), CHAR),
        TokenStream((), CHAR),
        TokenStream(("z",), CHAR),
    ]
    assert concat_streams(streams).tokens == ("x", "y", "z")


def test_concat_mixed_levels_rejected():
    with pytest.raises(ValueError, match="mixed"):
        concat_streams([TokenStream(("a",), WORD), TokenStream(("b",), CHAR)])


def test_stream_rejects_empty_token():
    with pytest.raises(ValueError):
        TokenStream(("a", ""), WORD)


def test_stream_rejects_whitespace_token():
    with pytest.raises(ValueError):
        TokenStream(("a b",), WORD)


def test_boundary_offsets():
    streams = [TokenStream(("a",), WORD), TokenStream((), WORD), TokenStream(("b", "c"), WORD)]
    assert boundary_offsets(streams) == (0, 1, 1, 3)


def test_nfc_composes():
    decomposed = "á"  # a + combining acute
    assert nfc(decomposed) == "á"


text_strategy = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60
)


@given(text_strategy, st.sampled_from([WORD, CHAR]))
def test_roundtrip_join_then_tokenize(text, level):
    stream = tokenize(text, level)
    assert tokenize(join_tokens(stream), level).tokens == stream.tokens


@given(
    st.lists(
        st.lists(st.text(alphabet="abcxyz", min_size=1, max_size=5), max_size=6),
        min_size=1,
        max_size=5,
    )
)
def test_concat_length_is_sum(token_lists):
    streams = [TokenStream(tuple(toks), WORD) for toks in token_lists]
    combined = concat_streams(streams)
    assert len(combined) == sum(len(s) for s in streams)
    assert boundary_offsets(streams)[-1] == len(combined)


@given(text_strategy)
def test_tokens_never_contain_whitespace(text):
    for level in (WORD, CHAR):
        for tok in tokenize(text, level).tokens:
            assert tok and not any(ch.isspace() for ch in tok)


def test_level_from_string():
    assert TokenizationLevel.from_string("word") is WORD
    assert TokenizationLevel.from_string("char") is CHAR
    assert TokenizationLevel.from_string("Character") is CHAR
    with pytest.raises(ValueError):
        TokenizationLevel.from_string("syllable")
