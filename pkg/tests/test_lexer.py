import pytest
from hypothesis import given, strategies as st

from almc.errors import InputError
from almc.syntax.lexer import KEYWORDS, SYMBOLS, Token, tokenize


def kinds(text):
    return [(t.kind, t.text) for t in tokenize(text)[:-1]]


def test_empty_input_is_just_eof():
    toks = tokenize("")
    assert len(toks) == 1 and toks[0].kind == "eof"


def test_identifier_variable_number():
    assert kinds("loc_in Box 42") == [
        ("ident", "loc_in"), ("var", "Box"), ("int", "42")]


def test_keywords_are_reserved():
    assert kinds("module m") == [("kw", "module"), ("ident", "m")]
    assert kinds("causes impossible") == [
        ("kw", "causes"), ("kw", "impossible")]


def test_object_is_soft_keyword():
    # structural only in the header "object constants"
    assert kinds("object constants")[0] == ("kw", "object")
    assert kinds("object = nucleus")[0] == ("ident", "object")
    assert kinds("object")[0] == ("ident", "object")


def test_greedy_symbols():
    assert [k for k, _ in kinds("a :: b")] == ["ident", "::", "ident"]
    assert [k for k, _ in kinds("[0..8]")] == ["[", "int", "..", "int", "]"]
    assert [k for k, _ in kinds("X != Y")] == ["var", "!=", "var"]
    assert [k for k, _ in kinds("s -> t")] == ["ident", "->", "ident"]


def test_comments_run_to_end_of_line():
    assert kinds("a % rest is ignored :: ->\nb") == [
        ("ident", "a"), ("ident", "b")]


def test_spans_locate_tokens():
    toks = tokenize("ab\n  cd", "f.alm")
    assert toks[0].span.line == 1 and toks[0].span.col == 1
    assert toks[1].span.line == 2 and toks[1].span.col == 3
    assert toks[1].span.filename == "f.alm"


def test_unexpected_character_is_located():
    with pytest.raises(InputError) as exc:
        tokenize("a @ b")
    assert exc.value.span.col == 3


_WORDS = st.one_of(
    st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True),
    st.from_regex(r"[A-Z][a-z0-9_]{0,6}", fullmatch=True),
    st.integers(min_value=0, max_value=9999).map(str),
    st.sampled_from(sorted(KEYWORDS)),
    st.sampled_from(SYMBOLS),
)


@given(st.lists(_WORDS, max_size=30))
def test_space_separated_tokens_round_trip(words):
    text = " ".join(words)
    toks = tokenize(text)[:-1]
    assert [t.text for t in toks] == words
    # re-tokenizing the token texts is a fixpoint
    assert [t.text for t in tokenize(" ".join(t.text for t in toks))[:-1]] \
        == [t.text for t in toks]


@given(st.lists(_WORDS, max_size=30), st.integers(0, 3))
def test_whitespace_and_comments_are_invisible(words, style):
    sep = {0: " ", 1: "\t", 2: "\n", 3: " %c\n"}[style]
    text = sep.join(words)
    assert [t.text for t in tokenize(text)[:-1]] == words


def test_token_equality_ignores_span():
    assert tokenize("abc")[0] == Token("ident", "abc")
