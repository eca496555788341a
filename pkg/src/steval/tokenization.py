"""Tokenization primitives that define the candidate boundaries for resegmentation.

Two granularities are supported: whitespace-delimited words (e.g. German) and
single Unicode scalar values with whitespace dropped (e.g. Chinese, Japanese).
Punctuation is never split off at word level; finer splitting would silently
change the set of candidate cut points.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum


class TokenizationLevel(Enum):
    WORD = "word"
    CHARACTER = "char"

    @classmethod
    def from_string(cls, name: str) -> "TokenizationLevel":
        normalized = name.strip().lower()
        for level in cls:
            if level.value == normalized:
                return level
        if normalized in ("character", "characters"):
            return cls.CHARACTER
        if normalized in ("words",):
            return cls.WORD
        raise ValueError(f"unknown tokenization level: {name!r}")


def nfc(text: str) -> str:
    """NFC-normalize text.

    Applied once at ingestion time so composed/decomposed forms of the same
    character never produce spurious edit-distance mismatches downstream.
    """
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class TokenStream:
    """An ordered sequence of non-empty, whitespace-free tokens at one level."""

    tokens: tuple[str, ...]
    level: TokenizationLevel

    def __post_init__(self) -> None:
        for tok in self.tokens:
            if not tok:
                raise ValueError("token stream contains an empty token")
            if any(ch.isspace() for ch in tok):
                raise ValueError(f"token contains whitespace: {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def slice(self, start: int, stop: int) -> "TokenStream":
        return TokenStream(self.tokens[start:stop], self.level)


def tokenize(text: str, level: TokenizationLevel) -> TokenStream:
    """Split text into a TokenStream.

    WORD splits on runs of Unicode whitespace; CHARACTER yields one token per
    Unicode scalar value, excluding whitespace. Empty text gives an empty
    stream.
    """
    if level is TokenizationLevel.WORD:
        toks = tuple(text.split())
    else:
        toks = tuple(ch for ch in text if not ch.isspace())
    return TokenStream(toks, level)


def join_tokens(stream: TokenStream) -> str:
    """Inverse of tokenize up to whitespace normalization.

    WORD joins with single spaces, CHARACTER concatenates directly, so
    tokenize(join_tokens(s), s.level) always returns s.
    """
    sep = " " if stream.level is TokenizationLevel.WORD else ""
    return sep.join(stream.tokens)


def concat_streams(streams: list[TokenStream]) -> TokenStream:
    """Concatenate streams sharing one level into a single stream."""
    if not streams:
        raise ValueError("cannot concatenate an empty list of streams")
    level = streams[0].level
    for s in streams:
        if s.level is not level:
            raise ValueError(
                f"mixed tokenization levels: {level.value} vs {s.level.value}"
            )
    tokens: list[str] = []
    for s in streams:
        tokens.extend(s.tokens)
    return TokenStream(tuple(tokens), level)


def boundary_offsets(streams: list[TokenStream]) -> tuple[int, ...]:
    """Cumulative token offsets of the stream boundaries within the concatenation.

    Returned separately from concat_streams for diagnostics; always has
    len(streams) + 1 entries starting at 0 and ending at the total length.
    """
    offsets = [0]
    for s in streams:
        offsets.append(offsets[-1] + len(s))
    return tuple(offsets)
