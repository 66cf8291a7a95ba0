"""Shared tokenizer: the desk rewrite rules and the similarity metric
both split text the same way so they never disagree about token identity."""

from __future__ import annotations

import re
import string

_STRIP_CHARS = string.punctuation + "…“”‘’"
_WORD_RE = re.compile(r"[\w']+")


def base_form(token: str) -> str:
    """Lowercased token with surrounding punctuation stripped."""
    return token.strip(_STRIP_CHARS).lower()


def split_token(token: str) -> tuple[str, str, str]:
    """Split a whitespace token into (leading punct, core, trailing punct)."""
    m = re.match(r"^(\W*)(.*?)(\W*)$", token, re.DOTALL)
    assert m is not None
    return m.group(1), m.group(2), m.group(3)


def score_tokens(text: str) -> list[str]:
    """Tokens used for similarity scoring: lowercase word/number runs."""
    return _WORD_RE.findall(text.lower())
