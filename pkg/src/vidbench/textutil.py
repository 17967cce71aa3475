"""Mixed-script word counting.

One word-count definition is used toolkit-wide (density metrics and the
question-length cap): Han ideographs count one word per character, while
every other script is split on whitespace and each run containing at least
one word character (letter or digit) counts as one word.  Punctuation-only
runs count zero.  Deterministic and locale-independent.
"""

from __future__ import annotations

import re

TOKEN_MODE = "unicode-mixed"

# Han ideograph blocks: unified, extension A, compatibility, extension B+.
_HAN = (
    "一-鿿"
    "㐀-䶿"
    "豈-﫿"
    "\U00020000-\U0002ebef"
)

_TOKEN_RE = re.compile(f"[{_HAN}]|[^\\s{_HAN}]+")
_HAS_WORD_CHAR = re.compile(r"\w", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split *text* into countable word tokens under the mixed-script rule."""
    tokens = []
    for tok in _TOKEN_RE.findall(text):
        if len(tok) == 1 and _is_han(tok):
            tokens.append(tok)
        elif _HAS_WORD_CHAR.search(tok):
            tokens.append(tok)
    return tokens


def word_count(text: str) -> int:
    """Number of words in *text* under the mixed-script rule."""
    return len(tokenize(text))


def _is_han(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0xF900 <= cp <= 0xFAFF
        or 0x20000 <= cp <= 0x2EBEF
    )
