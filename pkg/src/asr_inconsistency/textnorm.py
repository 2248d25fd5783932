"""Text normalization shared by every transcript source.

All transcripts (greedy, beam reference, LLM reference, ground truth) go
through the same rules so that word-level comparisons are consistent.
"""

from __future__ import annotations

import unicodedata

# Punctuation kept when it sits directly between two word characters
# ("it's", "o-k"); includes the typographic apostrophe.
_INTRA_WORD = {"'", "’", "-"}


def normalize_text(text: str) -> list[str]:
    """Normalize raw text to a list of comparable word tokens.

    NFC-normalize, lowercase, drop punctuation (Unicode category P*) except
    intra-word apostrophes/hyphens, treat the word-delimiter bar as
    whitespace, collapse whitespace, and split. Empty input gives an empty
    list.
    """
    chars = list(unicodedata.normalize("NFC", text).lower())
    n = len(chars)
    kept: list[str] = []
    for i, ch in enumerate(chars):
        if ch == "|":
            # the CTC word delimiter is a boundary, never part of a word
            kept.append(" ")
            continue
        if unicodedata.category(ch).startswith("P"):
            if ch in _INTRA_WORD:
                prev_ok = i > 0 and chars[i - 1].isalnum()
                next_ok = i + 1 < n and chars[i + 1].isalnum()
                if prev_ok and next_ok:
                    kept.append(ch)
            continue
        kept.append(ch)
    return "".join(kept).split()
