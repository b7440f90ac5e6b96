"""Small text helpers used across modules.

A "token" everywhere in this package means a whitespace-delimited word;
truncation budgets are enforced in that space.
"""

from __future__ import annotations

import unicodedata


def canonical(text: str) -> str:
    """Normalize to composed unicode form (NFC)."""
    return unicodedata.normalize("NFC", text)


def squash_ws(text: str) -> str:
    """Collapse all whitespace runs to single spaces and trim."""
    return " ".join(text.split())


def token_count(text: str) -> int:
    return len(text.split())


def truncate_tokens(text: str, limit: int) -> str:
    """Keep only the first `limit` whitespace tokens."""
    toks = text.split()
    if len(toks) <= limit:
        return squash_ws(text)
    return " ".join(toks[:limit])


def sanitize_field(text: str) -> str:
    """Make text safe for one TSV field: no tabs or newlines."""
    return squash_ws(text.replace("\t", " "))
