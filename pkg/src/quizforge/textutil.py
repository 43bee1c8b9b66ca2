"""Small text helpers shared by the corpus and metric layers."""

import re
import unicodedata

# Maximal alphanumeric runs (Unicode letters and digits, underscore excluded).
WORD_RE = re.compile(r"[^\W_]+")


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def turkish_lower(text: str) -> str:
    """Lowercase with the Turkish dotted/dotless i rules.

    U+0130 (İ) maps to plain "i" and U+0049 (I) maps to dotless "ı"
    before the generic lowercasing runs; plain str.lower() would turn
    "İ" into "i" plus a combining dot.
    """
    text = nfc(text)
    return text.replace("İ", "i").replace("I", "ı").lower()


def words(text: str) -> list[str]:
    """Maximal alphanumeric runs in appearance order."""
    return WORD_RE.findall(text)
