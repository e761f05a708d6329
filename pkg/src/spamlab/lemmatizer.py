"""Rule-based English lemmatizer and the bundled stop-list.

The lemmatizer strips common inflectional suffixes (-s, -es, -ies, -ed, -ing)
with light spelling repairs. It is deliberately small: attribute selection
only needs inflected forms of the same word to collapse together most of the
time, and any callable from token to token can be plugged in instead.
"""

from importlib import resources
from pathlib import Path

# Final double consonants produced by -ed/-ing doubling ("stopped", "running").
# Pairs like "ll" and "ss" usually belong to the stem ("called", "passed").
_DOUBLED = {"bb", "dd", "gg", "mm", "nn", "pp", "rr", "tt"}


def _undouble(stem: str) -> str:
    if len(stem) >= 3 and stem[-2:] in _DOUBLED:
        return stem[:-1]
    return stem


def default_lemmatizer(token: str) -> str:
    """Map an alphabetic token to an approximate base form."""
    w = token
    if len(w) <= 3 or not w.isalpha():
        return w
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("ing") and len(w) > 5:
        return _undouble(w[:-3])
    if w.endswith("ed") and len(w) > 4:
        return _undouble(w[:-2])
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("es") and ((len(w) > 3 and w[-3] in "sxzo")
                             or w.endswith(("ches", "shes"))):
        return w[:-2]
    if w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    return w


def load_stoplist(path=None) -> frozenset[str]:
    """Read a stop-list file: one lowercase word per line, ``#`` comments.

    Without a path, the bundled list of 100 common English function words
    is used.
    """
    if path is None:
        text = resources.files("spamlab").joinpath("data/stopwords_en.txt") \
            .read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)
