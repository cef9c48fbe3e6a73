"""Post text normalization: markup/link stripping, tokenization, lemma lookup.

The order is fixed: clean (strip tags, links, non-letters, lowercase),
then whitespace tokenization, then lemma substitution.
"""

from __future__ import annotations

import os
import re
from typing import Iterable, Mapping

from sklearn.base import BaseEstimator, TransformerMixin

# an unclosed '<' swallows the rest of its line
_TAG_RE = re.compile(r"<[^>\n]*(?:>|$)", re.MULTILINE)
_LINK_RE = re.compile(r"(?<!\w)(?:https?://|www\.)\S*", re.IGNORECASE)


def clean_text(raw: str) -> str:
    """Strip HTML tags and hyperlinks, replace every non-letter with a space, lowercase.

    Tags and links are replaced by a space so neighbouring words stay apart,
    and whitespace runs collapse to one space: ``"abc123def"`` -> ``"abc def"``.
    """
    if not raw:
        return ""
    text = _TAG_RE.sub(" ", raw)
    text = _LINK_RE.sub(" ", text)
    text = "".join(ch if ch.isalpha() or ch.isspace() else " " for ch in text)
    text = text.lower()
    # lower() can emit combining marks (e.g. 'İ' -> 'i̇'); drop anything non-letter again
    if not all(ch.isalpha() or ch.isspace() for ch in text):
        text = "".join(ch if ch.isalpha() or ch.isspace() else " " for ch in text)
    return _squeeze(text)


def _squeeze(text: str) -> str:
    return " ".join(text.split())


def tokenize(cleaned: str) -> list[str]:
    return cleaned.split()


def lemmatize(tokens: Iterable[str], lemmas: Mapping[str, str] | None) -> list[str]:
    """Replace each token by its lemma when the map has one."""
    if not lemmas:
        return list(tokens)
    return [lemmas.get(t, t) for t in tokens]


def load_lemmas(path: str | os.PathLike | None) -> dict[str, str]:
    """Read a ``surface<TAB>lemma`` TSV. ``None`` gives the identity (empty) map.

    Lines starting with ``#`` and blank lines are skipped.
    """
    if path is None:
        return {}
    lemmas: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}: line {lineno}: expected 'surface<TAB>lemma'")
            surface, lemma = parts
            if lemmas.get(surface, lemma) != lemma:
                raise ValueError(f"{path}: line {lineno}: conflicting lemma for {surface!r}")
            lemmas[surface] = lemma
    return lemmas


def preprocess(raw: str, lemmas: Mapping[str, str] | None = None) -> list[str]:
    return lemmatize(tokenize(clean_text(raw)), lemmas)


class TextPreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping raw texts to token lists.

    Parameters
    ----------
    lemmas : mapping, optional
        Surface form to lemma; missing forms pass through unchanged.
    """

    def __init__(self, lemmas: Mapping[str, str] | None = None):
        self.lemmas = lemmas

    def fit(self, X, y=None):
        return self

    def __sklearn_is_fitted__(self) -> bool:
        return True

    def transform(self, X) -> list[list[str]]:
        return [preprocess(x, self.lemmas) for x in X]
