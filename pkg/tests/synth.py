"""Synthetic embeddings and post-pair datasets with a known label structure."""

from __future__ import annotations

import string

import numpy as np

from embrel import EmbeddingTable, PostPairRecord


def word_name(prefix: str, i: int) -> str:
    """Letters-only token so text cleaning leaves it intact."""
    letters = string.ascii_lowercase
    out = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        out = letters[r] + out
    return prefix + out


def cluster_table(d: int = 10, words: int = 40, sep: float = 10.0, seed: int = 0, name: str = "synth"):
    """Two word clusters: ``pos*`` words around ``sep * e_0``, ``neg*`` words around ``sep * e_1``."""
    r = np.random.default_rng(seed)
    centres = np.zeros((2, d))
    centres[0, 0] = sep
    centres[1, 1] = sep
    tokens, rows = [], []
    for c, prefix in enumerate(("pos", "neg")):
        for i in range(words):
            tokens.append(word_name(prefix, i))
            rows.append(centres[c] + r.standard_normal(d))
    return EmbeddingTable(tokens, np.array(rows), name=name)


def cluster_pairs(n: int = 200, words: int = 40, seed: int = 0, oov_rate: float = 0.1) -> list[PostPairRecord]:
    """Label-1 pairs use ``pos`` words, label-0 pairs ``neg`` words, with some OOV noise and punctuation."""
    r = np.random.default_rng(seed)
    recs = []
    for i in range(n):
        label = i % 2
        prefix = "pos" if label else "neg"

        def post():
            toks = []
            for _ in range(int(r.integers(3, 9))):
                if r.random() < oov_rate:
                    toks.append(word_name("oov", int(r.integers(0, 500))))
                else:
                    toks.append(word_name(prefix, int(r.integers(0, words))))
            return " ".join(toks) + r.choice(["", "!", "?", ", 42"])

        recs.append(PostPairRecord(post(), post().upper(), label))
    return recs
