"""Word-similarity evaluation of an embedding table against gold word pairs.

Pairs with an out-of-vocabulary word are dropped and counted before any
vector is touched. Cosine *similarity* is what gets correlated with gold
scores; using distance would flip the sign of Spearman's rho and leave its
magnitude unchanged.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingTable, cosine_similarity
from .exceptions import AllPairsDropped, EmptySet, MalformedRow
from .metrics import average_precision, spearman_rho

GRADED = "graded"
BINARY = "binary"
KINDS = (GRADED, BINARY)

METRIC_FOR_KIND = {GRADED: "spearman_rho", BINARY: "average_precision"}

SIGN_NOTE = "scores are cosine similarities (distance-based rho has the opposite sign, same magnitude)"


@dataclass(frozen=True)
class WordJudgmentSet:
    name: str
    pairs: tuple[tuple[str, str, float], ...]
    kind: str = GRADED

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for w1, w2, gold in self.pairs:
            if not w1 or not w2:
                raise ValueError("words must be non-empty")
            if not math.isfinite(gold):
                raise ValueError(f"non-finite gold score for ({w1}, {w2})")
            if self.kind == BINARY and gold not in (0.0, 1.0):
                raise ValueError(f"binary gold must be 0 or 1, got {gold} for ({w1}, {w2})")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class SimEvalReport:
    model: str
    dataset: str
    metric: str
    value: float
    pairs_total: int
    pairs_dropped: int

    @property
    def drop_fraction(self) -> float:
        return self.pairs_dropped / self.pairs_total

    @property
    def pairs_used(self) -> int:
        return self.pairs_total - self.pairs_dropped


def load_judgments(source, kind: str = GRADED, name: str = "") -> WordJudgmentSet:
    """Read a ``word1,word2,sim`` CSV (header required) from a path, bytes or binary stream."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["word1", "word2", "sim"]:
        raise MalformedRow("expected header 'word1,word2,sim'", 1)
    pairs = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise MalformedRow(f"expected 3 fields, got {len(row)}", lineno)
        w1, w2, raw = (c.strip() for c in row)
        if not w1 or not w2:
            raise MalformedRow("empty word", lineno)
        try:
            gold = float(raw)
        except ValueError:
            raise MalformedRow(f"non-numeric score {raw!r}", lineno) from None
        if not math.isfinite(gold):
            raise MalformedRow(f"non-finite score {raw!r}", lineno)
        if kind == BINARY and gold not in (0.0, 1.0):
            raise MalformedRow(f"binary score must be 0 or 1, got {raw!r}", lineno)
        pairs.append((w1, w2, gold))
    if not pairs:
        raise EmptySet("judgment set has no pairs")
    return WordJudgmentSet(name=name, pairs=tuple(pairs), kind=kind)


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    return data.decode("utf-8-sig")


def evaluate_similarity(table: EmbeddingTable, gold: WordJudgmentSet) -> SimEvalReport:
    """Score every in-vocabulary pair and compare with gold.

    Graded sets are scored with Spearman's rho, binary sets with average
    precision. Raises :class:`AllPairsDropped` when no pair survives.
    """
    if len(gold) == 0:
        raise EmptySet("judgment set has no pairs")
    kept = [(w1, w2, g) for w1, w2, g in gold.pairs if w1 in table and w2 in table]
    dropped = len(gold) - len(kept)
    if not kept:
        raise AllPairsDropped(f"{table.name}/{gold.name}: all {len(gold)} pairs contain OOV words")
    sims = np.array([cosine_similarity(table.lookup(w1), table.lookup(w2)) for w1, w2, _ in kept])
    golds = np.array([g for _, _, g in kept])
    if gold.kind == GRADED:
        value = spearman_rho(sims, golds)
    else:
        value = average_precision(sims, golds.astype(np.int64))
    return SimEvalReport(
        model=table.name,
        dataset=gold.name,
        metric=METRIC_FOR_KIND[gold.kind],
        value=value,
        pairs_total=len(gold),
        pairs_dropped=dropped,
    )


REPORT_FIELDS = ("model", "dataset", "metric", "value", "pairs_total", "pairs_dropped")


def write_reports_csv(reports: Iterable[SimEvalReport], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for r in reports:
        writer.writerow([r.model, r.dataset, r.metric, repr(r.value), r.pairs_total, r.pairs_dropped])


def format_reports_table(reports: Sequence[SimEvalReport]) -> str:
    """Aligned text table, one row per (model, dataset) cell, with drop rates."""
    header = ["model", "dataset", "metric", "value", "total", "dropped", "drop%"]
    rows = [
        [r.model, r.dataset, r.metric, f"{r.value:.4f}", str(r.pairs_total),
         str(r.pairs_dropped), f"{100 * r.drop_fraction:.1f}"]
        for r in reports
    ]
    return "# " + SIGN_NOTE + "\n" + format_table(header, rows)


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"
