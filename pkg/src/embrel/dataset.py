"""Post-pair relatedness data: loading, serialization, annotation aggregation.

Pair files are RFC 4180 CSV with the header ``post,op_post,is_related``;
raw annotation files have the header ``pair_id,annotator_id,label``.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import os
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .exceptions import BadLabel, EmptyDataset, EvenAnnotatorCount, MalformedRow

logger = logging.getLogger(__name__)

MAX_POST_CHARS = 216
PAIR_FIELDS = ("post", "op_post", "is_related")
ANNOTATION_FIELDS = ("pair_id", "annotator_id", "label")


@dataclass(frozen=True)
class PostPairRecord:
    post: str
    op_post: str
    is_related: int

    def __post_init__(self):
        if not self.post or not self.op_post:
            raise ValueError("post and op_post must be non-empty")
        if self.is_related not in (0, 1):
            raise ValueError(f"is_related must be 0 or 1, got {self.is_related!r}")


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    label: int


@dataclass(frozen=True)
class PairStats:
    n_records: int
    n_related: int
    n_duplicate_op_posts: int
    n_overlong_posts: int

    @property
    def related_fraction(self) -> float:
        return self.n_related / self.n_records if self.n_records else 0.0


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    return data.decode("utf-8-sig")


def _parse_label(raw: str, lineno: int) -> int:
    raw = raw.strip()
    if raw not in ("0", "1"):
        raise BadLabel(f"label must be 0 or 1, got {raw!r}", lineno)
    return int(raw)


def _rows(source, expected: Sequence[str]):
    reader = csv.reader(io.StringIO(_read_text(source), newline=""))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != list(expected):
        raise MalformedRow(f"expected header {','.join(expected)!r}", 1)
    for row in reader:
        if not row:
            continue
        yield reader.line_num, row


def load_pairs(source) -> list[PostPairRecord]:
    """Read and validate a pair CSV. Posts longer than 216 characters only warn."""
    records = []
    for lineno, row in _rows(source, PAIR_FIELDS):
        if len(row) != 3:
            raise MalformedRow(f"expected 3 fields, got {len(row)}", lineno)
        post, op_post, label = row
        if not post.strip() or not op_post.strip():
            raise MalformedRow("empty post or op_post", lineno)
        records.append(PostPairRecord(post, op_post, _parse_label(label, lineno)))
    if not records:
        raise EmptyDataset("pair dataset has no records")
    stats = pair_stats(records)
    if stats.n_overlong_posts:
        logger.warning("%d post(s) exceed %d characters", stats.n_overlong_posts, MAX_POST_CHARS)
    logger.info(
        "loaded %d pairs: %.1f%% related, %d duplicate op_post(s)",
        stats.n_records, 100 * stats.related_fraction, stats.n_duplicate_op_posts,
    )
    return records


def pair_stats(records: Sequence[PostPairRecord]) -> PairStats:
    op_counts = Counter(r.op_post for r in records)
    return PairStats(
        n_records=len(records),
        n_related=sum(r.is_related for r in records),
        n_duplicate_op_posts=sum(c - 1 for c in op_counts.values()),
        n_overlong_posts=sum(len(r.post) > MAX_POST_CHARS for r in records),
    )


def write_pairs(records: Iterable[PostPairRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(PAIR_FIELDS)
    for r in records:
        writer.writerow([r.post, r.op_post, r.is_related])


def load_annotations(source) -> list[AnnotationRecord]:
    out = []
    seen = set()
    for lineno, row in _rows(source, ANNOTATION_FIELDS):
        if len(row) != 3:
            raise MalformedRow(f"expected 3 fields, got {len(row)}", lineno)
        pair_id, annotator, label = (c.strip() for c in row)
        if not pair_id or not annotator:
            raise MalformedRow("empty pair_id or annotator_id", lineno)
        if (pair_id, annotator) in seen:
            raise MalformedRow(f"annotator {annotator!r} labelled pair {pair_id!r} twice", lineno)
        seen.add((pair_id, annotator))
        out.append(AnnotationRecord(pair_id, annotator, _parse_label(label, lineno)))
    if not out:
        raise EmptyDataset("annotation file has no records")
    return out


def group_by_pair(annotations: Iterable[AnnotationRecord]) -> dict[str, dict[str, int]]:
    """``pair_id -> {annotator_id: label}`` in first-seen pair order."""
    grouped: dict[str, dict[str, int]] = defaultdict(dict)
    for a in annotations:
        if a.annotator_id in grouped[a.pair_id]:
            raise ValueError(f"annotator {a.annotator_id!r} labelled pair {a.pair_id!r} twice")
        grouped[a.pair_id][a.annotator_id] = a.label
    return dict(grouped)


def majority_label(annotations: Iterable[AnnotationRecord]) -> dict[str, int]:
    """Strict-majority label per pair.

    Every pair needs an odd number of annotations; an even count could tie
    and raises :class:`EvenAnnotatorCount` instead of guessing.
    """
    result = {}
    for pair_id, labels in group_by_pair(annotations).items():
        n = len(labels)
        if n % 2 == 0:
            raise EvenAnnotatorCount(f"pair {pair_id!r} has {n} annotations")
        ones = sum(labels.values())
        result[pair_id] = int(2 * ones > n)
    return result


@dataclass(frozen=True)
class AgreementStats:
    n_pairs: int
    n_annotators: int
    unanimity: float
    pairwise_agreement: float


def agreement_stats(annotations: Iterable[AnnotationRecord]) -> AgreementStats:
    """Raw (not chance-corrected) agreement.

    ``unanimity`` is the fraction of pairs where all annotators agree;
    ``pairwise_agreement`` averages, over pairs, the share of annotator
    couples that gave the same label.
    """
    grouped = group_by_pair(annotations)
    annotators = {a for labels in grouped.values() for a in labels}
    if len(annotators) < 2:
        raise ValueError("agreement needs at least 2 annotators")
    unanimous = 0
    agree_shares = []
    for labels in grouped.values():
        vals = list(labels.values())
        unanimous += len(set(vals)) == 1
        couples = list(itertools.combinations(vals, 2))
        if couples:
            agree_shares.append(sum(a == b for a, b in couples) / len(couples))
    return AgreementStats(
        n_pairs=len(grouped),
        n_annotators=len(annotators),
        unanimity=unanimous / len(grouped),
        pairwise_agreement=sum(agree_shares) / len(agree_shares) if agree_shares else 1.0,
    )


def load_pair_texts(source) -> dict[str, tuple[str, str]]:
    """Read ``pair_id,post,op_post`` CSV used to attach texts to aggregated labels."""
    texts = {}
    for lineno, row in _rows(source, ("pair_id", "post", "op_post")):
        if len(row) != 3:
            raise MalformedRow(f"expected 3 fields, got {len(row)}", lineno)
        pair_id = row[0].strip()
        if pair_id in texts:
            raise MalformedRow(f"duplicate pair_id {pair_id!r}", lineno)
        texts[pair_id] = (row[1], row[2])
    return texts


def aggregate_pairs(labels: Mapping[str, int], texts: Mapping[str, tuple[str, str]]) -> list[PostPairRecord]:
    missing = [p for p in labels if p not in texts]
    if missing:
        raise KeyError(f"no text for pair(s): {', '.join(missing[:5])}")
    return [PostPairRecord(texts[p][0], texts[p][1], lab) for p, lab in labels.items()]
