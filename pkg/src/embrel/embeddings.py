"""Pre-trained word-embedding tables.

Tables are read from the word2vec text format (optional ``"V D"`` header
line) or the headerless GloVe text format, held as an immutable float64
matrix plus a token index, and served through :meth:`EmbeddingTable.lookup`.
Binary formats are not supported.
"""

from __future__ import annotations

import io
import logging
import math
import os
from typing import IO, Iterable, Iterator, Mapping

import numpy as np

from .exceptions import DimMismatch, EmptyTable, MalformedLine, NonFiniteComponent

logger = logging.getLogger(__name__)

_CHUNK_LINES = 8192


class EmbeddingTable:
    """Immutable mapping from token to a dense vector of fixed dimension.

    Parameters
    ----------
    tokens : iterable of str
        Unique, non-empty, whitespace-free tokens.
    vectors : array-like of shape (n_tokens, dim)
        Finite real vectors, row ``i`` belongs to ``tokens[i]``.
    name : str
        Free-form model label, e.g. ``"fasttext"``.
    """

    def __init__(self, tokens: Iterable[str], vectors, name: str = ""):
        tokens = list(tokens)
        vectors = np.array(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError(
                f"expected {len(tokens)} vectors as a 2-D array, got shape {vectors.shape}"
            )
        if not tokens:
            raise EmptyTable("embedding table has no entries")
        if vectors.shape[1] < 1:
            raise ValueError("vector dimension must be positive")
        if not np.all(np.isfinite(vectors)):
            raise NonFiniteComponent("embedding table contains non-finite components")
        index = {}
        for i, tok in enumerate(tokens):
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"invalid token {tok!r}")
            if tok in index:
                raise ValueError(f"duplicate token {tok!r}")
            index[tok] = i
        vectors.setflags(write=False)
        self._tokens = tuple(tokens)
        self._index = index
        self._vectors = vectors
        self.name = name
        self.n_duplicates = 0

    @classmethod
    def from_dict(cls, mapping: Mapping[str, Iterable[float]], name: str = "") -> "EmbeddingTable":
        tokens = list(mapping)
        return cls(tokens, [list(mapping[t]) for t in tokens], name=name)

    @property
    def dim(self) -> int:
        return self._vectors.shape[1]

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._tokens

    @property
    def vectors(self) -> np.ndarray:
        """Read-only ``(n_tokens, dim)`` matrix in token order."""
        return self._vectors

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __repr__(self) -> str:
        return f"EmbeddingTable(name={self.name!r}, size={len(self)}, dim={self.dim})"

    def lookup(self, token: str) -> np.ndarray | None:
        """Return the (read-only) vector for ``token``, or None when it is OOV."""
        i = self._index.get(token)
        if i is None:
            return None
        return self._vectors[i]

    def equals(self, other: "EmbeddingTable") -> bool:
        return (
            self._tokens == other._tokens
            and self._vectors.shape == other._vectors.shape
            and bool(np.array_equal(self._vectors, other._vectors))
        )

    def save(self, target: str | os.PathLike | IO[bytes], header: bool = True) -> None:
        """Write the table in word2vec text format.

        Components are written with ``repr`` so a reload is bit-exact.
        """
        def _write(fh):
            if header:
                fh.write(f"{len(self)} {self.dim}\n".encode("utf-8"))
            for tok, row in zip(self._tokens, self._vectors):
                line = tok + " " + " ".join(repr(float(x)) for x in row) + "\n"
                fh.write(line.encode("utf-8"))

        if isinstance(target, (str, os.PathLike)):
            with open(target, "wb") as fh:
                _write(fh)
        else:
            _write(target)


def lookup(table: EmbeddingTable, token: str) -> np.ndarray | None:
    return table.lookup(token)


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between ``u`` and ``v``.

    Returns 0.0 when either vector has zero norm, so all-OOV mean vectors
    never break a pipeline.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(float(np.dot(u, u)))
    nv = math.sqrt(float(np.dot(v, v)))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    sim = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, sim))


def cosine_distance(u, v) -> float:
    return 1.0 - cosine_similarity(u, v)


def _parse_components(fields: list[str], lineno: int) -> list[float]:
    out = []
    for f in fields:
        try:
            x = float(f)
        except ValueError:
            raise MalformedLine(f"non-numeric component {f!r}", lineno) from None
        if not math.isfinite(x):
            raise NonFiniteComponent(f"non-finite component {f!r}", lineno)
        out.append(x)
    return out


def _is_positive_int(s: str) -> bool:
    return s.isdigit() and int(s) > 0


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline=None), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), True
    return io.TextIOWrapper(source, encoding="utf-8"), False


def load_embeddings(source, expected_dim: int | None = None, name: str = "") -> EmbeddingTable:
    """Parse a word2vec- or GloVe-format text table.

    ``source`` may be a path, raw bytes, or a binary stream. The first line
    is a ``"V D"`` header only if both fields are positive integers and the
    next line carries exactly ``D`` components; otherwise it is a vector
    line. On duplicate tokens the first occurrence wins and the rest are
    counted in ``table.n_duplicates``.
    """
    if expected_dim is not None and expected_dim < 1:
        raise ValueError("expected_dim must be positive")
    fh, owned = _open_text(source)
    try:
        lines = _numbered_nonblank(fh)
        first = next(lines, None)
        if first is None:
            raise EmptyTable("embedding source is empty")
        header_vocab = None
        pending = [first]
        fields = first[1].split()
        if len(fields) == 2 and all(_is_positive_int(f) for f in fields):
            second = next(lines, None)
            if second is None:
                raise EmptyTable("embedding source has a header but no vectors")
            if len(second[1].split()) - 1 == int(fields[1]):
                header_vocab = int(fields[0])
                pending = [second]
            else:
                pending.append(second)

        tokens: list[str] = []
        seen: set[str] = set()
        chunks: list[np.ndarray] = []
        buf: list[str] = []
        buf_lines: list[int] = []
        dim = None
        n_dup = 0

        def flush():
            if not buf:
                return
            try:
                arr = np.array(buf, dtype=np.float64)
            except ValueError:
                # locate the offending line for the message
                for k, ln in enumerate(buf_lines):
                    _parse_components(buf[k * dim:(k + 1) * dim], ln)
                raise
            arr = arr.reshape(-1, dim)
            bad = ~np.isfinite(arr)
            if bad.any():
                row = int(np.argmax(bad.any(axis=1)))
                raise NonFiniteComponent("non-finite component", buf_lines[row])
            chunks.append(arr)
            buf.clear()
            buf_lines.clear()

        def consume(lineno: int, text: str):
            nonlocal dim, n_dup
            parts = text.split()
            if len(parts) < 2:
                raise MalformedLine("expected a token followed by components", lineno)
            width = len(parts) - 1
            if dim is None:
                dim = width
                if expected_dim is not None and dim != expected_dim:
                    raise DimMismatch(f"expected dim {expected_dim}, found {dim}", lineno)
            elif width != dim:
                raise DimMismatch(f"expected {dim} components, found {width}", lineno)
            tok = parts[0]
            if tok in seen:
                n_dup += 1
                # still validate the line
                _parse_components(parts[1:], lineno)
                return
            seen.add(tok)
            tokens.append(tok)
            buf.extend(parts[1:])
            buf_lines.append(lineno)
            if len(buf_lines) >= _CHUNK_LINES:
                flush()

        for lineno, text in pending:
            consume(lineno, text)
        for lineno, text in lines:
            consume(lineno, text)
        flush()
    finally:
        if owned:
            fh.close()
        else:
            fh.detach()

    if not tokens:
        raise EmptyTable("embedding source has no vectors")
    if n_dup:
        logger.warning("%s: %d duplicate token(s) ignored, first occurrence kept", name or "embeddings", n_dup)
    if header_vocab is not None and header_vocab != len(tokens) + n_dup:
        logger.warning(
            "%s: header declares %d vectors, file has %d", name or "embeddings", header_vocab, len(tokens) + n_dup
        )
    table = EmbeddingTable.__new__(EmbeddingTable)
    vectors = np.concatenate(chunks, axis=0)
    vectors.setflags(write=False)
    table._tokens = tuple(tokens)
    table._index = {t: i for i, t in enumerate(tokens)}
    table._vectors = vectors
    table.name = name
    table.n_duplicates = n_dup
    return table


def _numbered_nonblank(fh: IO[str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(fh, start=1):
        if line.strip():
            yield lineno, line
