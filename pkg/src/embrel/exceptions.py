"""Exception classes raised across the package.

All of them derive from :class:`EmbrelError`; most also derive from
``ValueError`` so callers that only care about bad input can catch that.
"""

from __future__ import annotations


class EmbrelError(Exception):
    """Base class for every error raised by embrel."""


class _LineError(EmbrelError, ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


# embeddings
class MalformedLine(_LineError):
    pass


class NonFiniteComponent(_LineError):
    pass


class DimMismatch(_LineError):
    pass


class EmptyTable(EmbrelError, ValueError):
    pass


# metrics
class LengthMismatch(EmbrelError, ValueError):
    pass


class DegenerateInput(EmbrelError, ValueError):
    pass


class NoPositives(EmbrelError, ValueError):
    pass


# simeval / dataset
class MalformedRow(_LineError):
    pass


class BadLabel(_LineError):
    pass


class EmptySet(EmbrelError, ValueError):
    pass


class EmptyDataset(EmbrelError, ValueError):
    pass


class AllPairsDropped(EmbrelError, ValueError):
    pass


class EvenAnnotatorCount(EmbrelError, ValueError):
    pass


# compose
class TooFewRows(EmbrelError, ValueError):
    pass


class MissingPcaModel(EmbrelError, ValueError):
    pass


# classify
class TooFewTrainingPoints(EmbrelError, ValueError):
    pass


class TooFewInstances(EmbrelError, ValueError):
    pass


class SingleClassData(EmbrelError, ValueError):
    pass
