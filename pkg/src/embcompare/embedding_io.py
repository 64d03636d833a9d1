"""Reading, validating and aligning text-format word embeddings.

Two on-disk formats are supported:

* ``glove_text``    -- one record per line: ``<word> <v1> ... <vD>``
* ``word2vec_text`` -- same records preceded by a ``<count> <dim>`` header

Values are always parsed as 64-bit floats; words are compared byte-exact
(no case folding, no Unicode normalization).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np


class ParseError(ValueError):
    """An embedding file violates its declared format."""


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A vocabulary plus one dense row vector per word.

    ``values`` has shape ``(len(vocab), n_dims)`` and is made read-only on
    construction so instances can be shared freely between threads.
    """

    vocab: tuple[str, ...]
    values: np.ndarray
    name: str = "embedding"

    def __post_init__(self):
        vocab = tuple(self.vocab)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[1] < 1:
            raise ValueError("embedding must have at least one dimension")
        if len(vocab) != values.shape[0]:
            raise ValueError(
                f"vocabulary has {len(vocab)} words but values has "
                f"{values.shape[0]} rows"
            )
        if len(vocab) == 0:
            raise ValueError("vocabulary is empty")
        if len(set(vocab)) != len(vocab):
            seen: set[str] = set()
            for w in vocab:
                if w in seen:
                    raise ValueError(f"duplicate word {w!r} in vocabulary")
                seen.add(w)
        if not np.isfinite(values).all():
            raise ValueError("embedding contains non-finite values")
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "values", values)

    @property
    def n_words(self) -> int:
        return len(self.vocab)

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]

    @cached_property
    def index(self) -> dict[str, int]:
        """Word -> row lookup, built on first use."""
        return {w: i for i, w in enumerate(self.vocab)}


@dataclass(frozen=True)
class AlignedPair:
    """Two embeddings restricted to a shared vocabulary in identical row order."""

    left: EmbeddingMatrix
    right: EmbeddingMatrix
    shared_count: int
    dropped_left: int = 0
    dropped_right: int = 0

    def __post_init__(self):
        if self.left.vocab != self.right.vocab:
            raise ValueError("left and right vocabularies differ")
        if self.shared_count != len(self.left.vocab) or self.shared_count < 1:
            raise ValueError("shared_count does not match the vocabularies")


def _decoded_lines(source: str | Path | IO) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from _decoded_lines(fh)
        return
    raw: Iterable = source
    for line in raw:
        if isinstance(line, bytes):
            try:
                yield line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"input is not valid UTF-8: {exc}") from None
        else:
            yield line


def _parse_row(parts: list[str], n_dims: int, lineno: int) -> tuple[str, np.ndarray]:
    word = parts[0]
    if len(parts) - 1 != n_dims:
        raise ParseError(
            f"line {lineno}: expected {n_dims} values for {word!r}, "
            f"got {len(parts) - 1}"
        )
    try:
        row = np.fromiter(map(float, parts[1:]), dtype=np.float64, count=n_dims)
    except ValueError:
        raise ParseError(f"line {lineno}: non-numeric value in row {word!r}") from None
    if not np.isfinite(row).all():
        raise ParseError(f"line {lineno}: non-finite value in row {word!r}")
    return word, row


def _looks_like_header(parts: list[str]) -> bool:
    if len(parts) != 2:
        return False
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        return False
    return count > 0 and dim > 0


def parse_embedding(
    source: str | Path | IO,
    format_hint: str = "auto",
    name: str | None = None,
) -> EmbeddingMatrix:
    """Parse a text embedding file into a validated :class:`EmbeddingMatrix`.

    ``format_hint`` is one of ``auto``, ``word2vec_text`` or ``glove_text``.
    In ``auto`` mode the file is treated as word2vec_text exactly when its
    first line parses as two positive integers.  Duplicate words, ragged
    rows, non-finite values and empty files are all hard errors.
    """
    if format_hint not in ("auto", "word2vec_text", "glove_text"):
        raise ValueError(f"unknown format_hint {format_hint!r}")
    if name is None:
        name = Path(source).stem if isinstance(source, (str, Path)) else "embedding"

    lines = _decoded_lines(source)
    first: tuple[int, list[str]] | None = None
    header: tuple[int, int] | None = None
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        first = (lineno, parts)
        break
    if first is None:
        raise ParseError("empty embedding file")

    lineno, parts = first
    if format_hint == "word2vec_text" or (
        format_hint == "auto" and _looks_like_header(parts)
    ):
        if not _looks_like_header(parts):
            raise ParseError(
                f"line {lineno}: expected '<count> <dim>' header, got {parts!r}"
            )
        header = (int(parts[0]), int(parts[1]))
        first = None

    vocab: list[str] = []
    rows: list[np.ndarray] = []
    seen: dict[str, int] = {}
    n_dims = header[1] if header is not None else None

    def consume(parts: list[str], lineno: int) -> None:
        nonlocal n_dims
        if n_dims is None:
            n_dims = len(parts) - 1
            if n_dims < 1:
                raise ParseError(f"line {lineno}: row has a word but no values")
        word, row = _parse_row(parts, n_dims, lineno)
        if word in seen:
            raise ParseError(
                f"line {lineno}: duplicate word {word!r} "
                f"(first seen on line {seen[word]})"
            )
        seen[word] = lineno
        vocab.append(word)
        rows.append(row)

    if first is not None:
        consume(first[1], first[0])
    for lineno, line in enumerate(lines, start=lineno + 1):
        parts = line.split()
        if not parts:
            continue
        consume(parts, lineno)

    if not rows:
        raise ParseError("embedding file has a header but no rows")
    if header is not None and header[0] != len(rows):
        raise ParseError(
            f"header declares {header[0]} rows but file contains {len(rows)}"
        )
    return EmbeddingMatrix(vocab=tuple(vocab), values=np.vstack(rows), name=name)


def write_glove_text(e: EmbeddingMatrix, dest: str | Path | IO) -> None:
    """Serialize in glove_text format with 6 significant digits."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_glove_text(e, fh)
        return
    out: IO = dest
    for word, row in zip(e.vocab, e.values):
        out.write(word)
        for v in row:
            out.write(f" {v:.6g}")
        out.write("\n")


def align_vocabularies(a: EmbeddingMatrix, b: EmbeddingMatrix) -> AlignedPair:
    """Restrict both embeddings to their shared vocabulary, in ``a``'s order.

    Raises ``ValueError`` when the vocabularies are disjoint.  When the
    vocabularies already agree element-for-element the input matrices are
    reused without copying (they are immutable).
    """
    if a.vocab == b.vocab:
        return AlignedPair(left=a, right=b, shared_count=len(a.vocab))

    b_index = b.index
    shared = [w for w in a.vocab if w in b_index]
    if not shared:
        raise ValueError(
            f"embeddings {a.name!r} and {b.name!r} share no vocabulary"
        )
    a_rows = np.fromiter((a.index[w] for w in shared), dtype=np.intp, count=len(shared))
    b_rows = np.fromiter((b_index[w] for w in shared), dtype=np.intp, count=len(shared))
    vocab = tuple(shared)
    left = EmbeddingMatrix(vocab=vocab, values=a.values[a_rows], name=a.name)
    right = EmbeddingMatrix(vocab=vocab, values=b.values[b_rows], name=b.name)
    return AlignedPair(
        left=left,
        right=right,
        shared_count=len(shared),
        dropped_left=a.n_words - len(shared),
        dropped_right=b.n_words - len(shared),
    )


def row_normalize(e: EmbeddingMatrix) -> tuple[EmbeddingMatrix, int]:
    """Scale every row to unit Euclidean norm.

    All-zero rows cannot be normalized; they are left untouched and their
    count is returned alongside the new matrix.
    """
    norms = np.linalg.norm(e.values, axis=1)
    zero = norms == 0.0
    n_zero = int(zero.sum())
    safe = np.where(zero, 1.0, norms)
    values = e.values / safe[:, None]
    return EmbeddingMatrix(vocab=e.vocab, values=values, name=e.name), n_zero
