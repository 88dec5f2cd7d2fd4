"""Embedding-corpus data model and its on-disk format.

A corpus is stored as two files sharing a base name:

* ``<name>.json`` -- UTF-8 JSON manifest::

      {"format_version": 1, "dim": D, "count": N,
       "source": "<optional provenance note>",
       "items": [{"id", "row", "modality", "source",
                  "group"?, "valence"?, "template_id"?}, ...]}

* ``<name>.f32`` -- binary matrix: magic ``EBPC`` (4 bytes), format version
  as uint16 little-endian (= 1), dim as uint32 LE, count as uint64 LE,
  followed by ``count * dim`` IEEE-754 float32 LE values, row-major.
  No padding, no trailing bytes.

Vectors are stored single-precision; all arithmetic downstream runs on a
double-precision copy. Items of templated text corpora use the id convention
``<stem>#t<template_id>`` so the same underlying word or phrase can be
identified across its template variants.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DuplicateId,
    HeaderMismatch,
    InsufficientItems,
    MalformedManifest,
    MissingValence,
    TruncatedMatrix,
    ZeroNormVector,
)

GROUPS = ("AsianMen", "AsianWomen", "BlackMen", "BlackWomen", "WhiteMen", "WhiteWomen")
MODALITIES = ("image", "text")

MAGIC = b"EBPC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")  # magic, version, dim, count

_MIN_NORM = 1e-12


@dataclass(frozen=True)
class ItemMeta:
    """Metadata for one corpus row."""

    id: str
    row: int
    modality: str
    source: str
    group: str | None = None
    valence: float | None = None
    template_id: int | None = None


def stem_of(item: ItemMeta) -> str:
    """Cross-template identity of a templated text item.

    Strips the ``#t<template_id>`` suffix when present; plain items are their
    own stem.
    """
    if item.template_id is None:
        return item.id
    suffix = f"#t{item.template_id}"
    if item.id.endswith(suffix):
        return item.id[: -len(suffix)]
    return item.id


class EmbeddingCorpus:
    """Immutable embedding matrix plus per-row metadata.

    Safe to share across threads once constructed; per-row Euclidean norms
    are precomputed at load and every row is validated to be nonzero.
    """

    def __init__(self, matrix: np.ndarray, items: Sequence[ItemMeta],
                 source_note: str | None = None):
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise MalformedManifest("matrix must be a non-empty 2-d array")
        self.matrix = matrix
        self.count, self.dim = matrix.shape
        self.items = tuple(sorted(items, key=lambda it: it.row))
        self.source_note = source_note
        _validate_items(self.items, self.count)

        self._matrix64 = matrix.astype(np.float64)
        self.norms = np.sqrt(np.einsum("ij,ij->i", self._matrix64, self._matrix64))
        bad = np.flatnonzero(~(self.norms > _MIN_NORM))
        if bad.size:
            row = int(bad[0])
            detail = "zero norm" if np.isfinite(self.norms[row]) else "non-finite values"
            raise ZeroNormVector(row, detail)
        self.row_by_id = {it.id: it.row for it in self.items}
        self._fingerprint: str | None = None

    @property
    def matrix64(self) -> np.ndarray:
        """Double-precision copy used for all similarity arithmetic."""
        return self._matrix64

    def vector(self, row: int) -> np.ndarray:
        return self._matrix64[row]

    def item(self, row: int) -> ItemMeta:
        return self.items[row]

    def filter(self, *, modality: str | None = None, group: str | None = None,
               template_id: int | None = None, source: str | None = None) -> "ItemSubset":
        """All rows matching the given metadata values, in ascending row order."""
        rows = [
            it.row
            for it in self.items
            if (modality is None or it.modality == modality)
            and (group is None or it.group == group)
            and (template_id is None or it.template_id == template_id)
            and (source is None or it.source == source)
        ]
        return ItemSubset(self, tuple(rows))

    def all_rows(self) -> "ItemSubset":
        return ItemSubset(self, tuple(range(self.count)))

    def fingerprint(self) -> str:
        """Content hash over header, matrix bytes, and canonical metadata."""
        if self._fingerprint is None:
            h = hashlib.sha256()
            h.update(_HEADER.pack(MAGIC, FORMAT_VERSION, self.dim, self.count))
            h.update(np.ascontiguousarray(self.matrix, dtype="<f4").tobytes())
            h.update(json.dumps([_item_to_json(it) for it in self.items],
                                sort_keys=True, separators=(",", ":")).encode())
            h.update((self.source_note or "").encode())
            self._fingerprint = "sha256:" + h.hexdigest()
        return self._fingerprint


@dataclass(frozen=True)
class ItemSubset:
    """An ordered selection of corpus rows."""

    corpus: EmbeddingCorpus
    indices: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise MalformedManifest("subset indices must be unique")
        for i in self.indices:
            if not 0 <= i < self.corpus.count:
                raise MalformedManifest(f"subset index {i} out of range")

    def __len__(self) -> int:
        return len(self.indices)

    def items(self) -> list[ItemMeta]:
        return [self.corpus.items[i] for i in self.indices]

    def rows_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


@dataclass(frozen=True)
class AttributeSetPair:
    """Two disjoint attribute poles used by the association test.

    ``kind`` records how the pair was built: ``valence_poles`` (equal-size
    high/low valence sets) or ``group_one_vs_all`` (one group vs a uniform
    draw from all six groups); ``group`` names the pole group for the latter.
    """

    a: ItemSubset
    b: ItemSubset
    kind: str
    group: str | None = None

    def __post_init__(self):
        if len(self.a) < 1 or len(self.b) < 1:
            raise InsufficientItems("attribute poles must be non-empty")
        if set(self.a.indices) & set(self.b.indices):
            raise MalformedManifest("attribute poles must be disjoint")
        if self.kind == "valence_poles" and len(self.a) != len(self.b):
            raise InsufficientItems("valence poles must have equal sizes")


# -- loading / saving ---------------------------------------------------------

def load_corpus(manifest_path: str | Path, matrix_path: str | Path) -> EmbeddingCorpus:
    """Load and fully validate a corpus from its manifest + matrix files."""
    manifest_path = Path(manifest_path)
    matrix_path = Path(matrix_path)
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise MalformedManifest(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict):
        raise MalformedManifest("manifest root must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise MalformedManifest(f"unsupported format_version {doc.get('format_version')!r}")
    try:
        dim = int(doc["dim"])
        count = int(doc["count"])
        raw_items = doc["items"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"manifest missing required field: {exc}") from exc
    if dim <= 0 or count <= 0:
        raise MalformedManifest("dim and count must be positive")
    if not isinstance(raw_items, list) or len(raw_items) != count:
        raise MalformedManifest(f"items must list exactly count={count} entries")
    source_note = doc.get("source")
    if source_note is not None and not isinstance(source_note, str):
        raise MalformedManifest("manifest source note must be a string")

    items = [_item_from_json(entry, count) for entry in raw_items]

    matrix = _read_matrix(matrix_path, dim, count)
    return EmbeddingCorpus(matrix, items, source_note=source_note)


def save_corpus(corpus: EmbeddingCorpus, manifest_path: str | Path,
                matrix_path: str | Path) -> None:
    """Write the two-file corpus format; the inverse of :func:`load_corpus`."""
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "dim": corpus.dim,
        "count": corpus.count,
        "items": [_item_to_json(it) for it in corpus.items],
    }
    if corpus.source_note is not None:
        doc["source"] = corpus.source_note
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(matrix_path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, corpus.dim, corpus.count))
        fh.write(np.ascontiguousarray(corpus.matrix, dtype="<f4").tobytes())


def corpus_paths(base: str | Path) -> tuple[Path, Path]:
    """Manifest and matrix paths for a corpus base path (or manifest path)."""
    base = Path(base)
    if base.suffix == ".json":
        base = base.with_suffix("")
    return base.with_suffix(".json"), base.with_suffix(".f32")


def _read_matrix(path: Path, dim: int, count: int) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise MalformedManifest(f"cannot read matrix {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise TruncatedMatrix(f"matrix file shorter than its {_HEADER.size}-byte header")
    magic, version, h_dim, h_count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise HeaderMismatch(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise HeaderMismatch(f"unsupported matrix format version {version}")
    if h_dim != dim or h_count != count:
        raise HeaderMismatch(
            f"matrix header (dim={h_dim}, count={h_count}) "
            f"!= manifest (dim={dim}, count={count})")
    payload = blob[_HEADER.size:]
    expected = count * dim * 4
    if len(payload) < expected:
        raise TruncatedMatrix(f"expected {expected} payload bytes, found {len(payload)}")
    if len(payload) > expected:
        raise TruncatedMatrix(f"{len(payload) - expected} trailing bytes after the matrix")
    return np.frombuffer(payload, dtype="<f4").reshape(count, dim)


def _item_from_json(entry: object, count: int) -> ItemMeta:
    if not isinstance(entry, dict):
        raise MalformedManifest("each item must be an object")
    try:
        item_id = entry["id"]
        row = entry["row"]
        modality = entry["modality"]
        source = entry["source"]
    except KeyError as exc:
        raise MalformedManifest(f"item missing required field {exc}") from exc
    if not isinstance(item_id, str) or not item_id:
        raise MalformedManifest("item id must be a non-empty string")
    if not isinstance(row, int) or isinstance(row, bool) or not 0 <= row < count:
        raise MalformedManifest(f"item {item_id!r}: row must be an integer in [0, {count})")
    if modality not in MODALITIES:
        raise MalformedManifest(f"item {item_id!r}: modality must be one of {MODALITIES}")
    if not isinstance(source, str):
        raise MalformedManifest(f"item {item_id!r}: source must be a string")
    group = entry.get("group")
    if group is not None and (not isinstance(group, str) or not group):
        raise MalformedManifest(f"item {item_id!r}: group must be a non-empty string")
    valence = entry.get("valence")
    if valence is not None:
        if isinstance(valence, bool) or not isinstance(valence, (int, float)):
            raise MalformedManifest(f"item {item_id!r}: valence must be a number")
        valence = float(valence)
        if not 0.0 <= valence <= 1.0:
            raise MalformedManifest(f"item {item_id!r}: valence {valence} outside [0, 1]")
    template_id = entry.get("template_id")
    if template_id is not None:
        if not isinstance(template_id, int) or isinstance(template_id, bool) \
                or not 0 <= template_id <= 5:
            raise MalformedManifest(f"item {item_id!r}: template_id must be in [0, 5]")
    return ItemMeta(id=item_id, row=row, modality=modality, source=source,
                    group=group, valence=valence, template_id=template_id)


def _item_to_json(item: ItemMeta) -> dict:
    doc: dict = {"id": item.id, "row": item.row,
                 "modality": item.modality, "source": item.source}
    if item.group is not None:
        doc["group"] = item.group
    if item.valence is not None:
        doc["valence"] = item.valence
    if item.template_id is not None:
        doc["template_id"] = item.template_id
    return doc


def _validate_items(items: Sequence[ItemMeta], count: int) -> None:
    if len(items) != count:
        raise MalformedManifest(f"expected {count} items, got {len(items)}")
    rows = [it.row for it in items]
    if rows != list(range(count)):
        raise MalformedManifest("item rows must be a permutation of 0..count-1")
    seen: set[str] = set()
    for it in items:
        if it.id in seen:
            raise DuplicateId(it.id)
        seen.add(it.id)


# -- selections ---------------------------------------------------------------

def top_valence_split(corpus: EmbeddingCorpus, subset: ItemSubset, n: int) -> AttributeSetPair:
    """Valence poles: A = n highest-valence items, B = n lowest, disjoint.

    Ties in valence are broken by ascending id; A is selected first and B is
    drawn from the remainder, so the poles are disjoint even when ties span
    both of them.
    """
    if n < 1:
        raise InsufficientItems("n must be positive")
    items = subset.items()
    for it in items:
        if it.valence is None:
            raise MissingValence(it.row)
    if len(items) < 2 * n:
        raise InsufficientItems(f"need at least {2 * n} rated items, have {len(items)}")
    top = sorted(items, key=lambda it: (-it.valence, it.id))[:n]
    taken = {it.row for it in top}
    rest = [it for it in items if it.row not in taken]
    bottom = sorted(rest, key=lambda it: (it.valence, it.id))[:n]
    a = ItemSubset(corpus, tuple(sorted(it.row for it in top)))
    b = ItemSubset(corpus, tuple(sorted(it.row for it in bottom)))
    return AttributeSetPair(a=a, b=b, kind="valence_poles")


def select_valence_extremes(corpus: EmbeddingCorpus, subset: ItemSubset,
                            n: int) -> ItemSubset:
    """Rows of the n most and n least valenced items (union of both poles)."""
    pair = top_valence_split(corpus, subset, n)
    return ItemSubset(corpus, tuple(sorted(pair.a.indices + pair.b.indices)))
