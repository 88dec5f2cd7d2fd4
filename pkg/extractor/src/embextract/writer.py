"""Clean-room writer for the biascope corpus file format.

Two files per corpus: a JSON manifest and a binary matrix. The matrix layout
is magic ``EBPC``, format version as uint16 little-endian (= 1), dim as
uint32 LE, count as uint64 LE, then count*dim float32 LE values row-major
with no padding or trailing bytes. This module intentionally does not import
the biascope package: the file format is the interface.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EBPC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


def write_corpus(out_base: str | Path, matrix: np.ndarray, items: list[dict],
                 source_note: str | None = None) -> tuple[Path, Path]:
    """Write `<base>.json` + `<base>.f32`; items are manifest item objects."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    count, dim = matrix.shape
    if len(items) != count:
        raise ValueError(f"{len(items)} items for {count} matrix rows")
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    if not np.all(norms > 1e-12):
        bad = int(np.argmin(norms))
        raise ValueError(f"row {bad} has (near-)zero norm; corpus would be rejected")

    base = Path(out_base)
    manifest_path = base.with_suffix(".json")
    matrix_path = base.with_suffix(".f32")
    doc = {"format_version": FORMAT_VERSION, "dim": dim, "count": count,
           "items": items}
    if source_note is not None:
        doc["source"] = source_note
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(matrix_path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, count))
        fh.write(matrix.tobytes())
    return manifest_path, matrix_path


def text_item(row: int, sentence, source: str) -> dict:
    doc = {"id": sentence.id, "row": row, "modality": "text", "source": source,
           "template_id": sentence.template_id}
    if sentence.valence is not None:
        doc["valence"] = sentence.valence
    if sentence.group is not None:
        doc["group"] = sentence.group
    return doc


def image_item(row: int, label, source: str) -> dict:
    doc = {"id": label.id, "row": row, "modality": "image", "source": source}
    if label.valence is not None:
        doc["valence"] = label.valence
    if label.group is not None:
        doc["group"] = label.group
    return doc
