"""Extrinsic bias metrics over retrieval outputs.

Both metrics depend only on the *set* of retrieved rows: values are gathered
in ascending row order, so any permutation of the ranking yields bit-identical
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import GROUPS, EmbeddingCorpus
from .errors import MissingGroupLabel, MissingValence, UnknownGroup
from .retrieval import RetrievalResult


@dataclass(frozen=True)
class ExtrinsicScore:
    """One extrinsic measurement for one query's retrieval."""

    query_row: int
    kind: str  # "mean_valence" | "group_proportion"
    value: float
    k_used: int
    group: str | None = None


def mean_valence(result: RetrievalResult, corpus: EmbeddingCorpus) -> ExtrinsicScore:
    """Arithmetic mean of ground-truth valence over the retrieved items.

    Summed with exact rounding (fsum): retrievals whose valences have equal
    true sums get bit-identical means, whatever sets they came from.
    """
    rows = sorted(result.rows)
    vals = []
    for row in rows:
        v = corpus.items[row].valence
        if v is None:
            raise MissingValence(row)
        vals.append(v)
    value = math.fsum(vals) / len(vals)
    return ExtrinsicScore(query_row=result.query_row, kind="mean_valence",
                          value=value, k_used=len(rows))


def group_proportion(result: RetrievalResult, corpus: EmbeddingCorpus,
                     target_group: str) -> ExtrinsicScore:
    """Fraction of retrieved items labeled with the target group."""
    if target_group not in GROUPS:
        raise UnknownGroup(f"{target_group!r} is not one of {GROUPS}")
    rows = sorted(result.rows)
    hits = 0
    for row in rows:
        g = corpus.items[row].group
        if g is None:
            raise MissingGroupLabel(row)
        if g == target_group:
            hits += 1
    return ExtrinsicScore(query_row=result.query_row, kind="group_proportion",
                          value=hits / len(rows), k_used=len(rows),
                          group=target_group)
