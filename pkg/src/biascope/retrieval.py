"""Exact cosine scoring and deterministic top-k retrieval.

Brute force by design: scores are computed in double precision against every
candidate and ranked by a full (score descending, row ascending) sort, so the
result is reproducible to the bit regardless of worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import ItemSubset
from .errors import DimensionMismatch, KTooLarge, ZeroNormVector

_MIN_NORM = 1e-12


@dataclass(frozen=True)
class RetrievalResult:
    """Top-k rows for one query, scores non-increasing, ties by ascending row."""

    query_row: int
    rows: tuple[int, ...]
    scores: tuple[float, ...]

    @property
    def ranked(self) -> tuple[tuple[int, float], ...]:
        return tuple(zip(self.rows, self.scores))

    @property
    def k(self) -> int:
        return len(self.rows)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in double precision, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    nu = float(np.sqrt(u @ u))
    nv = float(np.sqrt(v @ v))
    if not nu > _MIN_NORM:
        raise ZeroNormVector(-1, "query/left vector has zero norm")
    if not nv > _MIN_NORM:
        raise ZeroNormVector(-1, "right vector has zero norm")
    return float(np.clip((u @ v) / (nu * nv), -1.0, 1.0))


def _query_scores(query: np.ndarray, cand_matrix: np.ndarray,
                  cand_norms: np.ndarray) -> np.ndarray:
    qnorm = float(np.sqrt(query @ query))
    if not qnorm > _MIN_NORM:
        raise ZeroNormVector(-1, "query vector has zero norm")
    scores = cand_matrix @ query
    scores /= cand_norms * qnorm
    np.clip(scores, -1.0, 1.0, out=scores)
    return scores


def _rank_top_k(rows: np.ndarray, scores: np.ndarray, k: int,
                query_row: int) -> RetrievalResult:
    # lexsort: primary key last -> sort by score desc, then row asc
    order = np.lexsort((rows, -scores))[:k]
    return RetrievalResult(
        query_row=query_row,
        rows=tuple(int(r) for r in rows[order]),
        scores=tuple(float(s) for s in scores[order]),
    )


def top_k(query: np.ndarray, candidates: ItemSubset, k: int, *,
          query_row: int = -1) -> RetrievalResult:
    """The k candidates with highest cosine to the query.

    Equivalent to fully sorting all candidates by (score descending, row
    ascending) and truncating to k.
    """
    if k < 1:
        raise KTooLarge("k must be positive")
    if k > len(candidates):
        raise KTooLarge(f"k={k} exceeds {len(candidates)} candidates")
    query = np.asarray(query, dtype=np.float64)
    corpus = candidates.corpus
    if query.ndim != 1 or query.shape[0] != corpus.dim:
        raise DimensionMismatch(
            f"query has shape {query.shape}, corpus dim is {corpus.dim}")
    rows = candidates.rows_array()
    scores = _query_scores(query, corpus.matrix64[rows], corpus.norms[rows])
    return _rank_top_k(rows, scores, k, query_row)


def batch_retrieve(queries: ItemSubset, candidates: ItemSubset, k: int,
                   jobs: int = 1) -> list[RetrievalResult]:
    """Map :func:`top_k` over query rows; output order follows query order.

    ``jobs`` only controls thread-level parallelism across queries; results
    are identical for any worker count.
    """
    corpus = queries.corpus

    def one(row: int) -> RetrievalResult:
        try:
            return top_k(corpus.matrix64[row], candidates, k, query_row=row)
        except ZeroNormVector as exc:
            raise ZeroNormVector(row, "query vector has zero norm") from exc

    rows = list(queries.indices)
    if not rows:
        return []
    if jobs <= 1 or len(rows) == 1:
        return [one(r) for r in rows]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, rows))
