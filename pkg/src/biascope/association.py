"""Intrinsic association measurement: SC-EAT effect sizes and attribute-set builders.

The single-category effect size of a target embedding w against attribute
poles A and B is

    es(w, A, B) = [mean cos(w, a) - mean cos(w, b)] / sd cos(w, x),  x in A∪B

with the sample standard deviation (divisor |A∪B| - 1). Means and the pooled
deviation are taken over value-sorted cosine arrays, which makes swapping the
poles an exact sign flip and makes equal cosine multisets yield exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import GROUPS, AttributeSetPair, EmbeddingCorpus, ItemSubset
from .errors import (
    DegenerateAttributes,
    DimensionMismatch,
    EmptySet,
    InsufficientGroupItems,
    UnknownGroup,
)

_MIN_SPREAD = 1e-12

__all__ = [
    "AttributeSetPair",
    "EffectSize",
    "sc_eat",
    "batch_sc_eat",
    "build_group_one_vs_all",
]


@dataclass(frozen=True)
class EffectSize:
    """Cohen's-d-style association of one target with an attribute pair."""

    target_row: int
    value: float
    n_a: int
    n_b: int


def _pole_cosines(target: np.ndarray, subset: ItemSubset) -> np.ndarray:
    corpus = subset.corpus
    rows = subset.rows_array()
    qnorm = float(np.sqrt(target @ target))
    cos = (corpus.matrix64[rows] @ target) / (corpus.norms[rows] * qnorm)
    np.clip(cos, -1.0, 1.0, out=cos)
    return np.sort(cos)


def sc_eat(target: np.ndarray, pair: AttributeSetPair, *,
           target_row: int = -1) -> EffectSize:
    """Effect size of one target embedding against an attribute pair."""
    target = np.asarray(target, dtype=np.float64)
    if len(pair.a) == 0 or len(pair.b) == 0:
        raise EmptySet("attribute poles must be non-empty")
    corpus = pair.a.corpus
    if target.ndim != 1 or target.shape[0] != corpus.dim:
        raise DimensionMismatch(
            f"target has shape {target.shape}, attribute corpus dim is {corpus.dim}")
    a_cos = _pole_cosines(target, pair.a)
    b_cos = _pole_cosines(target, pair.b)
    pooled = np.sort(np.concatenate([a_cos, b_cos]))
    if pooled.size < 2:
        raise EmptySet("need at least two attribute items in total")
    spread = float(np.std(pooled, ddof=1))
    if not spread > _MIN_SPREAD:
        raise DegenerateAttributes(
            f"attribute cosines of target row {target_row} have no spread")
    value = (float(np.mean(a_cos)) - float(np.mean(b_cos))) / spread
    return EffectSize(target_row=target_row, value=value,
                      n_a=len(pair.a), n_b=len(pair.b))


def batch_sc_eat(targets: ItemSubset, pair: AttributeSetPair) -> list[EffectSize]:
    """Elementwise :func:`sc_eat` over target rows, in target order."""
    corpus = targets.corpus
    return [sc_eat(corpus.matrix64[row], pair, target_row=row)
            for row in targets.indices]


def build_group_one_vs_all(corpus: EmbeddingCorpus, target_group: str,
                           n_per_group: int, seed: int, *,
                           within: ItemSubset | None = None) -> AttributeSetPair:
    """One-vs-all group attribute pair, sampled without replacement.

    A holds ``n_per_group`` items of the target group; B holds ``n_per_group``
    items from each of the six groups (target group included), all disjoint
    from A. Sampling is driven by a generator seeded with ``seed``: A is drawn
    first, then B's per-group draws in canonical group order, so identical
    (seed, corpus, within) always produce identical sets. ``within`` restricts
    the candidate pool (e.g. to one template slice).
    """
    if target_group not in GROUPS:
        raise UnknownGroup(f"{target_group!r} is not one of {GROUPS}")
    if n_per_group < 1:
        raise InsufficientGroupItems(target_group, "n_per_group must be positive")

    pool_items = within.items() if within is not None else corpus.items
    pools: dict[str, list[int]] = {g: [] for g in GROUPS}
    for it in pool_items:
        if it.group in pools:
            pools[it.group].append(it.row)
    for g in GROUPS:
        pools[g].sort()
        need = 2 * n_per_group if g == target_group else n_per_group
        if len(pools[g]) < need:
            raise InsufficientGroupItems(g, f"need {need}, have {len(pools[g])}")

    rng = np.random.default_rng(np.uint64(seed))
    a_rows = _draw(rng, pools[target_group], n_per_group)
    b_rows: list[int] = []
    a_set = set(a_rows)
    for g in GROUPS:
        pool = [r for r in pools[g] if r not in a_set] if g == target_group else pools[g]
        b_rows.extend(_draw(rng, pool, n_per_group))
    a = ItemSubset(corpus, tuple(sorted(a_rows)))
    b = ItemSubset(corpus, tuple(sorted(b_rows)))
    return AttributeSetPair(a=a, b=b, kind="group_one_vs_all", group=target_group)


def _draw(rng: np.random.Generator, pool: list[int], n: int) -> list[int]:
    picked = rng.permutation(np.asarray(pool, dtype=np.int64))[:n]
    return [int(r) for r in picked]
