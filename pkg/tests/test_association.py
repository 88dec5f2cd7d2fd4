from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biascope.association import (
    AttributeSetPair,
    batch_sc_eat,
    build_group_one_vs_all,
    sc_eat,
)
from biascope.corpus import GROUPS, ItemSubset
from biascope.errors import (
    DegenerateAttributes,
    InsufficientGroupItems,
    UnknownGroup,
)
from conftest import make_corpus


def _pair(corpus, a_rows, b_rows, kind="valence_poles", group=None):
    return AttributeSetPair(a=ItemSubset(corpus, tuple(a_rows)),
                            b=ItemSubset(corpus, tuple(b_rows)),
                            kind=kind, group=group)


def test_hand_example_sqrt2():
    corpus = make_corpus([[1, 0], [0, 1]])
    pair = _pair(corpus, [0], [1])
    es = sc_eat(np.array([1.0, 0.0]), pair)
    assert abs(es.value - math.sqrt(2)) < 1e-9
    es_neg = sc_eat(np.array([0.0, 1.0]), pair)
    assert abs(es_neg.value + math.sqrt(2)) < 1e-9


def test_equal_pole_content_gives_exact_zero():
    corpus = make_corpus([[1, 0], [0, 1], [1, 0], [0, 1]])
    pair = _pair(corpus, [0, 1], [2, 3])
    assert sc_eat(np.array([1.0, 0.0]), pair).value == 0.0
    # same multiset in swapped order still nulls exactly
    pair2 = _pair(corpus, [0, 1], [3, 2])
    assert sc_eat(np.array([1.0, 0.0]), pair2).value == 0.0


def test_antisymmetry_is_exact():
    rng = np.random.default_rng(0)
    corpus = make_corpus(rng.normal(size=(30, 6)))
    pair = _pair(corpus, range(10), range(10, 20))
    flipped = _pair(corpus, range(10, 20), range(10))
    for _ in range(20):
        w = rng.normal(size=6)
        assert sc_eat(w, pair).value == -sc_eat(w, flipped).value


def test_degenerate_attributes_error():
    corpus = make_corpus([[1, 0], [2, 0], [3, 0]])
    pair = _pair(corpus, [0], [1])
    with pytest.raises(DegenerateAttributes):
        sc_eat(np.array([1.0, 1.0]), pair)  # all cosines identical


def test_batch_matches_single():
    rng = np.random.default_rng(4)
    corpus = make_corpus(rng.normal(size=(40, 5)))
    pair = _pair(corpus, range(5), range(5, 10))
    targets = ItemSubset(corpus, tuple(range(10, 20)))
    batch = batch_sc_eat(targets, pair)
    assert [e.target_row for e in batch] == list(range(10, 20))
    for e in batch:
        assert e.value == sc_eat(corpus.matrix64[e.target_row], pair,
                                 target_row=e.target_row).value


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_property_bound_scale_antisym(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    d = int(rng.integers(2, 10))
    corpus = make_corpus(rng.normal(size=(2 * n, d)))
    pair = _pair(corpus, range(n), range(n, 2 * n))
    w = rng.normal(size=d)
    try:
        es = sc_eat(w, pair).value
    except DegenerateAttributes:
        return
    assert abs(es) <= 2.0 + 1e-9  # equal pole sizes bound the effect size
    assert sc_eat(w, _pair(corpus, range(n, 2 * n), range(n))).value == -es
    scaled = sc_eat(float(rng.uniform(0.1, 10.0)) * w, pair).value
    assert abs(scaled - es) < 1e-12


def _group_corpus(rng, per_group):
    n = per_group * len(GROUPS)
    groups = [g for g in GROUPS for _ in range(per_group)]
    return make_corpus(rng.normal(size=(n, 4)), groups=groups)


def test_one_vs_all_counts_and_disjointness():
    rng = np.random.default_rng(9)
    corpus = _group_corpus(rng, 300)
    pair = build_group_one_vs_all(corpus, "BlackWomen", 140, seed=123)
    assert len(pair.a) == 140
    assert len(pair.b) == 840
    assert not set(pair.a.indices) & set(pair.b.indices)
    assert all(corpus.items[r].group == "BlackWomen" for r in pair.a.indices)
    by_group = {g: 0 for g in GROUPS}
    for r in pair.b.indices:
        by_group[corpus.items[r].group] += 1
    assert all(c == 140 for c in by_group.values())


def test_one_vs_all_minimal_and_deterministic():
    rng = np.random.default_rng(1)
    corpus = _group_corpus(rng, 2)
    pair = build_group_one_vs_all(corpus, "AsianMen", 1, seed=5)
    assert len(pair.a) == 1 and len(pair.b) == 6
    again = build_group_one_vs_all(corpus, "AsianMen", 1, seed=5)
    assert pair.a.indices == again.a.indices and pair.b.indices == again.b.indices


def test_one_vs_all_missing_group():
    rng = np.random.default_rng(2)
    per_group = 4
    groups = [g for g in GROUPS if g != "WhiteMen" for _ in range(per_group)]
    corpus = make_corpus(rng.normal(size=(len(groups), 4)), groups=groups)
    with pytest.raises(InsufficientGroupItems) as err:
        build_group_one_vs_all(corpus, "BlackWomen", 2, seed=0)
    assert err.value.group == "WhiteMen"
    with pytest.raises(UnknownGroup):
        build_group_one_vs_all(corpus, "Martians", 2, seed=0)


def test_one_vs_all_within_subset():
    rng = np.random.default_rng(3)
    per_group = 6
    groups = [g for g in GROUPS for _ in range(per_group)]
    tids = [i % 2 for i in range(len(groups))]
    corpus = make_corpus(rng.normal(size=(len(groups), 4)), groups=groups,
                         template_ids=tids)
    scope = corpus.filter(template_id=0)
    pair = build_group_one_vs_all(corpus, "AsianWomen", 1, seed=7, within=scope)
    used = set(pair.a.indices) | set(pair.b.indices)
    assert used <= set(scope.indices)
