from __future__ import annotations

import numpy as np
import pytest

from biascope.corpus import GROUPS
from biascope.errors import MissingGroupLabel, MissingValence, UnknownGroup
from biascope.metrics import group_proportion, mean_valence
from biascope.retrieval import RetrievalResult, top_k
from conftest import make_corpus


def _result(rows, scores=None, query_row=0):
    scores = scores or tuple(1.0 for _ in rows)
    return RetrievalResult(query_row=query_row, rows=tuple(rows),
                           scores=tuple(scores))


def test_mean_valence_hand_values():
    corpus = make_corpus(np.eye(3), valences=[0.2, 0.8, 0.5])
    score = mean_valence(_result([0, 1, 2]), corpus)
    assert score.value == pytest.approx(0.5, abs=1e-12)
    assert score.kind == "mean_valence" and score.k_used == 3


def test_mean_valence_full_corpus_is_query_independent():
    rng = np.random.default_rng(1)
    vals = list(rng.uniform(0, 1, 10))
    corpus = make_corpus(rng.normal(size=(10, 4)), valences=vals)
    expected = float(np.mean(vals))
    for q in range(3):
        res = top_k(corpus.matrix64[q], corpus.all_rows(), 10, query_row=q)
        assert mean_valence(res, corpus).value == pytest.approx(expected, abs=1e-12)


def test_mean_valence_missing_rating():
    corpus = make_corpus(np.eye(3), valences=[0.2, None, 0.5])
    with pytest.raises(MissingValence) as err:
        mean_valence(_result([0, 1]), corpus)
    assert err.value.row == 1


def test_mean_valence_permutation_invariant_exactly():
    rng = np.random.default_rng(2)
    corpus = make_corpus(rng.normal(size=(8, 3)), valences=list(rng.uniform(0, 1, 8)))
    rows = [5, 2, 7, 0, 3]
    base = mean_valence(_result(rows), corpus).value
    for perm in ([0, 2, 3, 5, 7], [7, 5, 3, 2, 0], [3, 7, 2, 5, 0]):
        assert mean_valence(_result(perm), corpus).value == base


def test_group_proportion_hand_values():
    groups = ["BlackWomen", "BlackWomen", "BlackWomen", "WhiteMen", "AsianMen"]
    corpus = make_corpus(np.eye(5), groups=groups)
    score = group_proportion(_result(range(5)), corpus, "BlackWomen")
    assert score.value == pytest.approx(0.6, abs=1e-15)
    assert group_proportion(_result(range(5)), corpus, "AsianWomen").value == 0.0


def test_group_proportion_partition_identity():
    rng = np.random.default_rng(3)
    groups = [GROUPS[int(g)] for g in rng.integers(0, 6, 30)]
    corpus = make_corpus(rng.normal(size=(30, 4)), groups=groups)
    res = top_k(corpus.matrix64[0], corpus.all_rows(), 13, query_row=0)
    total = sum(group_proportion(res, corpus, g).value for g in GROUPS)
    assert abs(total - 1.0) <= 1e-12


def test_group_proportion_errors():
    corpus = make_corpus(np.eye(3), groups=["BlackWomen", None, "WhiteMen"])
    with pytest.raises(MissingGroupLabel) as err:
        group_proportion(_result([0, 1]), corpus, "BlackWomen")
    assert err.value.row == 1
    with pytest.raises(UnknownGroup):
        group_proportion(_result([0]), corpus, "Hobbits")
