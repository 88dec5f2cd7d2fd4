from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biascope.errors import (
    ConstantInput,
    DegenerateSpread,
    EmptyInput,
    LengthMismatch,
    TooFewSamples,
)
from biascope.stats import aggregate, fractional_ranks, spearman, zscore


def test_spearman_listed_examples():
    assert spearman([1, 2, 3], [2, 4, 6]).rho == pytest.approx(1.0, abs=1e-12)
    assert spearman([1, 2, 3], [3, 2, 1]).rho == pytest.approx(-1.0, abs=1e-12)
    c = spearman([1, 2, 2, 4], [1, 3, 2, 4])
    assert c.rho == pytest.approx(0.94868330, abs=1e-8)
    assert c.method == "exact_permutation"


def test_fractional_ranks_with_ties():
    assert list(fractional_ranks(np.array([1.0, 2.0, 2.0, 4.0]))) == [1, 2.5, 2.5, 4]
    assert list(fractional_ranks(np.array([3.0, 3.0, 3.0]))) == [2, 2, 2]


def test_spearman_method_switch_and_p_range():
    rng = np.random.default_rng(0)
    small = spearman(rng.normal(size=9), rng.normal(size=9))
    assert small.method == "exact_permutation"
    big = spearman(rng.normal(size=10), rng.normal(size=10))
    assert big.method == "t_approximation"
    for c in (small, big):
        assert 0.0 <= c.p_value <= 1.0


def test_spearman_exact_p_hand_case():
    # n=3, perfectly concordant: only identity and reversal reach |rho| = 1
    c = spearman([1, 2, 3], [10, 20, 30])
    assert c.p_value == pytest.approx(2 / 6, abs=1e-15)


def test_exact_and_t_p_values_agree_in_order():
    # sanity: stronger |rho| gives smaller p under both methods on n=8
    rng = np.random.default_rng(1)
    x = list(range(8))
    weak = [0, 2, 1, 4, 3, 6, 7, 5]
    strong = [0, 1, 2, 3, 4, 5, 7, 6]
    pe = [spearman(x, y).p_value for y in (weak, strong)]
    from biascope.stats import _t_approx_p
    rhos = [spearman(x, y).rho for y in (weak, strong)]
    pt = [_t_approx_p(r, 8) for r in rhos]
    assert pe[1] < pe[0] and pt[1] < pt[0]
    assert abs(pe[0] - pt[0]) < 0.05 and abs(pe[1] - pt[1]) < 0.05


def test_spearman_errors():
    with pytest.raises(LengthMismatch):
        spearman([1, 2, 3], [1, 2])
    with pytest.raises(TooFewSamples):
        spearman([1, 2], [1, 2])
    with pytest.raises(ConstantInput):
        spearman([1, 1, 1], [1, 2, 3])


def test_spearman_self_and_negated():
    rng = np.random.default_rng(5)
    for n in (3, 7, 25):
        x = rng.normal(size=n)
        assert spearman(x, x).rho == 1.0
        assert spearman(x, -x).rho == -1.0


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_monotone_transform_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    x = rng.normal(size=n)
    y = rng.normal(size=n)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return
    base = spearman(x, y).rho
    assert spearman(np.exp(x), y).rho == base
    assert spearman(x, 3.0 * y + 11.0).rho == base
    assert spearman(x ** 3, y).rho == base


def test_zscore_examples():
    assert list(zscore([1, 2, 3])) == pytest.approx([-1, 0, 1], abs=1e-12)
    z = zscore([0.0, 10.0])
    assert z[0] == pytest.approx(-0.70710678, abs=1e-8)
    assert z[1] == pytest.approx(+0.70710678, abs=1e-8)
    out = zscore(np.linspace(3, 9, 20))
    assert abs(out.mean()) < 1e-9
    assert abs(np.std(out, ddof=1) - 1.0) < 1e-9


def test_zscore_affine_invariance():
    rng = np.random.default_rng(6)
    v = rng.normal(size=15)
    base = zscore(v)
    shifted = zscore(4.5 * v - 2.0)
    assert np.max(np.abs(base - shifted)) < 1e-12


def test_zscore_errors():
    with pytest.raises(DegenerateSpread):
        zscore([2.0, 2.0, 2.0])
    with pytest.raises(TooFewSamples):
        zscore([1.0])


def test_aggregate():
    agg = aggregate([0.84, 0.87])
    assert agg.mean == pytest.approx(0.855, abs=1e-12)
    assert agg.std == pytest.approx(0.0212132034, abs=1e-8)
    one = aggregate([0.5])
    assert one.mean == 0.5 and one.std == 0.0 and one.single_sample
    with pytest.raises(EmptyInput):
        aggregate([])
