"""Rank statistics and aggregation helpers.

Spearman's rho is computed as the Pearson correlation of fractional
(tie-averaged) ranks. For n <= 9 the two-sided p-value is exact, by
enumerating all n! permutations of one rank vector; for larger n it uses the
usual t approximation with n - 2 degrees of freedom.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr

from .errors import (
    ConstantInput,
    DegenerateSpread,
    EmptyInput,
    LengthMismatch,
    TooFewSamples,
)

_EXACT_P_MAX_N = 9
_MIN_SPREAD = 1e-12


@dataclass(frozen=True)
class Correlation:
    rho: float
    p_value: float
    n: int
    method: str  # "exact_permutation" | "t_approximation"


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    n: int
    single_sample: bool


def fractional_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their rank block."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    denom = float(np.sqrt((dx @ dx) * (dy @ dy)))
    if denom <= 0.0:
        raise ConstantInput("correlation input has no variance")
    return float(np.clip((dx @ dy) / denom, -1.0, 1.0))


def spearman(x, y) -> Correlation:
    """Spearman rank correlation with fractional ties and a two-sided p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} and {y.shape} differ")
    n = x.shape[0]
    if n < 3:
        raise TooFewSamples(f"need n >= 3, have {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantInput("correlation inputs must not be constant")
    rx = fractional_ranks(x)
    ry = fractional_ranks(y)
    rho = _pearson(rx, ry)
    if n <= _EXACT_P_MAX_N:
        return Correlation(rho=rho, p_value=_exact_p(rx, ry, rho), n=n,
                           method="exact_permutation")
    return Correlation(rho=rho, p_value=_t_approx_p(rho, n), n=n,
                       method="t_approximation")


def _exact_p(rx: np.ndarray, ry: np.ndarray, rho: float) -> float:
    """P(|rho_perm| >= |rho|) over all permutations of one rank vector."""
    n = rx.shape[0]
    perms = np.array(list(itertools.permutations(ry)), dtype=np.float64)
    dx = rx - rx.mean()
    dp = perms - perms.mean(axis=1, keepdims=True)
    denom = np.sqrt(float(dx @ dx) * np.einsum("ij,ij->i", dp, dp))
    rhos = (dp @ dx) / denom
    hits = int(np.count_nonzero(np.abs(rhos) >= abs(rho) - 1e-12))
    return hits / perms.shape[0]


def _t_approx_p(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return float(np.clip(p, 0.0, 1.0))


def zscore(values) -> np.ndarray:
    """Standardize to mean 0 and sample standard deviation 1."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise LengthMismatch("zscore expects a 1-d vector")
    if values.shape[0] < 2:
        raise TooFewSamples("zscore needs at least two values")
    std = float(np.std(values, ddof=1))
    if not std > _MIN_SPREAD:
        raise DegenerateSpread("values have no spread")
    return (values - values.mean()) / std


def aggregate(values) -> Aggregate:
    """Mean and sample standard deviation; std reported as 0 for one sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] == 0:
        raise EmptyInput("aggregate needs at least one value")
    n = values.shape[0]
    if n == 1:
        return Aggregate(mean=float(values[0]), std=0.0, n=1, single_sample=True)
    return Aggregate(mean=float(values.mean()), std=float(np.std(values, ddof=1)),
                     n=n, single_sample=False)
