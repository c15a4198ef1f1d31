"""Fuzzy positive assignment: per-sample adaptive K and the top-K label set.

K is chosen from the sorted probabilities: walk the cumulative sum until it
first strictly exceeds the bound T (or the last class is reached), then keep
one class fewer, never fewer than one. Keeping K = n-1 leaves at least 1 - T
probability mass on the negative classes, which keeps the loss gradient away
from zero; the clamp to 1 guarantees a non-empty positive set, and K <= C-1
guarantees a non-empty negative set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError
from .numerics import as_prob_dist, sort_desc


@dataclass(frozen=True)
class FuzzyPositiveSet:
    """Ordered fuzzy positive label set for one sample.

    `indices` are class indices in descending-probability order at assignment
    time; `t_used` is the cumulative-probability bound the set was built with.
    """

    indices: tuple[int, ...]
    t_used: float

    @property
    def k(self) -> int:
        return len(self.indices)

    def __contains__(self, cls: int) -> bool:
        return cls in self.indices


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 < t < 1.0:
        raise InvalidConfigError(f"cumulative bound T must lie in (0, 1), got {t!r}")
    return t


def select_k(p, t: float) -> int:
    """Adaptive K for one probability vector; always 1 <= K <= C-1."""
    p = as_prob_dist(p)
    t = _check_t(t)
    order = sort_desc(p)
    n = p.shape[0]
    cum = 0.0
    for i, cls in enumerate(order, start=1):
        cum += p[cls]
        if cum > t:
            n = i
            break
    return max(n - 1, 1)


def assign(p, t: float) -> FuzzyPositiveSet:
    """Top-K classes of p as a FuzzyPositiveSet, K from select_k(p, t)."""
    p = as_prob_dist(p)
    k = select_k(p, t)
    order = sort_desc(p)
    return FuzzyPositiveSet(indices=tuple(int(c) for c in order[:k]), t_used=float(t))


def check_set(y: FuzzyPositiveSet, n_classes: int) -> None:
    """Validate a fuzzy positive set against a class count."""
    from .errors import InvalidInputError

    idx = np.asarray(y.indices, dtype=np.int64)
    if idx.size < 1 or idx.size > n_classes - 1:
        raise InvalidInputError(f"positive set size {idx.size} outside [1, {n_classes - 1}]")
    if np.unique(idx).size != idx.size:
        raise InvalidInputError("positive set contains duplicate indices")
    if idx.min() < 0 or idx.max() >= n_classes:
        raise InvalidInputError(f"positive set indices out of range for C={n_classes}")
