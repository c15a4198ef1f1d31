"""The fuzzy positive regularization loss, its analytic gradient, the vanilla
pseudo-label cross-entropy it generalizes, and the adaptive per-sample weight.

The smoothed loss for logits z and positive set Y is

    L = log(1 + sum_{i in Y} exp(-z_i) * sum_{j not in Y} exp(z_j)),

computed here as softplus(a + b) with a = logsumexp(-z_i, i in Y) and
b = logsumexp(z_j, j not in Y). The two forms are identical in real
arithmetic; the literal product overflows near |z| ~ 40 while this one is
good to |z| ~ 700. The gradient follows the same reparameterization:

    dL/dz_i = -sigmoid(a + b) * exp(-z_i - a)   for i in Y,
    dL/dz_j = +sigmoid(a + b) * exp(z_j - b)    for j not in Y.

With a singleton Y = {i} the loss reduces exactly to -log softmax_i(z).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentAssignmentError, InvalidInputError
from .fpa import FuzzyPositiveSet, check_set
from .numerics import as_logits, as_prob_dist, log_sum_exp, softmax, softplus

# Tolerance for the upper-bound consistency check in adaptive_weight; the
# exact bound max_neg <= S/K can be crossed by rounding of the sums when the
# set boundary is a tie.
_WEIGHT_TIE_TOL = 1e-12


@dataclass(frozen=True)
class WeightParams:
    """Scale A and assignment bound T for the adaptive weight."""

    a: float = 50.0
    t: float = 0.9

    def __post_init__(self):
        if not self.a > 0.0:
            raise InvalidInputError(f"weight scale A must be positive, got {self.a!r}")


def _pos_mask(z: np.ndarray, y: FuzzyPositiveSet) -> np.ndarray:
    check_set(y, z.shape[0])
    mask = np.zeros(z.shape[0], dtype=bool)
    mask[list(y.indices)] = True
    return mask


def hinge_loss(z, y: FuzzyPositiveSet) -> float:
    """max(0, max_{j not in Y} z_j - min_{i in Y} z_i): the unsmoothed ordering penalty."""
    z = as_logits(z)
    mask = _pos_mask(z, y)
    return max(0.0, float(z[~mask].max() - z[mask].min()))


def _split_lse(z: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    a = log_sum_exp(-z[mask])
    b = log_sum_exp(z[~mask])
    return a, b


def fuzzy_loss(z, y: FuzzyPositiveSet) -> float:
    """Smoothed fuzzy positive loss; always > 0 and >= hinge_loss."""
    z = as_logits(z)
    mask = _pos_mask(z, y)
    a, b = _split_lse(z, mask)
    return softplus(a + b)


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def fuzzy_grad(z, y: FuzzyPositiveSet) -> np.ndarray:
    """Analytic gradient of fuzzy_loss w.r.t. z: <= 0 on Y, >= 0 off Y, sums to 0."""
    z = as_logits(z)
    mask = _pos_mask(z, y)
    a, b = _split_lse(z, mask)
    s = _sigmoid(a + b)
    g = np.empty_like(z)
    g[mask] = -s * np.exp(-z[mask] - a)
    g[~mask] = s * np.exp(z[~mask] - b)
    return g


def _check_class_index(z: np.ndarray, idx: int) -> int:
    idx = int(idx)
    if not 0 <= idx < z.shape[0]:
        raise InvalidInputError(f"class index {idx} out of range for C={z.shape[0]}")
    return idx


def vanilla_loss(z, pseudo: int) -> float:
    """Cross-entropy against a single pseudo label: -log softmax(z)[pseudo]."""
    z = as_logits(z)
    pseudo = _check_class_index(z, pseudo)
    return log_sum_exp(z) - float(z[pseudo])


def vanilla_grad(z, pseudo: int) -> np.ndarray:
    """softmax(z) minus the one-hot pseudo label."""
    z = as_logits(z)
    pseudo = _check_class_index(z, pseudo)
    g = softmax(z)
    g[pseudo] -= 1.0
    return g


def adaptive_weight(p, y: FuzzyPositiveSet, params: WeightParams) -> float:
    """Confidence weight in [0, 1), decreasing in the largest negative-class
    probability m: log(1 + A*(S/K - m)) / log(1 + A*S/K) with S the positive mass."""
    p = as_prob_dist(p)
    mask = _pos_mask(p, y)
    s_over_k = float(p[mask].sum()) / y.k
    m = float(p[~mask].max())
    gap = s_over_k - m
    if gap < -_WEIGHT_TIE_TOL:
        raise InconsistentAssignmentError(
            f"max negative probability {m} exceeds positive mean {s_over_k}; "
            "the set is not an assignment of this distribution"
        )
    gap = max(gap, 0.0)
    return float(np.log1p(params.a * gap) / np.log1p(params.a * s_over_k))


def weighted_batch_loss(batch) -> float:
    """Mean over (z, Y, w) triples of w * fuzzy_loss(z, Y), in batch order."""
    total = 0.0
    n = 0
    for z, y, w in batch:
        w = float(w)
        if not 0.0 <= w <= 1.0:
            raise InvalidInputError(f"sample weight {w!r} outside [0, 1]")
        total += w * fuzzy_loss(z, y)
        n += 1
    if n == 0:
        raise InvalidInputError("weighted_batch_loss of an empty batch")
    return total / n
