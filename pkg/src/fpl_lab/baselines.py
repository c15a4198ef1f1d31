"""Comparison losses: negative learning on the excluded classes and the
soft-label KL loss."""
from __future__ import annotations

import numpy as np

from .errors import DivergentLossError, InvalidInputError
from .fpa import FuzzyPositiveSet, check_set
from .numerics import as_logits, as_prob_dist, softmax


def _neg_indices(p: np.ndarray, y: FuzzyPositiveSet) -> np.ndarray:
    check_set(y, p.shape[0])
    mask = np.ones(p.shape[0], dtype=bool)
    mask[list(y.indices)] = False
    return mask


def negative_loss(p, y: FuzzyPositiveSet) -> float:
    """-sum_{j not in Y} log(1 - p_j): pushes every excluded probability down."""
    p = as_prob_dist(p)
    neg = _neg_indices(p, y)
    pn = p[neg]
    if np.any(pn >= 1.0):
        raise DivergentLossError("a negative-class probability is 1; loss diverges")
    return float(-np.log1p(-pn).sum())


def negative_loss_hinge_form(z, y: FuzzyPositiveSet) -> float:
    """Hinge approximation sum_{j not in Y} ReLU(z_j - max_{i != j} z_i).

    Only meaningful as a qualitative comparison: each term is driven by the
    single largest other logit, so this loss implicitly raises only the top-1
    prediction.
    """
    z = as_logits(z)
    neg = _neg_indices(z, y)
    total = 0.0
    for j in np.flatnonzero(neg):
        rest = np.delete(z, j)
        total += max(0.0, float(z[j] - rest.max()))
    return total


def negative_grad(z, y: FuzzyPositiveSet) -> np.ndarray:
    """Gradient of negative_loss(softmax(z), Y) w.r.t. z by the chain rule.

    dL/dz_c = sum_{j not in Y} p_j (delta_jc - p_c) / (1 - p_j).
    """
    z = as_logits(z)
    p = softmax(z)
    neg = _neg_indices(p, y)
    pn = p[neg]
    if np.any(pn >= 1.0):
        raise DivergentLossError("a negative-class probability is 1; gradient diverges")
    r = pn / (1.0 - pn)
    g = -p * r.sum()
    g[neg] += r
    return g


def soft_loss(p, q) -> float:
    """KL(q || p) with the 0 * log(0/.) = 0 convention."""
    p = as_prob_dist(p)
    q = as_prob_dist(q)
    if p.shape != q.shape:
        raise InvalidInputError(f"shape mismatch: {p.shape} vs {q.shape}")
    support = q > 0.0
    if np.any(p[support] == 0.0):
        raise DivergentLossError("target puts mass where prediction has none; KL diverges")
    qi = q[support]
    return float(np.sum(qi * (np.log(qi) - np.log(p[support]))))
