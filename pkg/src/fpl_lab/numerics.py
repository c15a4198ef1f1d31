"""Numerically stable scalar/vector primitives.

All functions operate on float64 and are pure; they form the base layer
for the loss, assignment and diagnostics modules.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

# Above this, log1p(exp(-x)) underflows to 0 and softplus(x) == x in float64.
SOFTPLUS_SWITCH = 30.0


def as_logits(z) -> np.ndarray:
    """Validate and return a logit vector as a float64 array.

    Requires length >= 2 and all entries finite.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 2:
        raise InvalidInputError(f"logit vector must be 1-D with length >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logit vector contains non-finite entries")
    return z


def as_prob_dist(p) -> np.ndarray:
    """Validate a probability vector: entries in [0,1], summing to 1 within 1e-12."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise InvalidInputError(f"probability vector must be 1-D with length >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("probability vector contains non-finite entries")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if abs(float(p.sum()) - 1.0) > 1e-12:
        raise InvalidInputError(f"probabilities sum to {p.sum()!r}, expected 1 within 1e-12")
    return p


def softmax(z) -> np.ndarray:
    """Softmax with max-shift, p_c = exp(z_c - m) / sum_i exp(z_i - m)."""
    z = as_logits(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def log_sum_exp(xs) -> float:
    """log(sum_i exp(x_i)) via the max-shift trick."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        raise InvalidInputError("log_sum_exp of an empty sequence")
    if not np.all(np.isfinite(xs)):
        raise InvalidInputError("log_sum_exp input contains non-finite entries")
    m = float(xs.max())
    return m + float(np.log(np.exp(xs - m).sum()))


def softplus(x: float) -> float:
    """log(1 + exp(x)), stable for large |x|."""
    x = float(x)
    if not np.isfinite(x):
        raise InvalidInputError("softplus of a non-finite value")
    if x > SOFTPLUS_SWITCH:
        return x + float(np.log1p(np.exp(-x)))
    return float(np.log1p(np.exp(x)))


def sort_desc(p) -> np.ndarray:
    """Class indices ordered by probability descending, ties by smaller index first."""
    p = as_prob_dist(p)
    # stable sort of -p keeps the original (ascending-index) order within ties
    return np.argsort(-p, kind="stable")
