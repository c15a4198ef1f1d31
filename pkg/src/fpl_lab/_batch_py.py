"""Pure numpy implementation of the batched hot-path kernels.

Row-wise twins of the per-sample operations in numerics/fpa/losses, used by
the training harness. fpl_lab.batch picks between this module and the
compiled extension at import time; both implement the same five functions
with identical semantics.
"""
from __future__ import annotations

import numpy as np

NEG_INF = -np.inf


def softmax_rows(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max shift. z: (n, c) float64."""
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def assign_rows(p: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise fuzzy positive assignment.

    Returns (mask, k): mask is (n, c) uint8 membership of each class in the
    positive set, k is (n,) int64 set sizes. Ties sort by ascending class
    index; the cumulative walk uses strict > t.
    """
    n_rows, n_cls = p.shape
    order = np.argsort(-p, axis=1, kind="stable")
    sorted_p = np.take_along_axis(p, order, axis=1)
    exceeded = np.cumsum(sorted_p, axis=1) > t
    first = np.argmax(exceeded, axis=1)  # 0 when no True; fixed up below
    n = np.where(exceeded.any(axis=1), first + 1, n_cls)
    k = np.maximum(n - 1, 1)
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.broadcast_to(np.arange(n_cls), (n_rows, n_cls)).copy(), axis=1)
    mask = (rank < k[:, None]).astype(np.uint8)
    return mask, k.astype(np.int64)


def _masked_lse(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise logsumexp of `values` restricted to mask == 1 (never empty)."""
    masked = np.where(mask.astype(bool), values, NEG_INF)
    m = masked.max(axis=1)
    return m + np.log(np.exp(masked - m[:, None]).sum(axis=1))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def fuzzy_rows(z: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise fuzzy loss and gradient for logits z under membership mask."""
    boolmask = mask.astype(bool)
    a = _masked_lse(-z, mask)
    b = _masked_lse(z, 1 - mask)
    x = a + b
    loss = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    s = _sigmoid(x)
    grad = np.where(boolmask, -np.exp(-z - a[:, None]), np.exp(z - b[:, None])) * s[:, None]
    return loss, grad


def vanilla_rows(z: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise cross-entropy against integer labels, with softmax - onehot gradient."""
    n_rows = z.shape[0]
    m = z.max(axis=1)
    e = np.exp(z - m[:, None])
    sums = e.sum(axis=1)
    loss = m + np.log(sums) - z[np.arange(n_rows), labels]
    grad = e / sums[:, None]
    grad[np.arange(n_rows), labels] -= 1.0
    return loss, grad


def weight_rows(p: np.ndarray, mask: np.ndarray, k: np.ndarray, a: float) -> np.ndarray:
    """Row-wise adaptive weight; mask/k must come from assign_rows on p."""
    boolmask = mask.astype(bool)
    s_over_k = (p * boolmask).sum(axis=1) / k
    m = np.where(boolmask, 0.0, p).max(axis=1)
    gap = np.maximum(s_over_k - m, 0.0)
    return np.log1p(a * gap) / np.log1p(a * s_over_k)
