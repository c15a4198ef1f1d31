# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the batched kernels in _batch_py.

Same five functions, same semantics: row-wise softmax, fuzzy positive
assignment, fuzzy loss/gradient, cross-entropy loss/gradient, adaptive
weights. Loops follow the reference implementation's operation order, so
results agree with the pure numpy path to within a few ulps (sequential
versus pairwise summation is the only difference).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, fabs, log, log1p

cnp.import_array()


def softmax_rows(z):
    """Row-wise softmax with max shift. z: (n, c) float64."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[:, ::1] zv = z
    cdef Py_ssize_t n = zv.shape[0], c = zv.shape[1]
    out = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = zv[i, 0]
        for j in range(1, c):
            if zv[i, j] > m:
                m = zv[i, j]
        s = 0.0
        for j in range(c):
            ov[i, j] = exp(zv[i, j] - m)
            s += ov[i, j]
        for j in range(c):
            ov[i, j] /= s
    return out


def assign_rows(p, double t):
    """Row-wise fuzzy positive assignment.

    Returns (mask, k): mask is (n, c) uint8 membership of each class in the
    positive set, k is (n,) int64 set sizes. Ties sort by ascending class
    index; the cumulative walk uses strict > t.
    """
    p = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[:, ::1] pv = p
    cdef Py_ssize_t nrows = pv.shape[0], c = pv.shape[1]
    mask = np.zeros((nrows, c), dtype=np.uint8)
    k_out = np.empty(nrows, dtype=np.int64)
    order_buf = np.empty(c, dtype=np.intp)
    cdef unsigned char[:, ::1] mv = mask
    cdef cnp.int64_t[::1] kv = k_out
    cdef Py_ssize_t[::1] order = order_buf
    cdef Py_ssize_t i, j, pos, n, k
    cdef double key, cum
    for i in range(nrows):
        # stable insertion sort, descending by probability
        for j in range(c):
            key = pv[i, j]
            pos = j
            while pos > 0 and pv[i, order[pos - 1]] < key:
                order[pos] = order[pos - 1]
                pos -= 1
            order[pos] = j
        n = c
        cum = 0.0
        for j in range(c):
            cum += pv[i, order[j]]
            if cum > t:
                n = j + 1
                break
        k = n - 1 if n >= 2 else 1
        kv[i] = k
        for j in range(k):
            mv[i, order[j]] = 1
    return mask, k_out


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def fuzzy_rows(z, mask):
    """Row-wise fuzzy loss and gradient for logits z under membership mask."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef double[:, ::1] zv = z
    cdef unsigned char[:, ::1] mv = mask
    cdef Py_ssize_t n = zv.shape[0], c = zv.shape[1]
    loss = np.empty(n, dtype=np.float64)
    grad = np.empty((n, c), dtype=np.float64)
    cdef double[::1] lv = loss
    cdef double[:, ::1] gv = grad
    cdef Py_ssize_t i, j
    cdef double ma, mb, sa, sb, a, b, x, s
    for i in range(n):
        ma = -INFINITY
        mb = -INFINITY
        for j in range(c):
            if mv[i, j]:
                if -zv[i, j] > ma:
                    ma = -zv[i, j]
            else:
                if zv[i, j] > mb:
                    mb = zv[i, j]
        sa = 0.0
        sb = 0.0
        for j in range(c):
            if mv[i, j]:
                sa += exp(-zv[i, j] - ma)
            else:
                sb += exp(zv[i, j] - mb)
        a = ma + log(sa)
        b = mb + log(sb)
        x = a + b
        lv[i] = (x if x > 0.0 else 0.0) + log1p(exp(-fabs(x)))
        s = _sigmoid(x)
        for j in range(c):
            if mv[i, j]:
                gv[i, j] = -exp(-zv[i, j] - a) * s
            else:
                gv[i, j] = exp(zv[i, j] - b) * s
    return loss, grad


def vanilla_rows(z, labels):
    """Row-wise cross-entropy against integer labels, with softmax - onehot gradient."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    cdef double[:, ::1] zv = z
    cdef cnp.int64_t[::1] yv = labels
    cdef Py_ssize_t n = zv.shape[0], c = zv.shape[1]
    loss = np.empty(n, dtype=np.float64)
    grad = np.empty((n, c), dtype=np.float64)
    cdef double[::1] lv = loss
    cdef double[:, ::1] gv = grad
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = zv[i, 0]
        for j in range(1, c):
            if zv[i, j] > m:
                m = zv[i, j]
        s = 0.0
        for j in range(c):
            gv[i, j] = exp(zv[i, j] - m)
            s += gv[i, j]
        lv[i] = m + log(s) - zv[i, yv[i]]
        for j in range(c):
            gv[i, j] /= s
        gv[i, yv[i]] -= 1.0
    return loss, grad


def weight_rows(p, mask, k, double a):
    """Row-wise adaptive weight; mask/k must come from assign_rows on p."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    k = np.ascontiguousarray(k, dtype=np.int64)
    cdef double[:, ::1] pv = p
    cdef unsigned char[:, ::1] mv = mask
    cdef cnp.int64_t[::1] kv = k
    cdef Py_ssize_t n = pv.shape[0], c = pv.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double s, m, sk, gap
    for i in range(n):
        s = 0.0
        m = 0.0
        for j in range(c):
            if mv[i, j]:
                s += pv[i, j]
            elif pv[i, j] > m:
                m = pv[i, j]
        sk = s / kv[i]
        gap = sk - m
        if gap < 0.0:
            gap = 0.0
        ov[i] = log1p(a * gap) / log1p(a * sk)
    return out
