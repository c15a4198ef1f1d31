"""Backend selection for the batched kernels.

Prefers the compiled extension when it was built; falls back to the pure
numpy implementation otherwise. Setting FPL_LAB_BACKEND=python forces the
fallback (useful for benchmarking and debugging).
"""
from __future__ import annotations

import os

from . import _batch_py

if os.environ.get("FPL_LAB_BACKEND", "").lower() == "python":
    _impl = _batch_py
    BACKEND = "python"
else:
    try:
        from . import _batch_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _batch_py
        BACKEND = "python"

softmax_rows = _impl.softmax_rows
assign_rows = _impl.assign_rows
fuzzy_rows = _impl.fuzzy_rows
vanilla_rows = _impl.vanilla_rows
weight_rows = _impl.weight_rows


def active_backend() -> str:
    """Name of the kernel backend selected at import: 'cython' or 'python'."""
    return BACKEND
