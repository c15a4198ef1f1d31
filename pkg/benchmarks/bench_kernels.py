"""Benchmark the pure numpy batch kernels against the compiled extension.

Runs each of the five row-wise kernels on the same random inputs through
both backends and reports per-call time and speedup. The compiled path
mainly wins on assignment (per-row sort) and the fused loss/gradient loops.

Usage: python3 benchmarks/bench_kernels.py [--rows N] [--classes C] [--repeats R]
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from fpl_lab import _batch_py


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    try:
        batch_cy = importlib.import_module("fpl_lab._batch_cy")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    z = rng.normal(0.0, 3.0, (args.rows, args.classes))
    p = _batch_py.softmax_rows(z)
    mask, k = _batch_py.assign_rows(p, 0.9)
    labels = np.argmax(p, axis=1)

    cases = [
        ("softmax_rows", lambda m: m.softmax_rows(z)),
        ("assign_rows", lambda m: m.assign_rows(p, 0.9)),
        ("fuzzy_rows", lambda m: m.fuzzy_rows(z, mask)),
        ("vanilla_rows", lambda m: m.vanilla_rows(z, labels)),
        ("weight_rows", lambda m: m.weight_rows(p, mask, k, 50.0)),
    ]

    print(f"rows={args.rows} classes={args.classes} repeats={args.repeats} (best of)")
    print(f"{'kernel':<14} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, call in cases:
        t_py = _time(lambda: call(_batch_py), args.repeats)
        t_cy = _time(lambda: call(batch_cy), args.repeats)
        print(f"{name:<14} {t_py * 1e3:>8.2f}ms {t_cy * 1e3:>8.2f}ms {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
