"""Fast invariant checks runnable from the command line.

Each check draws its own seeded random inputs and asserts a property that
must hold for every input: assignment bounds, gradient structure, the
singleton-set reduction to cross-entropy, weight range and a frozen known
value, score sign conventions, and scalar/batch agreement. The whole suite
runs in well under a second; it is a smoke test, not a substitute for the
full test suite.
"""
from __future__ import annotations

import numpy as np

from . import batch
from .diagnostics import CaseLabel, classify_case, positive_gradient_score
from .fpa import FuzzyPositiveSet, assign
from .losses import (
    WeightParams,
    adaptive_weight,
    fuzzy_grad,
    fuzzy_loss,
    vanilla_grad,
    vanilla_loss,
)

T_GRID = (0.5, 0.75, 0.9, 0.99)


def _random_simplex(rng, n, c):
    p = rng.dirichlet(np.ones(c), size=n)
    return p / p.sum(axis=1, keepdims=True)


def check_assignment_bounds(rng) -> None:
    for c in (2, 3, 5, 10):
        probs = _random_simplex(rng, 200, c)
        for t in T_GRID:
            for p in probs:
                y = assign(p, t)
                assert 1 <= y.k <= c - 1, f"K={y.k} out of bounds for C={c}"
                order = np.argsort(-p, kind="stable")
                assert y.indices == tuple(int(i) for i in order[: y.k]), "set is not the top-K"
                if y.k >= 2:
                    # unforced selection: the kept mass itself must not exceed T
                    assert p[order[: y.k]].sum() <= t + 1e-12, "kept mass overshoots the bound"


def check_gradient_structure(rng) -> None:
    for _ in range(200):
        c = int(rng.integers(2, 8))
        z = rng.normal(0.0, 3.0, c)
        y = assign(np.exp(z - z.max()) / np.exp(z - z.max()).sum(), 0.9)
        g = fuzzy_grad(z, y)
        pos = np.array([i in y for i in range(c)])
        assert np.all(g[pos] <= 0.0) and np.all(g[~pos] >= 0.0), "gradient signs wrong"
        assert abs(g.sum()) < 1e-12, "gradient does not sum to zero"
        assert abs(g[pos].sum() + g[~pos].sum()) < 1e-12
        assert np.linalg.norm(g) <= np.sqrt(2.0) + 1e-12, "gradient norm exceeds sqrt(2)"
        shift = fuzzy_loss(z + 7.5, y)
        assert abs(shift - fuzzy_loss(z, y)) < 1e-10, "loss is not shift invariant"


def check_singleton_reduction(rng) -> None:
    for _ in range(200):
        c = int(rng.integers(2, 8))
        z = rng.normal(0.0, 3.0, c)
        i = int(rng.integers(c))
        y = FuzzyPositiveSet((i,), 0.9)
        assert abs(fuzzy_loss(z, y) - vanilla_loss(z, i)) < 1e-12, "singleton loss != cross-entropy"
        assert np.max(np.abs(fuzzy_grad(z, y) - vanilla_grad(z, i))) < 1e-12


def check_weight(rng) -> None:
    params = WeightParams(a=50.0)
    known = adaptive_weight([0.82, 0.08, 0.08, 0.02], FuzzyPositiveSet((0, 1), 0.9), params)
    assert abs(known - 0.9408977096327286) < 1e-12, f"frozen weight value drifted: {known}"
    for _ in range(200):
        p = _random_simplex(rng, 1, int(rng.integers(3, 8)))[0]
        y = assign(p, 0.9)
        w = adaptive_weight(p, y, params)
        assert 0.0 <= w < 1.0, f"weight {w} outside [0, 1)"


def check_score_conventions(rng) -> None:
    for _ in range(200):
        c = int(rng.integers(3, 8))
        z = rng.normal(0.0, 3.0, c)
        p = np.exp(z - z.max())
        p /= p.sum()
        y = assign(p, 0.9)
        pseudo = int(np.argmax(p))
        gt = int(rng.integers(c))
        case = classify_case(y, pseudo, gt)
        rf = positive_gradient_score(z, y, gt, "fuzzy")
        rv = positive_gradient_score(z, y, gt, "vanilla")
        if case is CaseLabel.CASE1:
            assert rv == 1.0, "agreement case must score exactly 1"
        if gt in y:
            assert 0.0 <= rf <= 1.0
        else:
            assert -1.0 <= rf <= 0.0
        assert -1.0 <= rv <= 1.0


def check_batch_agreement(rng) -> None:
    z = rng.normal(0.0, 3.0, (64, 5))
    p = batch.softmax_rows(z)
    mask, k = batch.assign_rows(p, 0.9)
    loss, grad = batch.fuzzy_rows(z, mask)
    for i in range(z.shape[0]):
        y = FuzzyPositiveSet(tuple(np.flatnonzero(mask[i]).tolist()), 0.9)
        assert y.k == int(k[i])
        assert abs(loss[i] - fuzzy_loss(z[i], y)) < 1e-12
        assert np.max(np.abs(grad[i] - fuzzy_grad(z[i], y))) < 1e-12


def check_backend() -> None:
    assert batch.active_backend() in ("cython", "python")


CHECKS = (
    ("assignment bounds", check_assignment_bounds),
    ("gradient structure", check_gradient_structure),
    ("singleton reduction", check_singleton_reduction),
    ("adaptive weight", check_weight),
    ("score conventions", check_score_conventions),
    ("scalar/batch agreement", check_batch_agreement),
    ("backend selection", lambda rng: check_backend()),
)


def run_selfcheck(seed: int = 0) -> list[tuple[str, str | None]]:
    """Run every check; returns (name, None) on pass, (name, message) on failure."""
    results = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            fn(rng)
        except AssertionError as exc:
            results.append((name, str(exc) or "assertion failed"))
        else:
            results.append((name, None))
    return results
