"""Analysis instruments for training dynamics: the positive gradient score
with its three-case classification, assignment statistics (average K,
impurity), ideal-gradient comparisons, and excluded-mass checks.

The positive gradient score for a sample is the gradient on the ground-truth
logit divided by the summed gradient over the positive classes (the fuzzy set
for the fuzzy loss, the singleton pseudo label for the vanilla loss). Its
sign says whether the ground-truth prediction is being pushed up (positive)
or down (negative).
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InconsistentAssignmentError,
    InvalidInputError,
    UndefinedScoreError,
    UndefinedSimilarityError,
)
from .fpa import FuzzyPositiveSet, assign, check_set, select_k
from .losses import _check_class_index, _pos_mask, vanilla_grad
from .numerics import as_logits, as_prob_dist, log_sum_exp, softmax


class CaseLabel(enum.Enum):
    """Relation of the ground truth to the pseudo label and the fuzzy set."""

    CASE1 = 1  # pseudo label correct
    CASE2 = 2  # pseudo label wrong, ground truth still inside the set
    CASE3 = 3  # ground truth outside the set


@dataclass(frozen=True)
class ScoreReport:
    r_fuzzy: float
    r_vanilla: float
    case: CaseLabel


@dataclass(frozen=True)
class AssignmentStats:
    avg_k: float
    impurity: float
    k_histogram: dict[int, int] = field(default_factory=dict)


def classify_case(y: FuzzyPositiveSet, pseudo: int, gt: int) -> CaseLabel:
    """Case 1/2/3 for a sample; the pseudo label must be in the set (top-1 always is)."""
    pseudo = int(pseudo)
    gt = int(gt)
    if pseudo not in y:
        raise InconsistentAssignmentError(f"pseudo label {pseudo} not in the positive set {y.indices}")
    if gt == pseudo:
        return CaseLabel.CASE1
    if gt in y:
        return CaseLabel.CASE2
    return CaseLabel.CASE3


def positive_gradient_score(z, y: FuzzyPositiveSet, gt: int, which: str) -> float:
    """Score in [-1, 1] for one sample under the chosen loss ('fuzzy' or 'vanilla').

    Computed from the closed forms of the per-case ratios rather than by
    dividing raw gradients, so the value survives gradient underflow; the
    error below still fires when the positive gradient mass is exactly zero
    in float64.
    """
    z = as_logits(z)
    gt = _check_class_index(z, gt)
    if which == "fuzzy":
        mask = _pos_mask(z, y)
        a = log_sum_exp(-z[mask])
        b = log_sum_exp(z[~mask])
        if _sigmoid_exact_zero(a + b):
            raise UndefinedScoreError("fuzzy positive gradient mass underflowed to zero")
        if mask[gt]:
            return float(np.exp(-z[gt] - a))
        return float(-np.exp(z[gt] - b))
    if which == "vanilla":
        p = softmax(z)
        pseudo = int(np.argmax(z))
        if p[pseudo] == 1.0:
            raise UndefinedScoreError("vanilla positive gradient mass is zero (saturated softmax)")
        if gt == pseudo:
            return (p[gt] - 1.0) / (p[pseudo] - 1.0)  # exactly 1.0
        r = p[gt] / (p[pseudo] - 1.0)
        # |p_gt| <= 1 - p_pseudo holds exactly in real arithmetic; clip the
        # float64 rounding of the softmax sums.
        return float(np.clip(r, -1.0, 1.0))
    raise InvalidInputError(f"unknown loss selector {which!r}; expected 'fuzzy' or 'vanilla'")


def _sigmoid_exact_zero(x: float) -> bool:
    # sigmoid(x) underflows to 0.0 below about -745
    return x < 0 and np.exp(x) == 0.0


def score_report(z, y: FuzzyPositiveSet, gt: int) -> ScoreReport:
    """Both scores plus the case label for one sample (pseudo = argmax z)."""
    z = as_logits(z)
    pseudo = int(np.argmax(z))
    return ScoreReport(
        r_fuzzy=positive_gradient_score(z, y, gt, "fuzzy"),
        r_vanilla=positive_gradient_score(z, y, gt, "vanilla"),
        case=classify_case(y, pseudo, gt),
    )


def assignment_stats(assignments, gts) -> AssignmentStats:
    """Average K, impurity (fraction of ground truths outside their set), K histogram."""
    assignments = list(assignments)
    gts = [int(g) for g in gts]
    if len(assignments) != len(gts):
        raise InvalidInputError(f"length mismatch: {len(assignments)} sets vs {len(gts)} labels")
    if not assignments:
        raise InvalidInputError("assignment_stats of an empty sequence")
    hist = Counter(y.k for y in assignments)
    missed = sum(1 for y, gt in zip(assignments, gts) if gt not in y)
    n = len(assignments)
    return AssignmentStats(
        avg_k=sum(k * c for k, c in hist.items()) / n,
        impurity=missed / n,
        k_histogram=dict(sorted(hist.items())),
    )


def ideal_gradient(z, gt: int) -> np.ndarray:
    """Cross-entropy gradient against the true label: the reference direction."""
    return vanilla_grad(z, gt)


def cosine_similarity(g1, g2) -> float:
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    if g1.shape != g2.shape:
        raise InvalidInputError(f"shape mismatch: {g1.shape} vs {g2.shape}")
    n1 = float(np.linalg.norm(g1))
    n2 = float(np.linalg.norm(g2))
    if n1 == 0.0 or n2 == 0.0:
        raise UndefinedSimilarityError("cosine similarity of a zero vector")
    return float(np.dot(g1, g2) / (n1 * n2))


@dataclass(frozen=True)
class VanishingStats:
    """Excluded probability mass per sample under assignment at bound t."""

    excluded_mass: np.ndarray
    min_excluded: float
    mean_excluded: float
    violations: int  # samples with n >= 2 whose excluded mass fell below 1 - t
    n_checked: int  # samples subject to the bound (those with n >= 2)


def vanishing_stats(probs, t: float) -> VanishingStats:
    """Excluded-mass summary over a batch of distributions.

    Samples whose top-1 probability already exceeds t (K = 1 by the clamp,
    not by the walk) are exempt from the 1 - t lower bound.
    """
    excluded = []
    violations = 0
    checked = 0
    for p in probs:
        p = as_prob_dist(p)
        y = assign(p, t)
        neg = np.ones(p.shape[0], dtype=bool)
        neg[list(y.indices)] = False
        mass = float(p[neg].sum())
        excluded.append(mass)
        if float(p.max()) > t:  # n == 1: bound does not apply
            continue
        checked += 1
        if mass < 1.0 - t:
            violations += 1
    if not excluded:
        raise InvalidInputError("vanishing_stats of an empty sequence")
    arr = np.asarray(excluded)
    return VanishingStats(
        excluded_mass=arr,
        min_excluded=float(arr.min()),
        mean_excluded=float(arr.mean()),
        violations=violations,
        n_checked=checked,
    )
