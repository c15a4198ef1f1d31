"""Adaptive multi-positive pseudo-labeling for semi-supervised training.

The package has three layers:

* scalar reference API: set assignment (`assign`, `select_k`), the fuzzy
  positive loss and gradient (`fuzzy_loss`, `fuzzy_grad`), the pseudo-label
  cross-entropy baseline, the adaptive sample weight, and alternative
  unsupervised losses (`negative_loss`, `soft_loss`);
* gradient diagnostics: per-sample case classification and gradient scores
  (`classify_case`, `positive_gradient_score`, `score_report`) plus
  population statistics (`assignment_stats`, `vanishing_stats`);
* a training harness on synthetic blobs (`TrainConfig`, `run_experiment`)
  with batched kernels in `batch` (compiled when available).
"""
from .batch import active_backend
from .baselines import negative_grad, negative_loss, negative_loss_hinge_form, soft_loss
from .diagnostics import (
    AssignmentStats,
    CaseLabel,
    ScoreReport,
    VanishingStats,
    assignment_stats,
    classify_case,
    cosine_similarity,
    ideal_gradient,
    positive_gradient_score,
    score_report,
    vanishing_stats,
)
from .errors import (
    DivergentLossError,
    InconsistentAssignmentError,
    InvalidConfigError,
    InvalidInputError,
    TrainingDivergedError,
    UndefinedScoreError,
    UndefinedSimilarityError,
)
from .fpa import FuzzyPositiveSet, assign, select_k
from .losses import (
    WeightParams,
    adaptive_weight,
    fuzzy_grad,
    fuzzy_loss,
    hinge_loss,
    vanilla_grad,
    vanilla_loss,
    weighted_batch_loss,
)
from .numerics import log_sum_exp, softmax, softplus
from .trainer import (
    ExperimentResult,
    MetricsRow,
    Model,
    SampleRecord,
    TrainConfig,
    evaluate_accuracy,
    forward,
    make_dataset,
    pseudo_label,
    run_experiment,
    train_step,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "active_backend",
    "adaptive_weight",
    "assign",
    "assignment_stats",
    "AssignmentStats",
    "CaseLabel",
    "classify_case",
    "cosine_similarity",
    "DivergentLossError",
    "evaluate_accuracy",
    "ExperimentResult",
    "forward",
    "fuzzy_grad",
    "fuzzy_loss",
    "FuzzyPositiveSet",
    "hinge_loss",
    "ideal_gradient",
    "InconsistentAssignmentError",
    "InvalidConfigError",
    "InvalidInputError",
    "log_sum_exp",
    "make_dataset",
    "MetricsRow",
    "Model",
    "negative_grad",
    "negative_loss",
    "negative_loss_hinge_form",
    "positive_gradient_score",
    "pseudo_label",
    "run_experiment",
    "SampleRecord",
    "ScoreReport",
    "score_report",
    "select_k",
    "soft_loss",
    "softmax",
    "softplus",
    "TrainConfig",
    "train_step",
    "TrainingDivergedError",
    "UndefinedScoreError",
    "UndefinedSimilarityError",
    "vanilla_grad",
    "vanilla_loss",
    "VanishingStats",
    "vanishing_stats",
    "WeightParams",
    "weighted_batch_loss",
]
