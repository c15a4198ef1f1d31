"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed numerical input (wrong shape, non-finite entries, bad index)."""


class InvalidConfigError(ValueError):
    """A configuration value is outside its allowed range."""


class InconsistentAssignmentError(ValueError):
    """A fuzzy positive set does not match the distribution it is used with."""


class DivergentLossError(ValueError):
    """The requested loss is +inf for this input (e.g. log of zero)."""


class UndefinedScoreError(ArithmeticError):
    """Positive gradient mass is exactly zero; the gradient score has no value."""


class UndefinedSimilarityError(ArithmeticError):
    """Cosine similarity is undefined for a zero-length vector."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss. Carries the epoch it happened in
    and any per-epoch metrics completed before the abort."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        self.partial_rows = []
        super().__init__(message or f"non-finite loss at epoch {epoch}")
