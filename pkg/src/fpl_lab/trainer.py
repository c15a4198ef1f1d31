"""Desk-scale semi-supervised training harness on synthetic blob data.

One small tanh network is trained from a combined objective: cross-entropy
on the labeled split plus beta times an unsupervised consistency term on the
unlabeled split. The unsupervised target (pseudo label, fuzzy positive set,
adaptive weight, soft distribution) is always computed from a clean forward
pass and treated as a constant; the loss itself is applied to a forward pass
of the Gaussian-perturbed input. Unlabeled samples carry a hidden label that
is read only by the epoch-end diagnostics sweep and never by the optimizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import batch
from .errors import InvalidConfigError, InvalidInputError, TrainingDivergedError

METHODS = ("fpl", "vanilla", "negative", "soft", "supervised-only")

# Child-stream tags: dataset, parameter init, epoch shuffling, input noise.
_DATA, _INIT, _SHUFFLE, _NOISE = 0, 1, 2, 3


@dataclass(frozen=True)
class SampleRecord:
    """One dataset sample. Unlabeled samples keep their true class in
    hidden_label for diagnostics; the optimizer never reads it."""

    features: np.ndarray
    label: int | None
    split: str  # labeled | unlabeled | test
    hidden_label: int | None = None


@dataclass
class Model:
    """1-hidden-layer tanh network: z = W2.T tanh(W1.T x + b1) + b2."""

    w1: np.ndarray  # (D, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H, C)
    b2: np.ndarray  # (C,)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def set_flat(self, theta: np.ndarray) -> None:
        shapes = [self.w1.shape, self.b1.shape, self.w2.shape, self.b2.shape]
        arrays = []
        pos = 0
        for s in shapes:
            n = int(np.prod(s))
            arrays.append(theta[pos : pos + n].reshape(s).copy())
            pos += n
        self.w1, self.b1, self.w2, self.b2 = arrays


@dataclass(frozen=True)
class TrainConfig:
    """Run configuration; field names double as config-file keys."""

    seed: int = 0
    C: int = 4  # classes
    D: int = 2  # feature dimension
    H: int = 16  # hidden width
    L: int = 20  # labeled samples
    U: int = 400  # unlabeled samples
    T: float = 0.9  # cumulative probability bound for assignment
    A: float = 50.0  # adaptive weight scale
    beta: float = 1.0  # unsupervised term weight
    noise_sigma: float = 0.3  # input perturbation scale
    lr: float = 0.05
    epochs: int = 40
    batch_size: int = 64
    method: str = "fpl"
    sep: float = 1.5  # separation of the confusable blob pair, in blob sigmas
    use_adaptive_weight: bool = True

    def __post_init__(self):
        if not 0.0 < self.T < 1.0:
            raise InvalidConfigError(f"T must lie in (0, 1), got {self.T!r}")
        if self.beta < 0.0:
            raise InvalidConfigError(f"beta must be >= 0, got {self.beta!r}")
        if self.lr <= 0.0:
            raise InvalidConfigError(f"lr must be > 0, got {self.lr!r}")
        if self.C < 2:
            raise InvalidConfigError(f"need at least 2 classes, got {self.C}")
        if self.method not in METHODS:
            raise InvalidConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        for name in ("D", "H", "L", "U", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise InvalidConfigError(f"{name} must be >= 1")
        if self.A <= 0.0:
            raise InvalidConfigError(f"A must be > 0, got {self.A!r}")
        if self.noise_sigma < 0.0:
            raise InvalidConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")


@dataclass(frozen=True)
class MetricsRow:
    """Per-epoch log line. Case means are NaN when a case has no samples."""

    epoch: int
    train_sup_loss: float
    train_uns_loss: float
    test_accuracy: float
    avg_k: float
    impurity: float
    frac_k1: float
    case1_count: int
    case2_count: int
    case3_count: int
    mean_r_fuzzy_case1: float
    mean_r_fuzzy_case2: float
    mean_r_fuzzy_case3: float
    mean_r_vanilla_case1: float
    mean_r_vanilla_case2: float
    mean_r_vanilla_case3: float


@dataclass
class ExperimentResult:
    rows: list[MetricsRow]
    model: Model
    dataset: list[SampleRecord]
    # flattened parameter snapshot after every epoch, for trajectory checks
    param_trace: list[np.ndarray] = field(default_factory=list)


def _rng(cfg: TrainConfig, tag: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, tag])


def _blob_centers(cfg: TrainConfig) -> np.ndarray:
    """Class centers: C-2 well-separated anchors on a circle of radius 8 plus
    one confusable pair split by cfg.sep blob sigmas."""
    centers = np.zeros((cfg.C, cfg.D))
    n_slots = max(cfg.C - 1, 1)
    radius = 8.0
    for i in range(cfg.C - 2):
        angle = 2.0 * math.pi * i / n_slots
        centers[i, 0] = radius * math.cos(angle)
        centers[i, 1 % cfg.D] = radius * math.sin(angle)
    angle = 2.0 * math.pi * (n_slots - 1) / n_slots
    slot = np.zeros(cfg.D)
    slot[0] = radius * math.cos(angle)
    slot[1 % cfg.D] = radius * math.sin(angle)
    tangent = np.zeros(cfg.D)
    tangent[0] = -math.sin(angle)
    tangent[1 % cfg.D] = math.cos(angle)
    centers[cfg.C - 2] = slot - 0.5 * cfg.sep * tangent
    centers[cfg.C - 1] = slot + 0.5 * cfg.sep * tangent
    return centers


def _balanced_labels(n: int, c: int) -> np.ndarray:
    reps = -(-n // c)
    return np.tile(np.arange(c), reps)[:n]


def make_dataset(cfg: TrainConfig) -> list[SampleRecord]:
    """Deterministic class-balanced Gaussian blobs with one confusable pair.

    L labeled, U unlabeled (true class kept as hidden_label only) and a test
    split of size max(200, L).
    """
    rng = _rng(cfg, _DATA)
    centers = _blob_centers(cfg)
    records: list[SampleRecord] = []

    def draw(labels: np.ndarray, split: str):
        feats = centers[labels] + rng.standard_normal((labels.size, cfg.D))
        for x, y in zip(feats, labels):
            if split == "unlabeled":
                records.append(SampleRecord(x, None, split, hidden_label=int(y)))
            else:
                records.append(SampleRecord(x, int(y), split))

    draw(_balanced_labels(cfg.L, cfg.C), "labeled")
    draw(_balanced_labels(cfg.U, cfg.C), "unlabeled")
    draw(_balanced_labels(max(200, cfg.L), cfg.C), "test")
    return records


def init_model(cfg: TrainConfig) -> Model:
    rng = _rng(cfg, _INIT)
    return Model(
        w1=rng.standard_normal((cfg.D, cfg.H)) / math.sqrt(cfg.D),
        b1=np.zeros(cfg.H),
        w2=rng.standard_normal((cfg.H, cfg.C)) / math.sqrt(cfg.H),
        b2=np.zeros(cfg.C),
    )


def forward_batch(model: Model, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logits and hidden activations for a batch of feature rows."""
    if x.ndim != 2 or x.shape[1] != model.w1.shape[0]:
        raise InvalidInputError(f"feature batch shape {x.shape} does not match D={model.w1.shape[0]}")
    h = np.tanh(x @ model.w1 + model.b1)
    return h @ model.w2 + model.b2, h


def forward(model: Model, x) -> np.ndarray:
    """Logits for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError(f"expected a single feature vector, got shape {x.shape}")
    z, _ = forward_batch(model, x[None, :])
    return z[0]


def pseudo_label(model: Model, x) -> int:
    """Argmax class of the clean forward pass; ties go to the smaller index."""
    return int(np.argmax(forward(model, x)))


@dataclass(frozen=True)
class UnlabeledTargets:
    """Constants extracted from the clean pass; no gradient flows through them."""

    pseudo: np.ndarray  # (n,) argmax classes
    mask: np.ndarray  # (n, C) fuzzy positive membership
    k: np.ndarray  # (n,)
    weight: np.ndarray  # (n,) per-sample loss weights
    soft_target: np.ndarray  # (n, C) clean softmax


def compute_unlabeled_targets(model: Model, x_u: np.ndarray, cfg: TrainConfig) -> UnlabeledTargets:
    z, _ = forward_batch(model, x_u)
    p = batch.softmax_rows(z)
    mask, k = batch.assign_rows(p, cfg.T)
    if cfg.method == "fpl" and cfg.use_adaptive_weight:
        weight = batch.weight_rows(p, mask, k, cfg.A)
    else:
        weight = np.ones(z.shape[0])
    return UnlabeledTargets(
        pseudo=np.argmax(z, axis=1),
        mask=mask,
        k=k,
        weight=weight,
        soft_target=p,
    )


def _unsupervised_loss_grad(
    z: np.ndarray, targets: UnlabeledTargets, method: str
) -> tuple[float, np.ndarray]:
    """Mean unsupervised loss over the batch and its gradient w.r.t. z."""
    n = z.shape[0]
    if method == "fpl":
        loss, grad = batch.fuzzy_rows(z, targets.mask)
        w = targets.weight
        return float(np.mean(w * loss)), w[:, None] * grad / n
    if method == "vanilla":
        loss, grad = batch.vanilla_rows(z, targets.pseudo)
        return float(loss.mean()), grad / n
    if method == "negative":
        p = batch.softmax_rows(z)
        negmask = targets.mask == 0
        pn = np.where(negmask, p, 0.0)
        loss = -np.log1p(-pn).sum(axis=1)
        r = pn / (1.0 - pn)
        grad = -p * r.sum(axis=1, keepdims=True)
        grad[negmask] += r[negmask]
        return float(loss.mean()), grad / n
    if method == "soft":
        p = batch.softmax_rows(z)
        q = targets.soft_target
        loss = np.sum(q * (np.log(q) - np.log(p)), axis=1)
        return float(loss.mean()), (p - q) / n
    raise InvalidConfigError(f"method {method!r} has no unsupervised loss")


def _backprop(model: Model, x: np.ndarray, h: np.ndarray, dz: np.ndarray):
    dw2 = h.T @ dz
    db2 = dz.sum(axis=0)
    da = (dz @ model.w2.T) * (1.0 - h * h)
    return x.T @ da, da.sum(axis=0), dw2, db2


def step_loss_and_grads(
    model: Model,
    x_l: np.ndarray,
    y_l: np.ndarray,
    x_u_pert: np.ndarray | None,
    targets: UnlabeledTargets | None,
    cfg: TrainConfig,
):
    """Combined objective and parameter gradients for fixed targets/perturbation.

    Keeping the perturbed inputs and clean-pass targets as explicit arguments
    makes the objective a deterministic function of the parameters, so the
    backprop path can be checked against finite differences directly.
    """
    z_l, h_l = forward_batch(model, x_l)
    ce, dz_l = batch.vanilla_rows(z_l, y_l)
    sup_loss = float(ce.mean())
    grads = list(_backprop(model, x_l, h_l, dz_l / x_l.shape[0]))

    uns_loss = 0.0
    if x_u_pert is not None and targets is not None and cfg.beta > 0.0:
        z_u, h_u = forward_batch(model, x_u_pert)
        uns_loss, dz_u = _unsupervised_loss_grad(z_u, targets, cfg.method)
        for i, g in enumerate(_backprop(model, x_u_pert, h_u, cfg.beta * dz_u)):
            grads[i] = grads[i] + g
    return sup_loss, uns_loss, grads


def _extract(samples, with_labels: bool):
    x = np.stack([s.features for s in samples])
    if not with_labels:
        return x, None
    return x, np.array([s.label for s in samples], dtype=np.int64)


def train_step(
    model: Model,
    labeled_batch,
    unlabeled_batch,
    cfg: TrainConfig,
    noise_rng: np.random.Generator,
) -> tuple[Model, tuple[float, float]]:
    """One SGD update; returns the (mutated) model and (sup, uns) loss values."""
    x_l, y_l = _extract(labeled_batch, with_labels=True)
    x_u_pert = None
    targets = None
    use_unsup = cfg.method != "supervised-only" and cfg.beta > 0.0 and len(unlabeled_batch) > 0
    if use_unsup:
        x_u, _ = _extract(unlabeled_batch, with_labels=False)
        targets = compute_unlabeled_targets(model, x_u, cfg)
        x_u_pert = x_u + cfg.noise_sigma * noise_rng.standard_normal(x_u.shape)

    sup_loss, uns_loss, grads = step_loss_and_grads(model, x_l, y_l, x_u_pert, targets, cfg)
    if not (np.isfinite(sup_loss) and np.isfinite(uns_loss)):
        raise TrainingDivergedError(epoch=-1)

    model.w1 -= cfg.lr * grads[0]
    model.b1 -= cfg.lr * grads[1]
    model.w2 -= cfg.lr * grads[2]
    model.b2 -= cfg.lr * grads[3]
    return model, (sup_loss, uns_loss)


def _epoch_diagnostics(model: Model, x_u: np.ndarray, gts: np.ndarray, cfg: TrainConfig):
    """Observation-only sweep over all unlabeled samples on clean logits."""
    z, _ = forward_batch(model, x_u)
    p = batch.softmax_rows(z)
    mask, k = batch.assign_rows(p, cfg.T)
    n = z.shape[0]
    rows = np.arange(n)
    pseudo = np.argmax(z, axis=1)

    gt_in_set = mask[rows, gts].astype(bool)
    case = np.where(gts == pseudo, 1, np.where(gt_in_set, 2, 3))

    boolmask = mask.astype(bool)
    a = _masked_lse_rows(-z, boolmask)
    b = _masked_lse_rows(z, ~boolmask)
    r_fuzzy = np.where(
        gt_in_set,
        np.exp(-z[rows, gts] - a),
        -np.exp(z[rows, gts] - b),
    )
    p_pse = p[rows, pseudo]
    defined = p_pse < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r_vanilla = np.clip(p[rows, gts] / (p_pse - 1.0), -1.0, 1.0)
    r_vanilla = np.where(case == 1, 1.0, r_vanilla)

    counts = [int(np.sum(case == c)) for c in (1, 2, 3)]
    mean_rf = []
    mean_rv = []
    for c in (1, 2, 3):
        sel = case == c
        mean_rf.append(float(r_fuzzy[sel].mean()) if counts[c - 1] else float("nan"))
        sel_v = sel & defined
        mean_rv.append(float(r_vanilla[sel_v].mean()) if sel_v.any() else float("nan"))
    return {
        "avg_k": float(k.mean()),
        "impurity": float(np.mean(~gt_in_set)),
        "frac_k1": float(np.mean(k == 1)),
        "counts": counts,
        "mean_r_fuzzy": mean_rf,
        "mean_r_vanilla": mean_rv,
    }


def _masked_lse_rows(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    masked = np.where(mask, values, -np.inf)
    m = masked.max(axis=1)
    return m + np.log(np.exp(masked - m[:, None]).sum(axis=1))


def evaluate_accuracy(model: Model, samples) -> float:
    x, y = _extract(samples, with_labels=True)
    z, _ = forward_batch(model, x)
    return float(np.mean(np.argmax(z, axis=1) == y))


def run_experiment(cfg: TrainConfig, dataset: list[SampleRecord] | None = None) -> ExperimentResult:
    """Full training run; one MetricsRow per epoch, diagnostics from hidden labels."""
    if dataset is None:
        dataset = make_dataset(cfg)
    labeled = [s for s in dataset if s.split == "labeled"]
    unlabeled = [s for s in dataset if s.split == "unlabeled"]
    test = [s for s in dataset if s.split == "test"]
    if not labeled or not test:
        raise InvalidInputError("dataset must contain labeled and test samples")

    model = init_model(cfg)
    shuffle_rng = _rng(cfg, _SHUFFLE)
    noise_rng = _rng(cfg, _NOISE)

    x_u_all, _ = _extract(unlabeled, with_labels=False) if unlabeled else (None, None)
    gts = np.array([s.hidden_label for s in unlabeled], dtype=np.int64) if unlabeled else None

    result = ExperimentResult(rows=[], model=model, dataset=dataset)
    bs = cfg.batch_size
    for epoch in range(1, cfg.epochs + 1):
        lab_perm = shuffle_rng.permutation(len(labeled))
        unl_perm = shuffle_rng.permutation(len(unlabeled)) if unlabeled else np.array([], dtype=int)
        n_steps = -(-len(unlabeled) // bs) if unlabeled else -(-len(labeled) // bs)
        lab_cycle = np.resize(lab_perm, max(n_steps * bs, len(labeled)))

        sup_sum = 0.0
        uns_sum = 0.0
        for step in range(n_steps):
            lab_idx = lab_cycle[step * bs : (step + 1) * bs]
            unl_idx = unl_perm[step * bs : (step + 1) * bs]
            try:
                _, (sup, uns) = train_step(
                    model,
                    [labeled[i] for i in lab_idx],
                    [unlabeled[i] for i in unl_idx],
                    cfg,
                    noise_rng,
                )
            except TrainingDivergedError:
                err = TrainingDivergedError(epoch=epoch)
                err.partial_rows = list(result.rows)
                raise err from None
            sup_sum += sup
            uns_sum += uns

        if unlabeled:
            diag = _epoch_diagnostics(model, x_u_all, gts, cfg)
        else:
            diag = {
                "avg_k": float("nan"),
                "impurity": float("nan"),
                "frac_k1": float("nan"),
                "counts": [0, 0, 0],
                "mean_r_fuzzy": [float("nan")] * 3,
                "mean_r_vanilla": [float("nan")] * 3,
            }
        result.rows.append(
            MetricsRow(
                epoch=epoch,
                train_sup_loss=sup_sum / n_steps,
                train_uns_loss=uns_sum / n_steps,
                test_accuracy=evaluate_accuracy(model, test),
                avg_k=diag["avg_k"],
                impurity=diag["impurity"],
                frac_k1=diag["frac_k1"],
                case1_count=diag["counts"][0],
                case2_count=diag["counts"][1],
                case3_count=diag["counts"][2],
                mean_r_fuzzy_case1=diag["mean_r_fuzzy"][0],
                mean_r_fuzzy_case2=diag["mean_r_fuzzy"][1],
                mean_r_fuzzy_case3=diag["mean_r_fuzzy"][2],
                mean_r_vanilla_case1=diag["mean_r_vanilla"][0],
                mean_r_vanilla_case2=diag["mean_r_vanilla"][1],
                mean_r_vanilla_case3=diag["mean_r_vanilla"][2],
            )
        )
        result.param_trace.append(model.flat())
    return result


def config_from_mapping(pairs: dict[str, str]) -> TrainConfig:
    """Build a TrainConfig from string key/value pairs (config file or --set)."""
    kwargs = {}
    valid = {f.name: f.type for f in fields(TrainConfig)}
    for key, raw in pairs.items():
        if key not in valid:
            raise InvalidConfigError(f"unknown config key {key!r}")
        kwargs[key] = _parse_value(key, raw)
    return TrainConfig(**kwargs)


def _parse_value(key: str, raw: str):
    defaults = TrainConfig()
    current = getattr(defaults, key)
    if isinstance(current, bool):
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidConfigError(f"cannot parse boolean for {key!r}: {raw!r}")
    if isinstance(current, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise InvalidConfigError(f"cannot parse integer for {key!r}: {raw!r}") from exc
    if isinstance(current, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise InvalidConfigError(f"cannot parse number for {key!r}: {raw!r}") from exc
    return str(raw)


def with_overrides(cfg: TrainConfig, pairs: dict[str, str]) -> TrainConfig:
    updates = {}
    valid = {f.name for f in fields(TrainConfig)}
    for key, raw in pairs.items():
        if key not in valid:
            raise InvalidConfigError(f"unknown config key {key!r}")
        updates[key] = _parse_value(key, raw)
    return replace(cfg, **updates)
