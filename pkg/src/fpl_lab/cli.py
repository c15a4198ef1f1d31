"""Command-line front end: experiments, T sweeps, checkpoint diagnostics,
and a quick invariant selfcheck.

Configs are flat key=value text files, one pair per line, `#` for comments.
Any field can be overridden on the command line with `--set key=value`; the
sweep grid is passed the same way as `--set sweep.T=0.5,0.75,0.9`. All CSV
floats use 15 significant digits so repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import batch
from .diagnostics import classify_case, positive_gradient_score
from .errors import (
    InvalidConfigError,
    InvalidInputError,
    TrainingDivergedError,
    UndefinedScoreError,
)
from .fpa import assign
from .numerics import softmax
from .selfcheck import run_selfcheck
from .trainer import (
    MetricsRow,
    Model,
    TrainConfig,
    config_from_mapping,
    forward,
    make_dataset,
    run_experiment,
)

DEFAULT_SWEEP = (0.5, 0.75, 0.85, 0.9, 0.95, 0.99)

METRICS_HEADER = [f.name for f in dataclasses.fields(MetricsRow)]
CASES_HEADER = ["sample_index", "hidden_label", "pseudo_label", "k", "case", "r_fuzzy", "r_vanilla"]
SWEEP_HEADER = ["T", "final_accuracy", "final_avg_k", "final_impurity"]


@dataclass(frozen=True)
class RunSpec:
    command: str
    config_path: Path | None
    output_dir: Path
    overrides: dict[str, str]
    checkpoint: Path | None = None


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".15g")


def read_config(path: Path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def parse_args(argv) -> RunSpec:
    parser = argparse.ArgumentParser(
        prog="fpl-lab",
        description="Train and diagnose the fuzzy-positive semi-supervised toy harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_config: bool):
        if need_config:
            p.add_argument("--config", required=True, type=Path, help="flat key=value config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config field (repeatable)",
        )

    add_common(sub.add_parser("train", help="run one experiment"), need_config=True)
    add_common(sub.add_parser("sweep-t", help="run one experiment per T value"), need_config=True)
    p_diag = sub.add_parser("diagnose", help="score a frozen checkpoint on the unlabeled split")
    add_common(p_diag, need_config=True)
    p_diag.add_argument("--checkpoint", required=True, type=Path, help="model parameter file")
    add_common(sub.add_parser("selfcheck", help="run built-in invariant checks"), need_config=False)

    args = parser.parse_args(argv)
    overrides: dict[str, str] = {}
    for item in args.overrides:
        if "=" not in item:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return RunSpec(
        command=args.command,
        config_path=getattr(args, "config", None),
        output_dir=args.out,
        overrides=overrides,
        checkpoint=getattr(args, "checkpoint", None),
    )


def _build_config(spec: RunSpec) -> tuple[TrainConfig, dict[str, str]]:
    """Config from file plus overrides; returns it with any sweep.* extras."""
    pairs = read_config(spec.config_path) if spec.config_path else {}
    pairs.update(spec.overrides)
    extras = {k: pairs.pop(k) for k in list(pairs) if k.startswith("sweep.")}
    return config_from_mapping(pairs), extras


def _parse_sweep_grid(extras: dict[str, str]) -> list[float]:
    raw = extras.pop("sweep.T", None)
    if extras:
        raise InvalidConfigError(f"unknown sweep key(s): {sorted(extras)}")
    if raw is None:
        return list(DEFAULT_SWEEP)
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidConfigError(f"cannot parse sweep.T list: {raw!r}") from exc
    if not values:
        raise InvalidConfigError("sweep.T list is empty")
    return values


def write_metrics_csv(path: Path, rows: list[MetricsRow]) -> None:
    lines = [",".join(METRICS_HEADER)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, name)) for name in METRICS_HEADER))
    path.write_text("\n".join(lines) + "\n")


def write_summary_json(path: Path, cfg: TrainConfig, rows: list[MetricsRow]) -> None:
    final = rows[-1] if rows else None
    payload = {
        "config": dataclasses.asdict(cfg),
        "backend": batch.active_backend(),
        "epochs_completed": len(rows),
        "final": dataclasses.asdict(final) if final else None,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_checkpoint(path: Path, model: Model) -> None:
    """4 header lines naming each array and its shape, then every parameter
    value row-major, one per line, at full float64 precision."""
    arrays = [("w1", model.w1), ("b1", model.b1), ("w2", model.w2), ("b2", model.b2)]
    lines = [" ".join([name] + [str(d) for d in arr.shape]) for name, arr in arrays]
    for _, arr in arrays:
        lines.extend(format(v, ".17g") for v in arr.ravel())
    path.write_text("\n".join(lines) + "\n")


def read_checkpoint(path: Path) -> Model:
    lines = path.read_text().splitlines()
    if len(lines) < 4:
        raise InvalidInputError(f"{path}: checkpoint needs a 4-line shape header")
    shapes = []
    for i, expected in enumerate(("w1", "b1", "w2", "b2")):
        parts = lines[i].split()
        if not parts or parts[0] != expected:
            raise InvalidInputError(f"{path}: header line {i + 1} must start with {expected!r}")
        try:
            shapes.append(tuple(int(d) for d in parts[1:]))
        except ValueError as exc:
            raise InvalidInputError(f"{path}: bad shape on header line {i + 1}") from exc
    counts = [int(np.prod(s)) for s in shapes]
    values = lines[4:]
    if len(values) != sum(counts):
        raise InvalidInputError(
            f"{path}: expected {sum(counts)} parameter values, found {len(values)}"
        )
    try:
        flat = np.array([float(v) for v in values])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric parameter value") from exc
    arrays = []
    pos = 0
    for shape, count in zip(shapes, counts):
        arrays.append(flat[pos : pos + count].reshape(shape))
        pos += count
    return Model(*arrays)


def _run_train(spec: RunSpec) -> int:
    cfg, extras = _build_config(spec)
    if extras:
        raise InvalidConfigError("sweep.* keys are only valid with the sweep-t command")
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_experiment(cfg)
    except TrainingDivergedError as exc:
        write_metrics_csv(out / "metrics.csv", exc.partial_rows)
        write_summary_json(out / "summary.json", cfg, exc.partial_rows)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_metrics_csv(out / "metrics.csv", result.rows)
    write_summary_json(out / "summary.json", cfg, result.rows)
    write_checkpoint(out / "checkpoint.txt", result.model)
    final = result.rows[-1]
    print(
        f"method={cfg.method} epochs={cfg.epochs} "
        f"test_accuracy={final.test_accuracy:.4f} avg_k={final.avg_k:.3f} "
        f"impurity={final.impurity:.3f} backend={batch.active_backend()}"
    )
    return 0


def _run_sweep(spec: RunSpec) -> int:
    cfg, extras = _build_config(spec)
    grid = _parse_sweep_grid(extras)
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    finals = []
    for t in grid:
        cfg_t = dataclasses.replace(cfg, T=t)
        sub = out / f"t_{t:g}"
        sub.mkdir(parents=True, exist_ok=True)
        try:
            result = run_experiment(cfg_t)
        except TrainingDivergedError as exc:
            write_metrics_csv(sub / "metrics.csv", exc.partial_rows)
            print(f"error: T={t:g}: {exc}", file=sys.stderr)
            return 1
        write_metrics_csv(sub / "metrics.csv", result.rows)
        write_summary_json(sub / "summary.json", cfg_t, result.rows)
        write_checkpoint(sub / "checkpoint.txt", result.model)
        final = result.rows[-1]
        finals.append((t, final.test_accuracy, final.avg_k, final.impurity))
        print(f"T={t:g}: accuracy={final.test_accuracy:.4f} avg_k={final.avg_k:.3f} impurity={final.impurity:.3f}")

    finals.sort(key=lambda item: item[0])
    lines = [",".join(SWEEP_HEADER)]
    for row in finals:
        lines.append(",".join(_fmt(v) for v in row))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return 0


def _run_diagnose(spec: RunSpec) -> int:
    cfg, extras = _build_config(spec)
    if extras:
        raise InvalidConfigError("sweep.* keys are only valid with the sweep-t command")
    model = read_checkpoint(spec.checkpoint)
    dataset = make_dataset(cfg)
    unlabeled = [s for s in dataset if s.split == "unlabeled"]
    if not unlabeled:
        raise InvalidInputError("config describes a dataset with no unlabeled samples")
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)

    lines = [",".join(CASES_HEADER)]
    counts = {1: 0, 2: 0, 3: 0}
    k_sum = 0
    impure = 0
    for idx, sample in enumerate(unlabeled):
        z = forward(model, sample.features)
        y = assign(softmax(z), cfg.T)
        pseudo = int(np.argmax(z))
        gt = sample.hidden_label
        case = classify_case(y, pseudo, gt).value
        counts[case] += 1
        k_sum += y.k
        if gt not in y:
            impure += 1
        scores = []
        for which in ("fuzzy", "vanilla"):
            try:
                scores.append(_fmt(positive_gradient_score(z, y, gt, which)))
            except UndefinedScoreError:
                scores.append("nan")
        lines.append(",".join([str(idx), str(gt), str(pseudo), str(y.k), str(case)] + scores))
    (out / "cases.csv").write_text("\n".join(lines) + "\n")

    n = len(unlabeled)
    print(
        f"samples={n} avg_k={k_sum / n:.3f} impurity={impure / n:.3f} "
        f"case1={counts[1]} case2={counts[2]} case3={counts[3]}"
    )
    return 0


def _run_selfcheck(spec: RunSpec) -> int:
    results = run_selfcheck()
    failed = [(name, msg) for name, msg in results if msg is not None]
    for name, msg in results:
        status = "ok" if msg is None else f"FAIL ({msg})"
        print(f"{name}: {status}")
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return 1
    print("all invariants hold")
    return 0


_COMMANDS = {
    "train": _run_train,
    "sweep-t": _run_sweep,
    "diagnose": _run_diagnose,
    "selfcheck": _run_selfcheck,
}


def run(spec: RunSpec) -> int:
    try:
        return _COMMANDS[spec.command](spec)
    except (InvalidConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run(parse_args(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    raise SystemExit(main())
