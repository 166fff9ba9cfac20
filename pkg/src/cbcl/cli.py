"""Command-line entry point.

Subcommands: gen (synthetic features), run (incremental sessions), tune
(hyperparameter cross-validation), arrange (learn/check arrangements),
clean-sim (table-cleaning simulation), validate (feature-file check).

All outputs are deterministic for fixed flags and seeds: rerunning a
command overwrites its output files with identical bytes. Results go to
stdout / the --out directory; diagnostics go to stderr, with verbosity
controlled by the CBCL_LOG environment variable (debug/info/warning).

Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import arrangements as arr
from . import cleaning, features, protocol
from .clustering import ModelStore, learn_increment
from .features import DataError, Dataset, SyntheticSpec, generate_synthetic, load_features, save_features, split_shots
from .linear import TrainConfig
from .voting import Hyperparams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

log = logging.getLogger("cbcl")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _setup_logging() -> None:
    level = os.environ.get("CBCL_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


# ---------------------------------------------------------------------------
# flag value parsing
# ---------------------------------------------------------------------------

_SYNTH_KEYS = {
    "classes": ("n_classes", int),
    "dim": ("dim", int),
    "per_class": ("per_class_count", int),
    "scale": ("class_mean_scale", float),
    "stddev": ("within_class_stddev", float),
}


def parse_synthetic_spec(text: str, seed: int) -> SyntheticSpec:
    """classes=22,dim=64,per_class=30,scale=1.0,stddev=0.2"""
    kwargs = {}
    for item in text.split(","):
        if "=" not in item:
            raise DataError(f"bad synthetic spec item {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in _SYNTH_KEYS:
            raise DataError(f"unknown synthetic spec key {key!r} (know {sorted(_SYNTH_KEYS)})")
        name, cast = _SYNTH_KEYS[key]
        try:
            kwargs[name] = cast(value)
        except ValueError:
            raise DataError(f"bad value {value!r} for synthetic spec key {key!r}") from None
    try:
        return SyntheticSpec(seed=seed, **kwargs)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid synthetic spec: {exc}") from None


def parse_grid(text: str) -> list[Hyperparams] | None:
    """'auto' or 'd=0.5,1.0;n=1,3,5' (cross product)."""
    if text == "auto":
        return None
    ds: list[float] | None = None
    ns: list[int] | None = None
    for part in text.split(";"):
        if "=" not in part:
            raise DataError(f"bad grid part {part!r}")
        key, values = part.split("=", 1)
        if key == "d":
            ds = [float(v) for v in values.split(",")]
        elif key == "n":
            ns = [int(v) for v in values.split(",")]
        else:
            raise DataError(f"unknown grid key {key!r}")
    if not ds or not ns:
        raise DataError("grid needs both d=... and n=... lists")
    return [Hyperparams(d, n) for d in ds for n in ns]


def _load_dataset(args) -> Dataset:
    if getattr(args, "dataset", None):
        log.info("loading features from %s", args.dataset)
        return load_features(args.dataset, format=getattr(args, "format", "binary"))
    if getattr(args, "synthetic", None):
        spec = parse_synthetic_spec(args.synthetic, args.seed)
        log.info("generating synthetic dataset %s", spec)
        return generate_synthetic(spec)
    raise DataError("one of --dataset or --synthetic is required")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = parse_synthetic_spec(args.synthetic, args.seed)
    ds = generate_synthetic(spec)
    save_features(ds, args.out, format=args.format)
    print(f"wrote {len(ds)} examples (dim {ds.dim}, {len(ds.label_names)} classes) to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    ds = load_features(args.file, format=args.format)
    counts = {c: int((ds.labels == c).sum()) for c in ds.class_ids()}
    print(f"ok: {args.file}")
    print(f"dim: {ds.dim}")
    print(f"examples: {len(ds)}")
    print(f"classes: {len(ds.label_names)}")
    for c in ds.class_ids():
        print(f"  {c}\t{ds.label_names[c]}\t{counts[c]}")
    return EXIT_OK


def _effective_run_config(args) -> dict:
    return {
        "command": "run",
        "dataset": args.dataset,
        "synthetic": args.synthetic,
        "shots": args.shots,
        "classes_per_inc": args.classes_per_inc,
        "runs": args.runs,
        "method": args.method,
        "seed": args.seed,
        "grid": args.grid,
        "folds": args.folds,
        "epochs": args.epochs,
        "learning_rate": args.learning_rate,
        "batch_size": args.batch_size,
    }


def _apply_config_file(args) -> None:
    if not getattr(args, "config", None):
        return
    stored = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if stored.get("command") != "run":
        raise DataError(f"{args.config}: not a run config")
    for key, value in stored.items():
        if key != "command":
            setattr(args, key, value)


def cmd_run(args) -> int:
    _apply_config_file(args)
    ds = _load_dataset(args)
    grid = parse_grid(args.grid)
    cfg = TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    log.info("running %d %s session(s)", args.runs, args.method)
    runs, summary = protocol.run_many(
        ds,
        method=args.method,
        n_runs=args.runs,
        base_seed=args.seed,
        shots=args.shots,
        classes_per_increment=args.classes_per_inc,
        grid=grid,
        folds=args.folds,
        cfg=cfg,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_metrics(out, args.method, runs, summary)
    (out / "config.json").write_text(
        json.dumps(_effective_run_config(args), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def _write_metrics(out: Path, method: str, runs, summary: protocol.RunSummary) -> None:
    with open(out / "metrics.jsonl", "w", encoding="utf-8") as f:
        for r, run in enumerate(runs):
            for m in run:
                f.write(
                    json.dumps(
                        {
                            "run": r,
                            "increment": m.increment_index,
                            "n_classes_seen": m.n_classes_seen,
                            "accuracy": m.accuracy,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    lines = [
        f"method: {method}",
        f"runs: {len(runs)}",
        "increment  n_classes_seen  mean_accuracy  std_accuracy",
    ]
    for i in range(len(summary.per_increment_mean)):
        n_seen = runs[0][i].n_classes_seen
        lines.append(
            f"{i:>9d}  {n_seen:>14d}  {summary.per_increment_mean[i]:>13.4f}  {summary.per_increment_std[i]:>12.4f}"
        )
    lines.append(f"average incremental accuracy: {summary.average_incremental_accuracy:.4f}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_tune(args) -> int:
    ds = _load_dataset(args)
    train, _ = split_shots(ds, args.shots, args.seed)
    new_data = {c: train.vectors_for_class(c) for c in train.class_ids()}
    grid = parse_grid(args.grid)
    if grid is None:
        grid = protocol.default_grid(new_data)
    folds = args.folds if args.folds is not None else min(5, args.shots)
    chosen = protocol.tune_hyperparams(ModelStore(), new_data, grid, folds)
    if chosen is None:
        raise DataError("tuning needs at least 2 training examples per class")
    print(f"distance_threshold: {chosen.distance_threshold}")
    print(f"n_vote: {chosen.n_vote}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "hyperparams.json").write_text(
            json.dumps(
                {"distance_threshold": chosen.distance_threshold, "n_vote": chosen.n_vote},
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def cmd_arrange(args) -> int:
    label_names = features.read_label_map(args.labels)
    name_to_label = {name: cid for cid, name in label_names.items()}
    store_path = Path(args.store)
    if args.action == "learn":
        if store_path.exists():
            store = arr.load_arrangements(store_path)
        else:
            store = arr.ArrangementStore(len(label_names))
        scene = arr.read_scene(args.scene, name_to_label)
        try:
            arr.learn_arrangement(store, args.name, scene)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        arr.save_arrangements(store, store_path)
        print(f"learned arrangement {args.name!r} ({len(store.centroids)} stored)")
        return EXIT_OK
    store = arr.load_arrangements(store_path)
    scene = arr.read_scene(args.scene, name_to_label)
    try:
        verdict = arr.check_arrangement(store, scene)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print(f"closest: {', '.join(verdict.closest)}")
    print(f"verdict: {verdict.kind}")
    if verdict.missing_classes:
        names = ", ".join(label_names[c] for c in sorted(verdict.missing_classes))
        print(f"missing: {names}")
    for observed, expected in sorted(verdict.wrong_pairs):
        print(f"wrong: {label_names[observed]} (expected {label_names[expected]})")
    if verdict.extra_classes:
        names = ", ".join(label_names[c] for c in sorted(verdict.extra_classes))
        print(f"unexpected: {names}")
    if verdict.relation_mismatch:
        print("note: objects are all present but arranged differently")
    if verdict.low_confidence:
        print("note: low confidence (multiple substitutions inferred)")
    return EXIT_OK


def cmd_clean_sim(args) -> int:
    ds = _load_dataset(args)
    train, test = split_shots(ds, args.shots, args.seed)
    new_data = {c: train.vectors_for_class(c) for c in train.class_ids()}
    grid = parse_grid(args.grid)
    if grid is None:
        grid = protocol.default_grid(new_data)
    folds = args.folds if args.folds is not None else min(5, args.shots)
    chosen = protocol.tune_hyperparams(ModelStore(), new_data, grid, folds)
    if chosen is None:
        chosen = protocol.DEFAULT_HYPERPARAMS
    store = learn_increment(ModelStore(), new_data, chosen.distance_threshold)
    spec = cleaning.CleaningTrialSpec(
        n_objects=args.objects,
        n_targets=args.targets,
        target_class=args.target_class,
        p_detect_miss=args.p_detect_miss,
        p_move_fail=args.p_move_fail,
        seed=args.seed,
    )
    try:
        breakdown, counts = cleaning.run_campaign(spec, store, test, chosen.n_vote, args.trials)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    table = cleaning.format_breakdown(breakdown)
    print(table)
    log.info("stage counts: %s", counts)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "breakdown.txt").write_text(table + "\n", encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="cbcl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate a synthetic feature file")
    p.add_argument("--synthetic", required=True, help="classes=K,dim=D,per_class=M,scale=S,stddev=V")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("binary", "csv"), default="binary")

    p = sub.add_parser("validate", help="check a feature file and print diagnostics")
    p.add_argument("file")
    p.add_argument("--format", choices=("binary", "csv"), default="binary")

    p = sub.add_parser("run", help="run incremental sessions and write metrics")
    p.add_argument("--dataset", help="feature file (binary)")
    p.add_argument("--synthetic", help="synthetic spec instead of --dataset")
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--classes-per-inc", type=int, default=2)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--method", choices=protocol.METHODS, default="cbcl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default="auto", help="'auto' or 'd=...,...;n=...,...'")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="re-drive a run from a saved config.json")

    p = sub.add_parser("tune", help="cross-validate hyperparameters on a training split")
    p.add_argument("--dataset")
    p.add_argument("--synthetic")
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default="auto")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("arrange", help="learn or check object arrangements")
    p.add_argument("action", choices=("learn", "check"))
    p.add_argument("--labels", required=True, help="label map file (id<TAB>name)")
    p.add_argument("--store", required=True, help="arrangement store file")
    p.add_argument("--scene", required=True, help="scene file")
    p.add_argument("--name", help="arrangement name (learn only)")

    p = sub.add_parser("clean-sim", help="simulate the table-cleaning task")
    p.add_argument("--dataset")
    p.add_argument("--synthetic")
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default="auto")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--target-class", type=int, default=0)
    p.add_argument("--objects", type=int, default=6)
    p.add_argument("--targets", type=int, default=2)
    p.add_argument("--p-detect-miss", type=float, default=0.2)
    p.add_argument("--p-move-fail", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.cmd == "arrange" and args.action == "learn" and not args.name:
        parser.print_usage(sys.stderr)
        sys.stderr.write("cbcl: error: arrange learn requires --name\n")
        return EXIT_USAGE
    try:
        if args.cmd == "gen":
            return cmd_gen(args)
        if args.cmd == "validate":
            return cmd_validate(args)
        if args.cmd == "run":
            return cmd_run(args)
        if args.cmd == "tune":
            return cmd_tune(args)
        if args.cmd == "arrange":
            return cmd_arrange(args)
        if args.cmd == "clean-sim":
            return cmd_clean_sim(args)
        raise AssertionError(f"unhandled command {args.cmd}")
    except DataError as exc:
        sys.stderr.write(f"cbcl: data error: {exc}\n")
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"cbcl: data error: {exc}\n")
        return EXIT_DATA
    except Exception as exc:  # invariant violations and bugs
        sys.stderr.write(f"cbcl: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
