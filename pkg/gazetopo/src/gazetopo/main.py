"""Command-line entry point: ``gazetopo <subcommand> [options]``.

Exit codes: 0 on success, 1 on bad input, 2 when an internal invariant fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .config import get_settings
from .embed import EmbeddingParams
from .errors import GazeTopoError, InputError, InvariantError, StageError
from .features import InfinitePolicy
from .forest import ForestConfig
from .ingest import (
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_SYNTHETIC_NOISE,
    DEFAULT_SYNTHETIC_POINTS,
    PARTITION_NAMES,
    generate_synthetic_dataset,
    load_dataset,
    read_trajectory_csv,
    write_dataset,
)
from .pipeline import (
    RunManifest,
    SplitConfig,
    dump_diagrams,
    evaluate,
    featurize_only,
    rerun,
    run_pipeline,
    run_sweep,
    train_on_features,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVARIANT = 2

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def configure_logging(level: str, out_dir: Optional[Path] = None) -> None:
    if not isinstance(logging.getLevelName(level.upper()), int):
        raise InputError(f"unknown log level {level!r}")
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(out_dir / "run.log", encoding="utf-8"))
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, handlers=handlers, force=True)


# ============================
# Argument parsing
# ============================

def _add_embedding_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("embedding")
    group.add_argument("--reduction", type=int, default=20, help="keep every r-th sample (default 20)")
    group.add_argument("--dim", type=int, default=3, help="delay embedding dimension d (default 3)")
    group.add_argument("--delay", type=int, default=10, help="delay tau in downsampled steps (default 10)")
    group.add_argument("--normalize", action="store_true", help="z-score each coordinate after downsampling")
    group.add_argument("--include-combined", action="store_true", help="add the joint (x, y) embedding cloud")
    group.add_argument(
        "--infinite-policy",
        choices=[p.value for p in InfinitePolicy],
        default=InfinitePolicy.DROP.value,
        help="how infinite bars enter the statistics",
    )


def _add_training_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--trees", type=int, default=100, help="number of trees (default 100)")
    group.add_argument("--max-depth", type=int, default=None)
    group.add_argument("--min-samples-split", type=int, default=2)
    group.add_argument("--val-frac", type=float, default=0.2, help="validation fraction (default 0.2)")
    group.add_argument("--test-frac", type=float, default=0.2, help="test fraction of the remainder (default 0.2)")
    group.add_argument("--stratify", action="store_true", help="split each class separately")
    group.add_argument("--run-manifest", type=Path, default=None, help="replay a recorded run")


class _Parser(argparse.ArgumentParser):
    """Raises InputError on usage mistakes instead of exiting."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gazetopo",
        description="Emotion classification from eye-tracking trajectories with persistent homology",
    )
    parser.add_argument("--log-level", default=None, help="logging level (default GAZETOPO_LOG_LEVEL or INFO)")
    parser.add_argument("--n-jobs", type=int, default=None, help="joblib workers (default GAZETOPO_N_JOBS or 1)")
    parser.add_argument("--seed", type=int, default=None, help="root seed (default GAZETOPO_SEED or 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    featurize = sub.add_parser("featurize", help="write the persistence feature CSV for a manifest")
    featurize.add_argument("--manifest", type=Path, required=True)
    featurize.add_argument("--out-dir", type=Path, required=True)
    _add_embedding_args(featurize)

    train = sub.add_parser("train", help="split, train and report on a feature CSV")
    train.add_argument("--features", type=Path, default=None)
    train.add_argument("--out-dir", type=Path, required=True)
    _add_training_args(train)

    evaluate_cmd = sub.add_parser("evaluate", help="report a saved model on a feature CSV")
    evaluate_cmd.add_argument("--model", type=Path, required=True)
    evaluate_cmd.add_argument("--features", type=Path, required=True)
    evaluate_cmd.add_argument("--split", type=Path, default=None, help="split JSON; without it every labeled row")
    evaluate_cmd.add_argument("--partitions", nargs="+", choices=PARTITION_NAMES, default=["test", "validation"])
    evaluate_cmd.add_argument("--out-dir", type=Path, required=True)

    pipeline = sub.add_parser("pipeline", help="ingest, featurize, split, train and report")
    pipeline.add_argument("--manifest", type=Path, default=None)
    pipeline.add_argument("--out-dir", type=Path, required=True)
    pipeline.add_argument("--sweep", type=int, default=None, metavar="K", help="repeat for K consecutive root seeds")
    _add_embedding_args(pipeline)
    _add_training_args(pipeline)

    synth = sub.add_parser("synth", help="write a synthetic four-class dataset")
    synth.add_argument("--out-dir", type=Path, required=True)
    synth.add_argument("--per-class", type=int, default=40)
    synth.add_argument("--points", type=int, default=DEFAULT_SYNTHETIC_POINTS)
    synth.add_argument("--noise", type=float, default=DEFAULT_SYNTHETIC_NOISE)

    diagram = sub.add_parser("diagram", help="dump the diagrams of one trajectory as JSON")
    source = diagram.add_mutually_exclusive_group(required=True)
    source.add_argument("--trajectory", type=Path, help="trajectory CSV")
    source.add_argument("--manifest", type=Path, help="manifest; pick a row with --index")
    diagram.add_argument("--index", type=int, default=0)
    diagram.add_argument("--out-dir", type=Path, required=True)
    diagram.add_argument("--threshold", type=float, default=None, help="cap the H1 filtration")
    diagram.add_argument("--write-clouds", action="store_true", help="also write each point cloud as CSV")
    _add_embedding_args(diagram)
    return parser


def _embedding_params(args: argparse.Namespace) -> EmbeddingParams:
    return EmbeddingParams(
        dimension=args.dim,
        delay=args.delay,
        reduction=args.reduction,
        normalize=args.normalize,
        include_combined=args.include_combined,
    )


def _split_config(args: argparse.Namespace) -> SplitConfig:
    return SplitConfig(validation_fraction=args.val_frac, test_fraction=args.test_frac, stratify=args.stratify)


def _forest_config(args: argparse.Namespace) -> ForestConfig:
    return ForestConfig(n_trees=args.trees, max_depth=args.max_depth, min_samples_split=args.min_samples_split)


def _print_reports(reports) -> None:
    for name, report in reports.items():
        print(report.render(f"== {name} =="))
        print()


# ============================
# Subcommands
# ============================

def _cmd_featurize(args: argparse.Namespace) -> None:
    path = featurize_only(
        args.manifest,
        args.out_dir,
        _embedding_params(args),
        policy=InfinitePolicy(args.infinite_policy),
        n_jobs=args.n_jobs,
    )
    print(path)


def _cmd_train(args: argparse.Namespace) -> None:
    if args.run_manifest is not None:
        result = rerun(RunManifest.load(args.run_manifest), args.out_dir, n_jobs=args.n_jobs)
    elif args.features is None:
        raise InputError("train needs --features or --run-manifest")
    else:
        result = train_on_features(
            args.features,
            args.out_dir,
            root_seed=args.seed,
            split=_split_config(args),
            forest=_forest_config(args),
            n_jobs=args.n_jobs,
        )
    _print_reports(result.reports)


def _cmd_evaluate(args: argparse.Namespace) -> None:
    reports = evaluate(args.model, args.features, args.out_dir, split_path=args.split, partitions=args.partitions)
    _print_reports(reports)


def _cmd_pipeline(args: argparse.Namespace) -> None:
    if args.run_manifest is not None:
        result = rerun(RunManifest.load(args.run_manifest), args.out_dir, n_jobs=args.n_jobs)
        _print_reports(result.reports)
        return
    if args.manifest is None:
        raise InputError("pipeline needs --manifest or --run-manifest")
    common = dict(
        root_seed=args.seed,
        params=_embedding_params(args),
        split=_split_config(args),
        forest=_forest_config(args),
        policy=InfinitePolicy(args.infinite_policy),
        n_jobs=args.n_jobs,
    )
    if args.sweep is not None:
        summary = run_sweep(args.manifest, args.out_dir, args.sweep, **common)
        for run_ in summary["runs"]:
            print(f"seed {run_['root_seed']}: test accuracy {run_['test_accuracy']:.3f}")
        print(f"mean test accuracy {summary['mean_test_accuracy']:.3f}")
        return
    result = run_pipeline(args.manifest, args.out_dir, **common)
    _print_reports(result.reports)


def _cmd_synth(args: argparse.Namespace) -> None:
    if args.per_class < 1:
        raise InputError("--per-class must be >= 1")
    trajectories = generate_synthetic_dataset(
        args.per_class, point_count=args.points, noise_sigma=args.noise, seed=args.seed
    )
    print(write_dataset(trajectories, args.out_dir))


def _cmd_diagram(args: argparse.Namespace) -> None:
    if args.trajectory is not None:
        trajectory = read_trajectory_csv(args.trajectory, sample_rate_hz=DEFAULT_SAMPLE_RATE_HZ)
    else:
        trajectories = load_dataset(args.manifest)
        if not 0 <= args.index < len(trajectories):
            raise InputError(f"--index {args.index} outside 0..{len(trajectories) - 1}")
        trajectory = trajectories[args.index]
    out_path = args.out_dir / "diagram.json"
    dump_diagrams(
        trajectory,
        _embedding_params(args),
        out_path,
        threshold=args.threshold,
        clouds_dir=args.out_dir if args.write_clouds else None,
    )
    print(out_path)


COMMANDS = {
    "featurize": _cmd_featurize,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
    "synth": _cmd_synth,
    "diagram": _cmd_diagram,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        settings = get_settings()
        args.seed = settings.seed if args.seed is None else args.seed
        args.n_jobs = settings.n_jobs if args.n_jobs is None else args.n_jobs
        if args.seed < 0:
            raise InputError("--seed must be non-negative")
        configure_logging(args.log_level or settings.log_level, args.out_dir)
        COMMANDS[args.command](args)
    except StageError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT if exc.is_input_error else EXIT_INVARIANT
    except InputError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        logger.error("i/o error: %s", exc)
        return EXIT_INPUT
    except (InvariantError, GazeTopoError) as exc:
        logger.error("internal invariant failed: %s", exc)
        return EXIT_INVARIANT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
