"""End-to-end orchestration: ingest -> embed -> persistence -> features -> forest.

Every run writes a ``run_manifest.json`` holding every parameter and the root
seed. Stage seeds are derived from the root seed, never from the clock, so
feeding the manifest back reproduces every output byte for byte.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .artifacts import read_json, write_json
from .config import FOREST_STAGE, SPLIT_STAGE, derive_seed
from .embed import EmbeddingParams, build_clouds, write_cloud_csv
from .errors import FeatureTableError, GazeTopoError, InputError, StageError
from .features import InfinitePolicy, featurize_many, read_feature_table, write_features_csv
from .forest import ForestConfig, ForestModel, load_model, save_model, split_counts, train_forest
from .ingest import DatasetSplit, LabeledTrajectory, load_dataset, split_dataset
from .persistence import compute_diagrams
from .report import ClassificationReport, classification_report, write_report

__all__ = [
    "FEATURES_FILE",
    "SPLIT_FILE",
    "MODEL_FILE",
    "RUN_MANIFEST_FILE",
    "SplitConfig",
    "RunManifest",
    "TrainingResult",
    "featurize_only",
    "train_on_features",
    "run_pipeline",
    "run_sweep",
    "rerun",
    "evaluate",
    "dump_diagrams",
]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FEATURES_FILE = "features.csv"
SPLIT_FILE = "split.json"
MODEL_FILE = "model.json"
RUN_MANIFEST_FILE = "run_manifest.json"
SWEEP_FILE = "sweep.json"
EVALUATED_PARTITIONS = ("test", "validation")


def report_file(partition: str) -> str:
    return f"report_{partition}.json"


def confusion_file(partition: str) -> str:
    return f"confusion_{partition}.csv"


@dataclass(frozen=True)
class SplitConfig:
    validation_fraction: float = 0.2
    test_fraction: float = 0.2
    stratify: bool = False

    def to_dict(self) -> Dict:
        return {
            "validation_fraction": self.validation_fraction,
            "test_fraction": self.test_fraction,
            "stratify": self.stratify,
        }


@dataclass(frozen=True)
class RunManifest:
    command: str
    root_seed: int
    split: SplitConfig = SplitConfig()
    embedding: EmbeddingParams = EmbeddingParams()
    forest: ForestConfig = ForestConfig()
    infinite_policy: str = InfinitePolicy.DROP.value
    dataset_manifest: Optional[str] = None
    features: Optional[str] = None
    outputs: Tuple[str, ...] = ()

    @property
    def split_seed(self) -> int:
        return derive_seed(self.root_seed, SPLIT_STAGE)

    @property
    def forest_seed(self) -> int:
        return derive_seed(self.root_seed, FOREST_STAGE)

    def to_dict(self) -> Dict:
        return {
            "gazetopo_version": __version__,
            "command": self.command,
            "root_seed": self.root_seed,
            "split_seed": self.split_seed,
            "forest_seed": self.forest_seed,
            "split": self.split.to_dict(),
            "embedding": self.embedding.to_dict(),
            "forest": self.forest.to_dict(),
            "infinite_policy": self.infinite_policy,
            "dataset_manifest": self.dataset_manifest,
            "features": self.features,
            "outputs": list(self.outputs),
        }

    @staticmethod
    def from_dict(data: Dict) -> "RunManifest":
        try:
            return RunManifest(
                command=str(data["command"]),
                root_seed=int(data["root_seed"]),
                split=SplitConfig(**data["split"]),
                embedding=EmbeddingParams(**data["embedding"]),
                forest=ForestConfig.from_dict(data["forest"]),
                infinite_policy=str(data.get("infinite_policy", InfinitePolicy.DROP.value)),
                dataset_manifest=data.get("dataset_manifest"),
                features=data.get("features"),
                outputs=tuple(data.get("outputs", ())),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed run manifest: {exc}") from exc

    @staticmethod
    def load(path: PathLike) -> "RunManifest":
        return RunManifest.from_dict(read_json(path))


@dataclass(frozen=True)
class TrainingResult:
    model: ForestModel
    split: DatasetSplit
    reports: Dict[str, ClassificationReport] = field(default_factory=dict)
    files: Tuple[str, ...] = ()


# ============================
# Stages
# ============================

def _load(manifest_path: PathLike) -> List[LabeledTrajectory]:
    try:
        return load_dataset(manifest_path)
    except GazeTopoError as exc:
        raise StageError("ingest", exc) from exc


def _featurize(
    trajectories: Sequence[LabeledTrajectory], params: EmbeddingParams, policy: InfinitePolicy, n_jobs: int
):
    try:
        return featurize_many(trajectories, params, policy=policy, n_jobs=n_jobs)
    except StageError:
        raise
    except GazeTopoError as exc:
        raise StageError("featurize", exc) from exc


def featurize_only(
    manifest_path: PathLike,
    out_dir: PathLike,
    params: EmbeddingParams = EmbeddingParams(),
    *,
    policy: InfinitePolicy = InfinitePolicy.DROP,
    n_jobs: int = 1,
) -> Path:
    out_dir = Path(out_dir)
    vectors = _featurize(_load(manifest_path), params, InfinitePolicy(policy), n_jobs)
    path = write_features_csv(vectors, out_dir / FEATURES_FILE)
    logger.info("wrote %d feature rows to %s", len(vectors), path)
    return path


def _train_and_report(
    X: np.ndarray,
    y: np.ndarray,
    out_dir: Path,
    manifest: RunManifest,
    n_jobs: int,
) -> TrainingResult:
    if np.any(y < 0):
        missing = int(np.sum(y < 0))
        raise StageError("split", FeatureTableError(f"{missing} row(s) have no label; training needs every row labeled"))
    try:
        split = split_dataset(
            len(y),
            manifest.split.validation_fraction,
            manifest.split.test_fraction,
            manifest.split_seed,
            labels=y.tolist(),
            stratify=manifest.split.stratify,
        )
    except GazeTopoError as exc:
        raise StageError("split", exc) from exc
    write_json(out_dir / SPLIT_FILE, split.to_dict())

    config = replace(manifest.forest, seed=manifest.forest_seed)
    train = np.array(split.train, dtype=np.int64)
    try:
        model = train_forest(X[train], y[train], config, n_jobs=n_jobs)
    except GazeTopoError as exc:
        raise StageError("train", exc) from exc
    save_model(model, out_dir / MODEL_FILE)
    logger.info("split counts per feature: %s", split_counts(model).tolist())

    files = [SPLIT_FILE, MODEL_FILE]
    reports: Dict[str, ClassificationReport] = {}
    for partition in EVALUATED_PARTITIONS:
        rows = np.array(split.partition(partition), dtype=np.int64)
        report = classification_report(y[rows], model.predict_many(X[rows]))
        absent = [c for c, m in enumerate(report.per_class) if m.support == 0]
        if absent:
            logger.warning("%s partition has no samples of class(es) %s", partition, absent)
        write_report(report, out_dir / report_file(partition), out_dir / confusion_file(partition))
        files += [report_file(partition), confusion_file(partition)]
        reports[partition] = report
        logger.info("%s accuracy %.4f on %d samples", partition, report.accuracy, report.total)
    return TrainingResult(model=model, split=split, reports=reports, files=tuple(files))


def _write_run_manifest(out_dir: Path, manifest: RunManifest, files: Sequence[str]) -> None:
    manifest = replace(manifest, outputs=tuple(files) + (RUN_MANIFEST_FILE,))
    write_json(out_dir / RUN_MANIFEST_FILE, manifest.to_dict())


def train_on_features(
    features_csv: PathLike,
    out_dir: PathLike,
    *,
    root_seed: int = 0,
    split: SplitConfig = SplitConfig(),
    forest: ForestConfig = ForestConfig(),
    n_jobs: int = 1,
) -> TrainingResult:
    """Split, train and report on any numeric feature table with a label column."""
    out_dir = Path(out_dir)
    try:
        table = read_feature_table(features_csv)
    except GazeTopoError as exc:
        raise StageError("load-features", exc) from exc
    manifest = RunManifest(command="train", root_seed=root_seed, split=split, forest=forest, features=str(features_csv))
    result = _train_and_report(table.X, table.y, out_dir, manifest, n_jobs)
    _write_run_manifest(out_dir, manifest, result.files)
    return result


def run_pipeline(
    manifest_path: PathLike,
    out_dir: PathLike,
    *,
    root_seed: int = 0,
    params: EmbeddingParams = EmbeddingParams(),
    split: SplitConfig = SplitConfig(),
    forest: ForestConfig = ForestConfig(),
    policy: InfinitePolicy = InfinitePolicy.DROP,
    n_jobs: int = 1,
) -> TrainingResult:
    out_dir = Path(out_dir)
    policy = InfinitePolicy(policy)
    manifest = RunManifest(
        command="pipeline",
        root_seed=root_seed,
        split=split,
        embedding=params,
        forest=forest,
        infinite_policy=policy.value,
        dataset_manifest=str(manifest_path),
    )
    logger.info("pipeline: root seed %d, output %s", root_seed, out_dir)
    featurize_only(manifest_path, out_dir, params, policy=policy, n_jobs=n_jobs)
    table = read_feature_table(out_dir / FEATURES_FILE)
    result = _train_and_report(table.X, table.y, out_dir, manifest, n_jobs)
    files = (FEATURES_FILE,) + result.files
    _write_run_manifest(out_dir, manifest, files)
    return replace(result, files=files)


def rerun(manifest: RunManifest, out_dir: PathLike, *, n_jobs: int = 1) -> TrainingResult:
    """Repeat a recorded pipeline or train run."""
    if manifest.command == "pipeline" and manifest.dataset_manifest:
        return run_pipeline(
            manifest.dataset_manifest,
            out_dir,
            root_seed=manifest.root_seed,
            params=manifest.embedding,
            split=manifest.split,
            forest=manifest.forest,
            policy=InfinitePolicy(manifest.infinite_policy),
            n_jobs=n_jobs,
        )
    if manifest.command == "train" and manifest.features:
        return train_on_features(
            manifest.features,
            out_dir,
            root_seed=manifest.root_seed,
            split=manifest.split,
            forest=manifest.forest,
            n_jobs=n_jobs,
        )
    raise InputError(f"run manifest for command {manifest.command!r} cannot be replayed")


def run_sweep(
    manifest_path: PathLike,
    out_dir: PathLike,
    seeds: int,
    *,
    root_seed: int = 0,
    params: EmbeddingParams = EmbeddingParams(),
    split: SplitConfig = SplitConfig(),
    forest: ForestConfig = ForestConfig(),
    policy: InfinitePolicy = InfinitePolicy.DROP,
    n_jobs: int = 1,
) -> Dict:
    """Featurize once, then split/train/report for root seeds root_seed .. root_seed+seeds-1."""
    if seeds < 1:
        raise InputError("a sweep needs at least one seed")
    out_dir = Path(out_dir)
    features = featurize_only(manifest_path, out_dir, params, policy=policy, n_jobs=n_jobs)
    runs = []
    for offset in range(seeds):
        seed = root_seed + offset
        result = train_on_features(
            features, out_dir / f"seed_{seed}", root_seed=seed, split=split, forest=forest, n_jobs=n_jobs
        )
        runs.append(
            {
                "root_seed": seed,
                "test_accuracy": result.reports["test"].accuracy,
                "validation_accuracy": result.reports["validation"].accuracy,
            }
        )
    summary = {
        "runs": runs,
        "mean_test_accuracy": float(np.mean([r["test_accuracy"] for r in runs])),
        "mean_validation_accuracy": float(np.mean([r["validation_accuracy"] for r in runs])),
    }
    write_json(out_dir / SWEEP_FILE, summary)
    logger.info("sweep over %d seeds: mean test accuracy %.4f", seeds, summary["mean_test_accuracy"])
    return summary


def evaluate(
    model_path: PathLike,
    features_csv: PathLike,
    out_dir: PathLike,
    *,
    split_path: Optional[PathLike] = None,
    partitions: Sequence[str] = EVALUATED_PARTITIONS,
) -> Dict[str, ClassificationReport]:
    """Report a saved model on chosen split partitions, or on every labeled row."""
    out_dir = Path(out_dir)
    model = load_model(model_path)
    table = read_feature_table(features_csv)
    if split_path is None:
        groups = {"all": np.flatnonzero(table.labeled)}
    else:
        split = DatasetSplit.from_dict(read_json(split_path))
        split.check_partition(len(table.y))
        groups = {name: np.array(split.partition(name), dtype=np.int64) for name in partitions}

    reports = {}
    for name, rows in groups.items():
        if np.any(table.y[rows] < 0):
            raise FeatureTableError(f"partition {name!r} contains unlabeled rows")
        report = classification_report(table.y[rows], model.predict_many(table.X[rows]))
        write_report(report, out_dir / report_file(name), out_dir / confusion_file(name))
        reports[name] = report
    return reports


def dump_diagrams(
    trajectory: LabeledTrajectory,
    params: EmbeddingParams,
    out_path: PathLike,
    *,
    threshold: Optional[float] = None,
    clouds_dir: Optional[PathLike] = None,
) -> Dict:
    """Write D0/D1 of every cloud of one trajectory as JSON (and the clouds as CSV)."""
    try:
        clouds = build_clouds(trajectory, params)
    except GazeTopoError as exc:
        raise StageError("embed", exc, sample=trajectory.source) from exc
    payload: Dict = {"source": trajectory.source, "label": trajectory.label, "clouds": {}}
    for name, cloud in clouds.named():
        d0, d1 = compute_diagrams(cloud, threshold=threshold)
        payload["clouds"][name] = {"points": len(cloud), "diagrams": [d0.to_dict(), d1.to_dict()]}
        if clouds_dir is not None:
            write_cloud_csv(cloud, Path(clouds_dir) / f"cloud_{name}.csv")
    write_json(out_path, payload)
    return payload
