# gazetopo package

__version__ = "0.1.0"

from .embed import EmbeddingParams, PointCloud, build_clouds, delay_embed_coordinate, downsample
from .errors import (
    EmbeddingError,
    FeatureTableError,
    GazeTopoError,
    InputError,
    InvariantError,
    ModelFormatError,
    ReportError,
    SplitError,
    StageError,
    TrajectoryFormatError,
)
from .features import FEATURE_COUNT, FeatureVector, InfinitePolicy, featurize, stats, vectorize
from .forest import ForestConfig, ForestModel, load_model, predict, save_model, train_forest
from .ingest import LabeledTrajectory, generate_synthetic, load_dataset, split_dataset
from .persistence import PersistenceDiagram, compute_diagrams, oracle_persistence, pairwise_distances, rips_h0, rips_h1
from .pipeline import RunManifest, SplitConfig, evaluate, featurize_only, run_pipeline, train_on_features
from .report import ClassificationReport, classification_report

__all__ = [
    "__version__",
    "LabeledTrajectory",
    "load_dataset",
    "split_dataset",
    "generate_synthetic",
    "PointCloud",
    "EmbeddingParams",
    "downsample",
    "delay_embed_coordinate",
    "build_clouds",
    "PersistenceDiagram",
    "pairwise_distances",
    "rips_h0",
    "rips_h1",
    "compute_diagrams",
    "oracle_persistence",
    "FEATURE_COUNT",
    "FeatureVector",
    "InfinitePolicy",
    "stats",
    "vectorize",
    "featurize",
    "ForestConfig",
    "ForestModel",
    "train_forest",
    "predict",
    "save_model",
    "load_model",
    "ClassificationReport",
    "classification_report",
    "RunManifest",
    "SplitConfig",
    "run_pipeline",
    "featurize_only",
    "train_on_features",
    "evaluate",
    "GazeTopoError",
    "InputError",
    "InvariantError",
    "StageError",
    "TrajectoryFormatError",
    "SplitError",
    "EmbeddingError",
    "FeatureTableError",
    "ModelFormatError",
    "ReportError",
]
