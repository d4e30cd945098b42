"""Persistence statistics: diagrams to a fixed-length feature vector.

Slot layout, outer to inner: cloud (raw, x, y[, combined]), homology dimension
(0, 1), coordinate alpha (birth, death, persistence), statistic (mean, entropy,
max, cardinality). With the three default clouds that is 72 slots and

    slot = ((cloud * 2 + p) * 3 + alpha) * 4 + statistic
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .artifacts import write_frame
from .embed import EmbeddingParams, build_clouds
from .errors import FeatureTableError, GazeTopoError, InvariantError, StageError
from .ingest import CLASS_LABELS, LabeledTrajectory
from .persistence import PersistenceDiagram, compute_diagrams, pairwise_distances

__all__ = [
    "ALPHAS",
    "CLOUDS",
    "HOMOLOGY_DIMS",
    "STATISTICS",
    "FEATURE_COUNT",
    "InfinitePolicy",
    "PersistenceStats",
    "FeatureVector",
    "FeatureTable",
    "feature_names",
    "slot_index",
    "alpha_values",
    "stats",
    "vectorize",
    "featurize",
    "featurize_many",
    "slot_description",
    "write_features_csv",
    "read_feature_table",
]

logger = logging.getLogger(__name__)

CLOUDS: Tuple[str, ...] = ("raw", "x", "y")
HOMOLOGY_DIMS: Tuple[int, ...] = (0, 1)
ALPHAS: Tuple[str, ...] = ("birth", "death", "persistence")
STATISTICS: Tuple[str, ...] = ("mean", "entropy", "max", "cardinality")
SLOTS_PER_CLOUD = len(HOMOLOGY_DIMS) * len(ALPHAS) * len(STATISTICS)
FEATURE_COUNT = len(CLOUDS) * SLOTS_PER_CLOUD

LABEL_COLUMN = "label"


class InfinitePolicy(str, enum.Enum):
    DROP = "drop"
    DIAMETER = "diameter"


def _cloud_names(include_combined: bool) -> Tuple[str, ...]:
    return CLOUDS + ("combined",) if include_combined else CLOUDS


def feature_names(include_combined: bool = False) -> List[str]:
    """Column names ``f0 .. f{m-1}`` in canonical slot order."""
    return [f"f{i}" for i in range(len(_cloud_names(include_combined)) * SLOTS_PER_CLOUD)]


def slot_index(cloud: int, p: int, alpha: int, statistic: int) -> int:
    return ((cloud * len(HOMOLOGY_DIMS) + p) * len(ALPHAS) + alpha) * len(STATISTICS) + statistic


def slot_description(index: int) -> str:
    """Human-readable name of a slot, e.g. ``raw/h1/persistence/max``."""
    statistic = index % len(STATISTICS)
    alpha = (index // len(STATISTICS)) % len(ALPHAS)
    p = (index // (len(STATISTICS) * len(ALPHAS))) % len(HOMOLOGY_DIMS)
    cloud = index // SLOTS_PER_CLOUD
    return f"{_cloud_names(True)[cloud]}/h{p}/{ALPHAS[alpha]}/{STATISTICS[statistic]}"


# ============================
# Statistics
# ============================

class PersistenceStats(NamedTuple):
    mean: float
    entropy: float
    max: float
    cardinality: float


def alpha_values(
    diagram: PersistenceDiagram,
    alpha: str,
    *,
    policy: InfinitePolicy = InfinitePolicy.DROP,
    diameter: Optional[float] = None,
) -> np.ndarray:
    if alpha not in ALPHAS:
        raise ValueError(f"alpha must be one of {ALPHAS}, got {alpha!r}")
    bars = diagram.bars
    if InfinitePolicy(policy) is InfinitePolicy.DIAMETER:
        if diameter is None:
            raise ValueError("the diameter policy needs the cloud diameter")
        bars = bars.copy()
        bars[np.isinf(bars[:, 1]), 1] = diameter
        # a bar born at the diameter would become zero-length
        bars = bars[bars[:, 1] > bars[:, 0]]
    else:
        bars = diagram.finite()
    if alpha == "birth":
        return bars[:, 0].copy()
    if alpha == "death":
        return bars[:, 1].copy()
    return bars[:, 1] - bars[:, 0]


def stats(values: Union[Sequence[float], np.ndarray]) -> PersistenceStats:
    """Mean, entropy (nats), max and cardinality of non-negative values.

    An empty list gives all zeros. An all-zero list gives (0, 0, 0, n) since
    its entropy weights are undefined.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    n = values.shape[0]
    if n == 0:
        return PersistenceStats(0.0, 0.0, 0.0, 0.0)
    if np.any(values < 0):
        raise InvariantError("persistence statistics need non-negative values")
    total = float(values.sum())
    if total == 0.0:
        return PersistenceStats(0.0, 0.0, 0.0, float(n))
    weights = values[values > 0] / total
    entropy = float(-np.sum(weights * np.log(weights)))
    return PersistenceStats(float(values.mean()), max(entropy, 0.0), float(values.max()), float(n))


# ============================
# Feature vectors
# ============================

@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    label: Optional[int] = None
    sample_id: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape[0] % SLOTS_PER_CLOUD != 0 or values.shape[0] < FEATURE_COUNT:
            raise InvariantError(f"feature vector has {values.shape[0]} slots")
        if not np.all(np.isfinite(values)):
            raise InvariantError(f"feature vector for {self.sample_id or '<sample>'} has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])


def vectorize(
    diagrams: Sequence[Tuple[PersistenceDiagram, PersistenceDiagram]],
    *,
    diameters: Optional[Sequence[float]] = None,
    policy: InfinitePolicy = InfinitePolicy.DROP,
) -> np.ndarray:
    """Fill the slots from one (D0, D1) pair per cloud, in cloud order."""
    out = np.zeros(len(diagrams) * SLOTS_PER_CLOUD)
    for c, pair in enumerate(diagrams):
        diameter = None if diameters is None else diameters[c]
        for p, diagram in enumerate(pair):
            for a, alpha in enumerate(ALPHAS):
                summary = stats(alpha_values(diagram, alpha, policy=policy, diameter=diameter))
                start = slot_index(c, p, a, 0)
                out[start:start + len(STATISTICS)] = summary
    return out


def featurize(
    trajectory: LabeledTrajectory,
    params: EmbeddingParams = EmbeddingParams(),
    *,
    policy: InfinitePolicy = InfinitePolicy.DROP,
) -> FeatureVector:
    policy = InfinitePolicy(policy)
    clouds = build_clouds(trajectory, params)
    diagrams = []
    diameters: Optional[List[float]] = [] if policy is InfinitePolicy.DIAMETER else None
    for name, cloud in clouds.named():
        d0, d1 = compute_diagrams(cloud)
        diagrams.append((d0, d1))
        if diameters is not None:
            diameters.append(pairwise_distances(cloud).diameter())
        logger.debug("%s/%s: |D0|=%d |D1|=%d", trajectory.source or "<trajectory>", name, len(d0), len(d1))
    values = vectorize(diagrams, diameters=diameters, policy=policy)
    return FeatureVector(values=values, label=trajectory.label, sample_id=trajectory.source)


def _featurize_one(index: int, trajectory: LabeledTrajectory, params: EmbeddingParams, policy: InfinitePolicy) -> FeatureVector:
    try:
        return featurize(trajectory, params, policy=policy)
    except GazeTopoError as exc:
        raise StageError("featurize", exc, sample=trajectory.source or f"#{index}") from exc


def featurize_many(
    trajectories: Sequence[LabeledTrajectory],
    params: EmbeddingParams = EmbeddingParams(),
    *,
    policy: InfinitePolicy = InfinitePolicy.DROP,
    n_jobs: int = 1,
) -> List[FeatureVector]:
    """Featurize a batch; output order follows input order whatever the scheduling."""
    logger.info("featurizing %d trajectories (n_jobs=%d)", len(trajectories), n_jobs)
    if n_jobs == 1:
        return [_featurize_one(i, t, params, policy) for i, t in enumerate(trajectories)]
    return Parallel(n_jobs=n_jobs)(
        delayed(_featurize_one)(i, t, params, policy) for i, t in enumerate(trajectories)
    )


# ============================
# Feature files
# ============================

def write_features_csv(vectors: Sequence[FeatureVector], path: Union[str, Path]) -> Path:
    """CSV with header f0..f{m-1},label; empty label cell when unlabeled."""
    if not vectors:
        raise FeatureTableError("no feature vectors to write")
    width = len(vectors[0])
    if any(len(v) != width for v in vectors):
        raise InvariantError("feature vectors have different lengths")
    frame = pd.DataFrame(np.vstack([v.values for v in vectors]), columns=[f"f{i}" for i in range(width)])
    frame[LABEL_COLUMN] = pd.array([v.label for v in vectors], dtype="Int64")
    return write_frame(path, frame)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Any numeric feature table with an integer label column."""

    X: np.ndarray
    y: np.ndarray  # -1 where the label is missing
    columns: Tuple[str, ...]

    @property
    def labeled(self) -> np.ndarray:
        return self.y >= 0


def read_feature_table(path: Union[str, Path], *, label_column: str = LABEL_COLUMN) -> FeatureTable:
    path = Path(path)
    if not path.is_file():
        raise FeatureTableError(f"{path}: file not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise FeatureTableError(f"{path}: malformed CSV ({exc})") from exc
    if label_column not in frame.columns:
        raise FeatureTableError(f"{path}: missing {label_column!r} column")
    feature_columns = [c for c in frame.columns if c != label_column]
    if not feature_columns:
        raise FeatureTableError(f"{path}: no feature columns")

    numeric = frame[feature_columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(numeric)
    if bad.any():
        row, col = (int(v) for v in np.argwhere(bad)[0])
        raise FeatureTableError(
            f"{path}:{row + 2}: column {feature_columns[col]!r} has non-numeric value "
            f"{frame[feature_columns[col]].iat[row]!r}"
        )

    labels = np.full(len(frame), -1, dtype=np.int64)
    for row, raw in enumerate(frame[label_column].str.strip()):
        if raw == "":
            continue
        try:
            number = float(raw)
        except ValueError:
            number = math.nan
        if not number.is_integer() or int(number) not in CLASS_LABELS:
            raise FeatureTableError(f"{path}:{row + 2}: label {raw!r} is not one of {CLASS_LABELS}")
        labels[row] = int(number)
    return FeatureTable(X=numeric, y=labels, columns=tuple(feature_columns))
