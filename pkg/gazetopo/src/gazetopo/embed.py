"""Downsampling and delay embeddings that turn a trajectory into point clouds.

Indexing follows t_k = k * r with 1-based k: the first sample kept is sample
``r`` (0-based index ``r - 1``), not sample 1. An off-by-one here changes every
diagram downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .artifacts import write_frame
from .errors import EmbeddingError
from .ingest import LabeledTrajectory

__all__ = [
    "PointCloud",
    "EmbeddingParams",
    "CloudSet",
    "downsample",
    "normalize",
    "delay_embed_coordinate",
    "combined_embed",
    "build_clouds",
    "write_cloud_csv",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[1] < 1:
            raise EmbeddingError(f"points must form an (n, k) array, got shape {points.shape}")
        if points.shape[0] == 0:
            raise EmbeddingError("point cloud is empty")
        if not np.all(np.isfinite(points)):
            raise EmbeddingError("point cloud contains non-finite coordinates")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def ambient_dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class EmbeddingParams:
    dimension: int = 3
    delay: int = 10
    reduction: int = 20
    normalize: bool = False
    include_combined: bool = False

    def __post_init__(self) -> None:
        for name in ("dimension", "delay", "reduction"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise EmbeddingError(f"{name} must be an integer >= 1, got {value!r}")

    @property
    def span(self) -> int:
        """Samples consumed by one embedded point beyond the first: (d - 1) * tau."""
        return (self.dimension - 1) * self.delay

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "delay": self.delay,
            "reduction": self.reduction,
            "normalize": self.normalize,
            "include_combined": self.include_combined,
        }


class CloudSet(NamedTuple):
    raw: PointCloud
    x: PointCloud
    y: PointCloud
    combined: Optional[PointCloud] = None

    def named(self) -> Tuple[Tuple[str, PointCloud], ...]:
        pairs = [("raw", self.raw), ("x", self.x), ("y", self.y)]
        if self.combined is not None:
            pairs.append(("combined", self.combined))
        return tuple(pairs)


def downsample(trajectory: LabeledTrajectory, r: int) -> LabeledTrajectory:
    """Keep samples r, 2r, ..., floor(N/r)*r (1-based)."""
    if r < 1:
        raise EmbeddingError(f"reduction factor must be >= 1, got {r}")
    if r == 1:
        return trajectory
    if len(trajectory) < r:
        raise EmbeddingError(f"empty downsample: {len(trajectory)} samples with reduction {r}")
    kept = trajectory.samples[r - 1::r]
    return trajectory.with_samples(kept, reduction=trajectory.reduction * r)


def normalize(trajectory: LabeledTrajectory) -> LabeledTrajectory:
    """Per-coordinate z-score; constant coordinates are only centred."""
    samples = trajectory.samples
    centred = samples - samples.mean(axis=0)
    scale = samples.std(axis=0)
    scale[scale == 0] = 1.0
    return trajectory.with_samples(centred / scale)


def _embedding_indices(length: int, d: int, tau: int) -> np.ndarray:
    rows = length - (d - 1) * tau
    if rows < 1:
        raise EmbeddingError(
            f"series of length {length} too short for dimension {d} and delay {tau} "
            f"(needs more than {(d - 1) * tau} samples)"
        )
    return np.arange(rows)[:, None] + np.arange(d)[None, :] * tau


def delay_embed_coordinate(series: Sequence[float], d: int, tau: int) -> PointCloud:
    """Point i is (s_i, s_{i+tau}, ..., s_{i+(d-1)tau}); N - (d-1)tau points in R^d."""
    if d < 1 or tau < 1:
        raise EmbeddingError(f"dimension and delay must be >= 1, got d={d}, tau={tau}")
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise EmbeddingError("series must be one-dimensional")
    return PointCloud(values[_embedding_indices(values.shape[0], d, tau)])


def combined_embed(trajectory: LabeledTrajectory, d: int, tau: int) -> PointCloud:
    """Concatenation of the x and y embeddings, a cloud in R^(2d)."""
    x_part = delay_embed_coordinate(trajectory.x, d, tau).points
    y_part = delay_embed_coordinate(trajectory.y, d, tau).points
    return PointCloud(np.hstack([x_part, y_part]))


def build_clouds(trajectory: LabeledTrajectory, params: EmbeddingParams) -> CloudSet:
    reduced = downsample(trajectory, params.reduction)
    if params.normalize:
        reduced = normalize(reduced)
    clouds = CloudSet(
        raw=PointCloud(reduced.samples),
        x=delay_embed_coordinate(reduced.x, params.dimension, params.delay),
        y=delay_embed_coordinate(reduced.y, params.dimension, params.delay),
        combined=combined_embed(reduced, params.dimension, params.delay) if params.include_combined else None,
    )
    logger.debug(
        "clouds for %s: raw=%d x=%d y=%d",
        trajectory.source or "<trajectory>",
        len(clouds.raw),
        len(clouds.x),
        len(clouds.y),
    )
    return clouds


def write_cloud_csv(cloud: PointCloud, path: Union[str, Path]) -> Path:
    columns = [f"c{i}" for i in range(cloud.ambient_dim)]
    return write_frame(path, pd.DataFrame(cloud.points, columns=columns))
