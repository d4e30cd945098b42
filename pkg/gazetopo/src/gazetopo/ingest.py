"""Trajectory datasets: CSV ingest, deterministic splits and synthetic classes.

File layout (UTF-8, decimal point):

* trajectory CSV, header ``t,x,y``, one row per sample in temporal order;
* manifest CSV, header ``path,label``; paths are relative to the manifest's
  directory and an empty label marks an unlabeled trajectory.

Only the left-eye channel is ingested, but nothing in the manifest schema cares
which channel a file holds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .artifacts import atomic_write_text, write_frame
from .errors import InvariantError, SplitError, TrajectoryFormatError

__all__ = [
    "CLASS_LABELS",
    "DEFAULT_SAMPLE_RATE_HZ",
    "PARTITION_NAMES",
    "LabeledTrajectory",
    "DatasetSplit",
    "ManifestEntry",
    "read_trajectory_csv",
    "write_trajectory_csv",
    "read_manifest",
    "load_dataset",
    "write_dataset",
    "split_sizes",
    "split_dataset",
    "generate_synthetic",
    "generate_synthetic_dataset",
]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Emotion quadrants: 0 HVHA, 1 HVLA, 2 LVLA, 3 LVHA.
CLASS_LABELS: Tuple[int, ...] = (0, 1, 2, 3)
DEFAULT_SAMPLE_RATE_HZ = 60.0
PARTITION_NAMES: Tuple[str, ...] = ("train", "test", "validation")

TRAJECTORY_COLUMNS = ["t", "x", "y"]
MANIFEST_COLUMNS = ["path", "label"]


def _validate_label(label: Optional[int]) -> Optional[int]:
    if label is None:
        return None
    if isinstance(label, bool) or not isinstance(label, (int, np.integer)):
        raise TrajectoryFormatError(f"label must be an integer, got {label!r}")
    if int(label) not in CLASS_LABELS:
        raise TrajectoryFormatError(f"label {label} outside {{0,1,2,3}}")
    return int(label)


@dataclass(frozen=True, eq=False)
class LabeledTrajectory:
    """A gaze recording: an (N, 2) array of screen coordinates plus its class.

    ``reduction`` counts how many samples of the original recording each kept
    sample stands for; ``effective_rate_hz`` is the nominal rate divided by it.
    """

    samples: np.ndarray
    label: Optional[int] = None
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    reduction: int = 1
    source: str = ""

    def __post_init__(self) -> None:
        try:
            samples = np.array(self.samples, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise TrajectoryFormatError("samples must be numeric (x, y) pairs") from exc
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise TrajectoryFormatError(f"samples must have shape (N, 2), got {samples.shape}")
        if samples.shape[0] == 0:
            raise TrajectoryFormatError("trajectory has no samples")
        if not np.all(np.isfinite(samples)):
            raise TrajectoryFormatError("trajectory contains non-finite coordinates")
        if not self.sample_rate_hz > 0:
            raise TrajectoryFormatError("sample_rate_hz must be positive")
        if self.reduction < 1:
            raise TrajectoryFormatError("reduction must be >= 1")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "label", _validate_label(self.label))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def x(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def effective_rate_hz(self) -> float:
        return self.sample_rate_hz / self.reduction

    def with_samples(self, samples: np.ndarray, *, reduction: Optional[int] = None) -> "LabeledTrajectory":
        return replace(self, samples=samples, reduction=self.reduction if reduction is None else reduction)


# ============================
# CSV ingest
# ============================

def _read_str_frame(path: Path, expected: List[str]) -> pd.DataFrame:
    if not path.is_file():
        raise TrajectoryFormatError("file not found", path=path)
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise TrajectoryFormatError("file is empty", path=path, line=1) from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise TrajectoryFormatError(f"malformed CSV ({exc})", path=path) from exc
    header = [str(c).strip() for c in frame.columns]
    if header != expected:
        raise TrajectoryFormatError(
            f"expected header {','.join(expected)}, got {','.join(header)}", path=path, line=1
        )
    frame.columns = expected
    return frame


def read_trajectory_csv(
    path: PathLike,
    *,
    label: Optional[int] = None,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    source: Optional[str] = None,
) -> LabeledTrajectory:
    """Read one ``t,x,y`` file. Errors name the file and the 1-based line."""
    path = Path(path)
    frame = _read_str_frame(path, TRAJECTORY_COLUMNS)
    if frame.empty:
        raise TrajectoryFormatError("no samples after header", path=path, line=2)

    numeric = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(numeric)
    if bad.any():
        row, col = (int(v) for v in np.argwhere(bad)[0])
        raw = frame.iat[row, col]
        raise TrajectoryFormatError(
            f"column {TRAJECTORY_COLUMNS[col]!r} has non-finite or non-numeric value {raw!r}",
            path=path,
            line=row + 2,
        )
    return LabeledTrajectory(
        samples=numeric[:, 1:3],
        label=label,
        sample_rate_hz=sample_rate_hz,
        source=str(path) if source is None else source,
    )


def write_trajectory_csv(trajectory: LabeledTrajectory, path: PathLike) -> Path:
    """Write ``t,x,y`` with ``t`` in seconds at the effective sample rate."""
    t = np.arange(len(trajectory), dtype=np.float64) / trajectory.effective_rate_hz
    frame = pd.DataFrame({"t": t, "x": trajectory.x, "y": trajectory.y})
    return write_frame(path, frame)


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: Optional[int]
    line: int
    raw_path: str


def read_manifest(manifest_path: PathLike) -> List[ManifestEntry]:
    manifest_path = Path(manifest_path)
    frame = _read_str_frame(manifest_path, MANIFEST_COLUMNS)
    base = manifest_path.parent
    entries: List[ManifestEntry] = []
    for offset, (raw_path, raw_label) in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        raw_path = raw_path.strip()
        raw_label = raw_label.strip()
        if not raw_path:
            raise TrajectoryFormatError("empty path", path=manifest_path, line=line)
        label: Optional[int] = None
        if raw_label:
            try:
                label = int(raw_label)
            except ValueError as exc:
                raise TrajectoryFormatError(
                    f"label {raw_label!r} is not an integer", path=manifest_path, line=line
                ) from exc
            if label not in CLASS_LABELS:
                raise TrajectoryFormatError(
                    f"label {label} outside {{0,1,2,3}}", path=manifest_path, line=line
                )
        target = Path(raw_path)
        if not target.is_absolute():
            target = base / target
        entries.append(ManifestEntry(path=target, label=label, line=line, raw_path=raw_path))
    return entries


def load_dataset(manifest_path: PathLike, *, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ) -> List[LabeledTrajectory]:
    """One trajectory per manifest row, in manifest order, labels from the manifest."""
    entries = read_manifest(manifest_path)
    trajectories = [
        read_trajectory_csv(entry.path, label=entry.label, sample_rate_hz=sample_rate_hz, source=entry.raw_path)
        for entry in entries
    ]
    logger.info("loaded %d trajectories from %s", len(trajectories), manifest_path)
    return trajectories


def write_dataset(trajectories: Sequence[LabeledTrajectory], out_dir: PathLike, *, subdir: str = "trajectories") -> Path:
    """Persist trajectories plus a ``manifest.csv`` that ``load_dataset`` reads back."""
    out_dir = Path(out_dir)
    rows = []
    for index, trajectory in enumerate(trajectories):
        relative = f"{subdir}/{index:04d}.csv"
        write_trajectory_csv(trajectory, out_dir / relative)
        rows.append({"path": relative, "label": "" if trajectory.label is None else str(trajectory.label)})
    manifest = out_dir / "manifest.csv"
    frame = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    atomic_write_text(manifest, frame.to_csv(index=False, lineterminator="\n"))
    logger.info("wrote %d trajectories and %s", len(rows), manifest)
    return manifest


# ============================
# Splits
# ============================

@dataclass(frozen=True)
class DatasetSplit:
    train: Tuple[int, ...]
    test: Tuple[int, ...]
    validation: Tuple[int, ...]
    seed: int

    def check_partition(self, count: int) -> None:
        parts = self.train + self.test + self.validation
        if len(parts) != count or set(parts) != set(range(count)):
            raise InvariantError(f"split does not partition 0..{count - 1}")

    def partition(self, name: str) -> Tuple[int, ...]:
        if name not in PARTITION_NAMES:
            raise SplitError(f"unknown partition {name!r}, expected one of {', '.join(PARTITION_NAMES)}")
        return getattr(self, name)

    def to_dict(self) -> Dict:
        return {
            "seed": int(self.seed),
            "train": [int(i) for i in self.train],
            "test": [int(i) for i in self.test],
            "validation": [int(i) for i in self.validation],
        }

    @staticmethod
    def from_dict(data: Dict) -> "DatasetSplit":
        try:
            return DatasetSplit(
                train=tuple(int(i) for i in data["train"]),
                test=tuple(int(i) for i in data["test"]),
                validation=tuple(int(i) for i in data["validation"]),
                seed=int(data["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SplitError(f"malformed split object: {exc}") from exc


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def split_sizes(count: int, validation_fraction: float, test_fraction: float) -> Tuple[int, int, int]:
    """(validation, test, train) sizes: validation first, test from the remainder."""
    n_validation = _round_half_up(count * validation_fraction)
    n_test = _round_half_up((count - n_validation) * test_fraction)
    return n_validation, n_test, count - n_validation - n_test


def _check_fractions(validation_fraction: float, test_fraction: float) -> None:
    for name, value in (("validation_fraction", validation_fraction), ("test_fraction", test_fraction)):
        if not 0.0 < value < 1.0:
            raise SplitError(f"{name} must lie in (0, 1), got {value}")


def split_dataset(
    count: int,
    validation_fraction: float = 0.2,
    test_fraction: float = 0.2,
    seed: int = 0,
    *,
    labels: Optional[Sequence[Optional[int]]] = None,
    stratify: bool = False,
) -> DatasetSplit:
    """Seeded shuffle into validation, test and train index lists.

    With ``stratify`` the same rounding rule is applied inside each label group.
    """
    if count < 3:
        raise SplitError(f"need at least 3 samples to split, got {count}")
    _check_fractions(validation_fraction, test_fraction)
    rng = np.random.default_rng(seed)

    if not stratify:
        n_validation, n_test, n_train = split_sizes(count, validation_fraction, test_fraction)
        if min(n_validation, n_test, n_train) < 1:
            raise SplitError(
                f"fractions {validation_fraction}/{test_fraction} leave an empty partition for {count} samples"
            )
        order = rng.permutation(count)
        validation = order[:n_validation]
        test = order[n_validation:n_validation + n_test]
        train = order[n_validation + n_test:]
    else:
        if labels is None or len(labels) != count:
            raise SplitError("stratified split needs one label per sample")
        keys = np.array([-1 if label is None else int(label) for label in labels])
        validation_parts, test_parts, train_parts = [], [], []
        for key in np.unique(keys):
            group = rng.permutation(np.flatnonzero(keys == key))
            n_validation, n_test, _ = split_sizes(len(group), validation_fraction, test_fraction)
            validation_parts.append(group[:n_validation])
            test_parts.append(group[n_validation:n_validation + n_test])
            train_parts.append(group[n_validation + n_test:])
        validation = np.concatenate(validation_parts)
        test = np.concatenate(test_parts)
        train = np.concatenate(train_parts)
        if min(len(validation), len(test), len(train)) < 1:
            raise SplitError("stratified fractions leave an empty partition")

    split = DatasetSplit(
        train=tuple(sorted(int(i) for i in train)),
        test=tuple(sorted(int(i) for i in test)),
        validation=tuple(sorted(int(i) for i in validation)),
        seed=int(seed),
    )
    split.check_partition(count)
    return split


# ============================
# Synthetic classes
# ============================
# Coordinates are normalised screen units (the unit square). Each class has its
# own geometric regime:
#   0  large noisy loop traversed a few times
#   1  one small dense cluster (mean-reverting drift)
#   2  straight-line sweeps back and forth
#   3  fixations on three well separated clusters with instantaneous jumps

DEFAULT_SYNTHETIC_POINTS = 1000
DEFAULT_SYNTHETIC_NOISE = 0.01


def _loop(rng: np.random.Generator, n: int) -> np.ndarray:
    center = 0.5 + rng.uniform(-0.05, 0.05, size=2)
    radius = rng.uniform(0.25, 0.32)
    aspect = rng.uniform(0.8, 1.0)
    turns = rng.uniform(2.5, 3.5)
    theta = rng.uniform(0.0, 2 * np.pi) + 2 * np.pi * turns * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(theta), center[1] + aspect * radius * np.sin(theta)])


def _mean_reverting(rng: np.random.Generator, start: np.ndarray, center: np.ndarray, n: int, step: float) -> np.ndarray:
    out = np.empty((n, 2))
    position = start.astype(np.float64)
    kicks = rng.normal(0.0, step, size=(n, 2))
    for i in range(n):
        position = position + 0.05 * (center - position) + kicks[i]
        out[i] = position
    return out


def _cluster(rng: np.random.Generator, n: int) -> np.ndarray:
    center = rng.uniform(0.35, 0.65, size=2)
    return _mean_reverting(rng, center, center, n, step=0.004)


def _sweep(rng: np.random.Generator, n: int) -> np.ndarray:
    angle = rng.uniform(0.0, np.pi)
    direction = np.array([np.cos(angle), np.sin(angle)])
    length = rng.uniform(0.5, 0.7)
    sweeps = rng.uniform(1.5, 2.5)
    phase = (sweeps * np.arange(n) / n + rng.uniform(0.0, 1.0)) % 1.0
    along = length * (2.0 * np.abs(phase - 0.5) - 0.5)
    return 0.5 + along[:, None] * direction[None, :]


def _cluster_centers(rng: np.random.Generator, k: int, min_gap: float) -> np.ndarray:
    for _ in range(1000):
        centers = rng.uniform(0.15, 0.85, size=(k, 2))
        gaps = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
        if np.all(gaps[np.triu_indices(k, 1)] >= min_gap):
            return centers
    return np.array([[0.25, 0.25], [0.75, 0.3], [0.5, 0.75]])[:k]


def _jumps(rng: np.random.Generator, n: int) -> np.ndarray:
    centers = _cluster_centers(rng, 3, min_gap=0.3)
    out = np.empty((n, 2))
    current = int(rng.integers(len(centers)))
    filled = 0
    while filled < n:
        dwell = min(int(rng.integers(60, 200)), n - filled)
        center = centers[current]
        out[filled:filled + dwell] = _mean_reverting(rng, center, center, dwell, step=0.003)
        filled += dwell
        current = (current + int(rng.integers(1, len(centers)))) % len(centers)
    return out


_REGIMES = {0: _loop, 1: _cluster, 2: _sweep, 3: _jumps}


def generate_synthetic(
    class_id: int,
    point_count: int = DEFAULT_SYNTHETIC_POINTS,
    noise_sigma: float = DEFAULT_SYNTHETIC_NOISE,
    seed: int = 0,
    *,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> LabeledTrajectory:
    """Deterministic trajectory of class ``class_id`` (pure function of its arguments)."""
    if class_id not in _REGIMES:
        raise TrajectoryFormatError(f"class_id must be one of {sorted(_REGIMES)}, got {class_id}")
    if point_count < 10:
        raise TrajectoryFormatError(f"point_count must be >= 10, got {point_count}")
    if noise_sigma < 0:
        raise TrajectoryFormatError("noise_sigma must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(class_id),)))
    clean = _REGIMES[class_id](rng, point_count)
    noisy = clean + rng.normal(0.0, noise_sigma, size=clean.shape) if noise_sigma > 0 else clean
    return LabeledTrajectory(
        samples=noisy,
        label=class_id,
        sample_rate_hz=sample_rate_hz,
        source=f"synthetic/class{class_id}/seed{seed}",
    )


def generate_synthetic_dataset(
    per_class: int,
    *,
    point_count: int = DEFAULT_SYNTHETIC_POINTS,
    noise_sigma: float = DEFAULT_SYNTHETIC_NOISE,
    seed: int = 0,
) -> List[LabeledTrajectory]:
    """``per_class`` trajectories of each class, interleaved by class, seeds seed, seed+1, ..."""
    return [
        generate_synthetic(class_id, point_count, noise_sigma, seed + repeat)
        for repeat in range(per_class)
        for class_id in CLASS_LABELS
    ]
