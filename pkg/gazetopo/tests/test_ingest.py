"""Tests for trajectory ingest, splits and synthetic data."""

import numpy as np
import pytest

from gazetopo.embed import PointCloud, downsample
from gazetopo.errors import SplitError, TrajectoryFormatError
from gazetopo.ingest import (
    DatasetSplit,
    LabeledTrajectory,
    generate_synthetic,
    generate_synthetic_dataset,
    load_dataset,
    read_manifest,
    read_trajectory_csv,
    split_dataset,
    split_sizes,
    write_dataset,
)
from gazetopo.persistence import compute_diagrams


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def dataset_dir(tmp_path):
    _write(tmp_path / "a.csv", "t,x,y\n0,0.1,0.2\n0.0167,0.3,0.4\n0.0333,0.5,0.6\n")
    _write(tmp_path / "sub" / "b.csv", "t,x,y\n0,1,2\n1,3,4\n")
    _write(tmp_path / "manifest.csv", "path,label\na.csv,2\nsub/b.csv,\n")
    return tmp_path


def test_load_dataset_reads_samples_and_labels(dataset_dir):
    trajectories = load_dataset(dataset_dir / "manifest.csv")

    assert len(trajectories) == 2
    first, second = trajectories
    np.testing.assert_array_equal(first.samples, [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
    assert first.label == 2
    assert first.source == "a.csv"
    assert second.label is None
    np.testing.assert_array_equal(second.x, [1.0, 3.0])


def test_manifest_paths_are_relative_to_the_manifest(dataset_dir):
    entries = read_manifest(dataset_dir / "manifest.csv")
    assert entries[1].path == dataset_dir / "sub" / "b.csv"
    assert entries[1].line == 3


def test_nan_coordinate_is_reported_with_file_and_line(tmp_path):
    _write(tmp_path / "bad.csv", "t,x,y\n0,1,1\n1,NaN,2\n")
    _write(tmp_path / "manifest.csv", "path,label\nbad.csv,0\n")

    with pytest.raises(TrajectoryFormatError) as excinfo:
        load_dataset(tmp_path / "manifest.csv")

    assert excinfo.value.line == 3
    assert "bad.csv:3" in str(excinfo.value)


def test_non_numeric_cell_is_rejected(tmp_path):
    path = _write(tmp_path / "bad.csv", "t,x,y\n0,1,1\n1,2,oops\n")
    with pytest.raises(TrajectoryFormatError, match="oops"):
        read_trajectory_csv(path)


def test_wrong_header_is_rejected(tmp_path):
    path = _write(tmp_path / "bad.csv", "time,x,y\n0,1,1\n")
    with pytest.raises(TrajectoryFormatError, match="expected header"):
        read_trajectory_csv(path)


def test_missing_trajectory_file(tmp_path):
    _write(tmp_path / "manifest.csv", "path,label\nnope.csv,1\n")
    with pytest.raises(TrajectoryFormatError, match="file not found"):
        load_dataset(tmp_path / "manifest.csv")


@pytest.mark.parametrize("label", ["4", "-1", "x"])
def test_manifest_label_out_of_range(tmp_path, label):
    _write(tmp_path / "a.csv", "t,x,y\n0,1,1\n")
    _write(tmp_path / "manifest.csv", f"path,label\na.csv,{label}\n")
    with pytest.raises(TrajectoryFormatError) as excinfo:
        read_manifest(tmp_path / "manifest.csv")
    assert excinfo.value.line == 2


def test_trajectory_invariants():
    with pytest.raises(TrajectoryFormatError):
        LabeledTrajectory(samples=np.empty((0, 2)))
    with pytest.raises(TrajectoryFormatError):
        LabeledTrajectory(samples=[[0.0, np.inf]])
    with pytest.raises(TrajectoryFormatError):
        LabeledTrajectory(samples=[[0.0, 1.0]], label=7)


def test_write_dataset_reloads_to_the_same_samples(tmp_path):
    originals = generate_synthetic_dataset(2, point_count=50, seed=3)
    manifest = write_dataset(originals, tmp_path)

    reloaded = load_dataset(manifest)

    assert [t.label for t in reloaded] == [t.label for t in originals]
    for before, after in zip(originals, reloaded):
        np.testing.assert_allclose(after.samples, before.samples, rtol=0, atol=1e-12)


# ============================
# Splits
# ============================

def test_split_sizes_for_399_samples():
    assert split_sizes(399, 0.2, 0.2) == (80, 64, 255)

    split = split_dataset(399, 0.2, 0.2, seed=11)

    assert (len(split.validation), len(split.test), len(split.train)) == (80, 64, 255)


def test_partition_lookup_by_name():
    split = split_dataset(10, 0.2, 0.2, seed=3)
    assert split.partition("test") == split.test
    with pytest.raises(SplitError, match="tset"):
        split.partition("tset")


def test_split_is_deterministic():
    assert split_dataset(50, 0.2, 0.2, seed=5) == split_dataset(50, 0.2, 0.2, seed=5)


def test_different_seeds_both_partition():
    first = split_dataset(10, 0.2, 0.2, seed=1)
    second = split_dataset(10, 0.2, 0.2, seed=2)
    first.check_partition(10)
    second.check_partition(10)


def test_split_partitions_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        count = int(rng.integers(10, 500))
        seed = int(rng.integers(0, 2**32))
        split = split_dataset(count, 0.2, 0.2, seed)
        indices = split.train + split.test + split.validation
        assert sorted(indices) == list(range(count))


def test_split_rejects_empty_partitions():
    with pytest.raises(SplitError):
        split_dataset(2, 0.2, 0.2)
    with pytest.raises(SplitError):
        split_dataset(3, 0.1, 0.1)
    with pytest.raises(SplitError):
        split_dataset(10, 0.0, 0.2)
    with pytest.raises(SplitError):
        split_dataset(10, 0.2, 1.0)


def test_stratified_split_balances_classes():
    labels = [0] * 20 + [1] * 20 + [2] * 20 + [3] * 20
    split = split_dataset(80, 0.2, 0.25, seed=4, labels=labels, stratify=True)

    split.check_partition(80)
    for label in range(4):
        assert sum(labels[i] == label for i in split.validation) == 4
        assert sum(labels[i] == label for i in split.test) == 4


def test_split_from_dict_rejects_malformed():
    with pytest.raises(SplitError):
        DatasetSplit.from_dict({"train": [0], "test": [1]})


# ============================
# Synthetic classes
# ============================

def test_generate_synthetic_is_deterministic():
    first = generate_synthetic(0, 200, 0.0, seed=9)
    second = generate_synthetic(0, 200, 0.0, seed=9)

    np.testing.assert_array_equal(first.samples, second.samples)
    assert first.label == 0
    assert len(first) == 200


def test_generate_synthetic_rejects_bad_arguments():
    with pytest.raises(TrajectoryFormatError):
        generate_synthetic(4, 200)
    with pytest.raises(TrajectoryFormatError):
        generate_synthetic(0, 9)


def _h1_persistence(class_id, seed):
    trajectory = downsample(generate_synthetic(class_id, 200, 0.01, seed=seed), 4)
    _, d1 = compute_diagrams(PointCloud(trajectory.samples))
    return np.sort(d1.deaths - d1.births)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_loop_class_has_one_dominant_cycle(seed):
    persistence = _h1_persistence(0, seed)

    assert persistence.size >= 1
    others = persistence[:-1]
    if others.size:
        assert persistence[-1] > 10 * np.median(others)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_jump_class_loops_are_shorter_than_the_loop_class(seed):
    jumps = _h1_persistence(3, seed)
    loop = _h1_persistence(0, seed)

    assert (jumps.max() if jumps.size else 0.0) < loop.max()
