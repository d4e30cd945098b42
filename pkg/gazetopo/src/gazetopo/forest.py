"""Random forest classifier: bagged Gini trees with sqrt(m) feature draws.

Every tree gets its own generator seeded from (config.seed, tree index), so the
order or parallelism of training never changes the model. Ties, both in leaf
majorities and in the forest vote, go to the lowest class index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from .artifacts import read_json, write_json
from .errors import InputError, ModelFormatError

__all__ = [
    "N_CLASSES",
    "ForestConfig",
    "Leaf",
    "Split",
    "DecisionTree",
    "ForestModel",
    "gini",
    "majority_vote",
    "train_tree",
    "train_forest",
    "predict",
    "split_counts",
    "save_model",
    "load_model",
]

logger = logging.getLogger(__name__)

N_CLASSES = 4
MODEL_FORMAT_VERSION = 1
# impurity gains below this are float noise, not a split
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise InputError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth is not None and self.max_depth < 1:
            raise InputError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise InputError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    def to_dict(self) -> Dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }

    @staticmethod
    def from_dict(data: Dict) -> "ForestConfig":
        return ForestConfig(
            n_trees=int(data["n_trees"]),
            max_depth=None if data.get("max_depth") is None else int(data["max_depth"]),
            min_samples_split=int(data["min_samples_split"]),
            seed=int(data["seed"]),
            bootstrap=bool(data.get("bootstrap", True)),
        )


# ============================
# Trees
# ============================

@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: Node

    def predict_one(self, x: np.ndarray) -> int:
        node = self.root
        while isinstance(node, Split):
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.label

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(row) for row in np.asarray(X, dtype=np.float64)], dtype=np.int64)

    def nodes(self) -> Iterator[Node]:
        """Preorder walk."""
        stack: List[Node] = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Split):
                stack.append(node.right)
                stack.append(node.left)

    def depth(self) -> int:
        def _depth(node: Node) -> int:
            if isinstance(node, Leaf):
                return 0
            return 1 + max(_depth(node.left), _depth(node.right))

        return _depth(self.root)

    def to_list(self) -> List[Dict]:
        out: List[Dict] = []
        for node in self.nodes():
            if isinstance(node, Split):
                out.append({"feature": node.feature, "threshold": node.threshold})
            else:
                out.append({"label": node.label})
        return out

    @staticmethod
    def from_list(nodes: Sequence[Dict], feature_count: int) -> "DecisionTree":
        cursor = iter(nodes)

        def _read() -> Node:
            try:
                raw = next(cursor)
            except StopIteration as exc:
                raise ModelFormatError("tree node list ends early") from exc
            if "label" in raw:
                label = int(raw["label"])
                if not 0 <= label < N_CLASSES:
                    raise ModelFormatError(f"leaf label {label} outside 0..{N_CLASSES - 1}")
                return Leaf(label)
            feature = int(raw["feature"])
            if not 0 <= feature < feature_count:
                raise ModelFormatError(f"split feature {feature} outside 0..{feature_count - 1}")
            threshold = float(raw["threshold"])
            if not math.isfinite(threshold):
                raise ModelFormatError("split threshold must be finite")
            left = _read()
            right = _read()
            return Split(feature, threshold, left, right)

        root = _read()
        if next(cursor, None) is not None:
            raise ModelFormatError("tree node list has trailing nodes")
        return DecisionTree(root)


def gini(labels: Sequence[int]) -> float:
    """1 - sum_c (n_c / n)^2."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise InputError("gini impurity of an empty node is undefined")
    counts = np.bincount(labels)
    return _gini_from_counts(counts, labels.size)


def _gini_from_counts(counts: np.ndarray, n: int) -> float:
    fractions = counts / n
    return float(1.0 - np.sum(fractions * fractions))


def majority_vote(labels: Sequence[int]) -> int:
    """Most frequent label; ties go to the lowest class index."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=N_CLASSES)
    return int(np.argmax(counts))


class _Candidate(NamedTuple):
    score: float
    feature: int
    threshold: float


def _best_threshold(values: np.ndarray, labels: np.ndarray, feature: int) -> Optional[_Candidate]:
    """Lowest weighted child Gini over midpoints of consecutive distinct values."""
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    xs = values[order]
    distinct = xs[1:] > xs[:-1]
    if not distinct.any():
        return None
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), labels[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    gini_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
    gini_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    weighted[~distinct] = np.inf
    position = int(np.argmin(weighted))
    low, high = xs[position], xs[position + 1]
    threshold = (low + high) / 2.0
    if not low <= threshold < high:
        # adjacent doubles: the midpoint rounds onto the upper value
        threshold = float(low)
    return _Candidate(float(weighted[position]), feature, float(threshold))


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    subset_size: int,
    depth: int,
    max_depth: Optional[int],
    min_samples_split: int,
) -> Node:
    counts = np.bincount(y, minlength=N_CLASSES)
    majority = int(np.argmax(counts))
    n = y.shape[0]
    if counts[majority] == n or n < min_samples_split or (max_depth is not None and depth >= max_depth):
        return Leaf(majority)

    parent = _gini_from_counts(counts, n)
    best: Optional[_Candidate] = None
    # the draw is the first subset_size features of a fresh permutation
    for feature in rng.permutation(X.shape[1])[:subset_size]:
        candidate = _best_threshold(X[:, feature], y, int(feature))
        if candidate is None or candidate.score > parent - _MIN_GAIN:
            continue
        if best is None or candidate.score < best.score:
            best = candidate
    if best is None:
        return Leaf(majority)

    goes_left = X[:, best.feature] <= best.threshold
    left = _grow(X[goes_left], y[goes_left], rng, subset_size, depth + 1, max_depth, min_samples_split)
    right = _grow(X[~goes_left], y[~goes_left], rng, subset_size, depth + 1, max_depth, min_samples_split)
    return Split(best.feature, best.threshold, left, right)


def train_tree(
    X: np.ndarray,
    y: Sequence[int],
    rng: np.random.Generator,
    m: Optional[int] = None,
    *,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
) -> DecisionTree:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise InputError(f"need matching non-empty X and y, got {X.shape} and {y.shape}")
    m = X.shape[1] if m is None else m
    if m != X.shape[1]:
        raise InputError(f"feature count {m} does not match X with {X.shape[1]} columns")
    subset_size = max(1, math.isqrt(m))
    return DecisionTree(_grow(X, y, rng, subset_size, 0, max_depth, min_samples_split))


# ============================
# Forest
# ============================

@dataclass(frozen=True)
class ForestModel:
    trees: Tuple[DecisionTree, ...]
    config: ForestConfig
    feature_count: int

    def votes(self, x: np.ndarray) -> np.ndarray:
        x = self._check_row(x)
        return np.array([tree.predict_one(x) for tree in self.trees], dtype=np.int64)

    def predict(self, x: np.ndarray) -> int:
        return majority_vote(self.votes(x))

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise InputError("expected a 2-D feature matrix")
        return np.array([self.predict(row) for row in X], dtype=np.int64)

    def _check_row(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(getattr(x, "values", x), dtype=np.float64).reshape(-1)
        if x.shape[0] != self.feature_count:
            raise InputError(f"model expects {self.feature_count} features, got {x.shape[0]}")
        return x

    def to_dict(self) -> Dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "config": self.config.to_dict(),
            "feature_count": self.feature_count,
            "trees": [tree.to_list() for tree in self.trees],
        }

    @staticmethod
    def from_dict(data: Dict) -> "ForestModel":
        try:
            version = int(data["format_version"])
            if version != MODEL_FORMAT_VERSION:
                raise ModelFormatError(f"unsupported model format version {version}")
            config = ForestConfig.from_dict(data["config"])
            feature_count = int(data["feature_count"])
            if feature_count < 1:
                raise ModelFormatError("feature_count must be positive")
            trees = tuple(DecisionTree.from_list(nodes, feature_count) for nodes in data["trees"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed model: {exc}") from exc
        if len(trees) != config.n_trees:
            raise ModelFormatError(f"model lists {len(trees)} trees but its config says {config.n_trees}")
        return ForestModel(trees=trees, config=config, feature_count=feature_count)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(tree_index),)))


def _fit_one(X: np.ndarray, y: np.ndarray, config: ForestConfig, tree_index: int) -> DecisionTree:
    rng = _tree_rng(config.seed, tree_index)
    n = y.shape[0]
    rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
    return train_tree(
        X[rows],
        y[rows],
        rng,
        X.shape[1],
        max_depth=config.max_depth,
        min_samples_split=config.min_samples_split,
    )


def train_forest(X: np.ndarray, y: Sequence[int], config: ForestConfig = ForestConfig(), *, n_jobs: int = 1) -> ForestModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("empty training set")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise InputError("need at least two training samples")
    if np.any((y < 0) | (y >= N_CLASSES)):
        raise InputError(f"labels must lie in 0..{N_CLASSES - 1}")
    if not np.all(np.isfinite(X)):
        raise InputError("training features must be finite")

    logger.info("training %d trees on %d samples x %d features", config.n_trees, X.shape[0], X.shape[1])
    if n_jobs == 1:
        trees = [_fit_one(X, y, config, t) for t in range(config.n_trees)]
    else:
        trees = Parallel(n_jobs=n_jobs)(delayed(_fit_one)(X, y, config, t) for t in range(config.n_trees))
    return ForestModel(trees=tuple(trees), config=config, feature_count=int(X.shape[1]))


def predict(model: ForestModel, x: np.ndarray) -> int:
    return model.predict(x)


def split_counts(model: ForestModel) -> np.ndarray:
    """How many splits use each feature, summed over the forest."""
    counts = np.zeros(model.feature_count, dtype=np.int64)
    for tree in model.trees:
        for node in tree.nodes():
            if isinstance(node, Split):
                counts[node.feature] += 1
    return counts


def save_model(model: ForestModel, path: Union[str, Path]) -> Path:
    return write_json(path, model.to_dict())


def load_model(path: Union[str, Path]) -> ForestModel:
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"{path}: file not found")
    try:
        data = read_json(path)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return ForestModel.from_dict(data)
