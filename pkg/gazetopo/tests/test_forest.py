"""Tests for the random forest classifier."""

import numpy as np
import pytest

from gazetopo.errors import InputError, ModelFormatError
from gazetopo.forest import (
    DecisionTree,
    ForestConfig,
    ForestModel,
    Leaf,
    Split,
    gini,
    load_model,
    majority_vote,
    predict,
    save_model,
    split_counts,
    train_forest,
    train_tree,
)


def _blobs(n, features, separation, seed):
    """Four Gaussian classes with unit spread, centres ``separation`` apart on the axes."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 4
    centres = np.zeros((4, features))
    centres[np.arange(4), np.arange(4)] = separation
    X = centres[y] + rng.normal(size=(n, features))
    return X, y


@pytest.fixture(scope="module")
def blob_data():
    X, y = _blobs(800, 8, 6.0, seed=0)
    return X[:600], y[:600], X[600:], y[600:]


def test_gini():
    assert gini([0, 0, 1, 1]) == pytest.approx(0.5)
    assert gini([2, 2, 2]) == 0.0
    assert gini([0, 1, 2, 3]) == pytest.approx(0.75)
    with pytest.raises(InputError):
        gini([])


def test_majority_vote_breaks_ties_low():
    assert majority_vote([3, 1, 3, 1]) == 1
    assert majority_vote([2]) == 2


def test_single_tree_fits_distinct_training_rows():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 5))
    y = rng.integers(0, 4, size=60)

    tree = train_tree(X, y, np.random.default_rng(2))

    np.testing.assert_array_equal(tree.predict(X), y)


def test_tree_respects_max_depth():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 4))
    y = rng.integers(0, 4, size=80)
    tree = train_tree(X, y, rng, max_depth=2)
    assert tree.depth() <= 2


def test_threshold_between_adjacent_doubles():
    low = 1.0
    high = np.nextafter(1.0, 2.0)
    tree = train_tree(np.array([[low], [high]]), [0, 1], np.random.default_rng(0))
    assert tree.predict_one(np.array([low])) == 0
    assert tree.predict_one(np.array([high])) == 1


def test_tree_serialization_layout():
    tree = DecisionTree(Split(1, 0.5, Leaf(0), Split(0, 2.0, Leaf(1), Leaf(3))))
    nodes = tree.to_list()

    assert nodes == [
        {"feature": 1, "threshold": 0.5},
        {"label": 0},
        {"feature": 0, "threshold": 2.0},
        {"label": 1},
        {"label": 3},
    ]
    assert DecisionTree.from_list(nodes, feature_count=2) == tree
    with pytest.raises(ModelFormatError):
        DecisionTree.from_list(nodes[:-1], feature_count=2)
    with pytest.raises(ModelFormatError):
        DecisionTree.from_list(nodes, feature_count=1)


def test_forest_separates_blobs(blob_data):
    X_train, y_train, X_test, y_test = blob_data
    model = train_forest(X_train, y_train, ForestConfig(seed=4))

    accuracy = np.mean(model.predict_many(X_test) == y_test)
    assert accuracy >= 0.95


def test_forest_ignores_duplicated_columns(blob_data):
    X_train, y_train, X_test, y_test = blob_data
    model = train_forest(np.hstack([X_train, X_train]), y_train, ForestConfig(n_trees=30, seed=4))

    accuracy = np.mean(model.predict_many(np.hstack([X_test, X_test])) == y_test)
    assert accuracy >= 0.95


def test_retraining_gives_identical_bytes(tmp_path, blob_data):
    X_train, y_train, _, _ = blob_data
    config = ForestConfig(n_trees=8, seed=11)

    first = save_model(train_forest(X_train, y_train, config), tmp_path / "a.json")
    second = save_model(train_forest(X_train, y_train, config, n_jobs=2), tmp_path / "b.json")

    assert first.read_bytes() == second.read_bytes()


def test_saved_model_predicts_the_same(tmp_path, blob_data):
    X_train, y_train, X_test, _ = blob_data
    model = train_forest(X_train, y_train, ForestConfig(n_trees=5, seed=1))
    restored = load_model(save_model(model, tmp_path / "model.json"))

    np.testing.assert_array_equal(restored.predict_many(X_test), model.predict_many(X_test))
    assert predict(restored, X_test[0]) == model.predict(X_test[0])


def test_model_validation(blob_data):
    X_train, y_train, _, _ = blob_data
    payload = train_forest(X_train, y_train, ForestConfig(n_trees=2, seed=0)).to_dict()

    with pytest.raises(ModelFormatError, match="version"):
        ForestModel.from_dict({**payload, "format_version": 99})
    with pytest.raises(ModelFormatError):
        ForestModel.from_dict({**payload, "trees": payload["trees"][:1]})
    with pytest.raises(ModelFormatError):
        ForestModel.from_dict({k: v for k, v in payload.items() if k != "config"})


def test_load_model_rejects_garbage(tmp_path):
    path = tmp_path / "model.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_model(path)
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "missing.json")


def test_prediction_dimension_mismatch(blob_data):
    X_train, y_train, _, _ = blob_data
    model = train_forest(X_train, y_train, ForestConfig(n_trees=2))
    with pytest.raises(InputError):
        model.predict(np.zeros(3))


def test_split_counts_match_split_nodes(blob_data):
    X_train, y_train, _, _ = blob_data
    model = train_forest(X_train, y_train, ForestConfig(n_trees=5, seed=2))
    splits = sum(isinstance(node, Split) for tree in model.trees for node in tree.nodes())

    counts = split_counts(model)
    assert counts.shape == (8,)
    assert counts.sum() == splits
    assert np.all(counts >= 0)


def test_train_forest_rejects_bad_input():
    with pytest.raises(InputError):
        train_forest(np.empty((0, 3)), [])
    with pytest.raises(InputError):
        train_forest(np.zeros((3, 2)), [0, 1, 5])
    with pytest.raises(InputError):
        train_forest(np.array([[0.0], [np.nan]]), [0, 1])
    with pytest.raises(InputError):
        ForestConfig(n_trees=0)


def test_single_class_training_set_is_one_leaf():
    tree = train_tree(np.arange(12.0).reshape(6, 2), [2] * 6, np.random.default_rng(0))
    assert tree.root == Leaf(2)


def test_two_points_split_at_the_midpoint():
    tree = train_tree(np.array([[0.0], [1.0]]), [0, 1], np.random.default_rng(0))
    assert tree.root == Split(0, 0.5, Leaf(0), Leaf(1))


def test_node_only_looks_at_its_feature_draw():
    # four features, draw of two; only the last column carries the label
    y = np.array([0, 1] * 10)
    X = np.zeros((20, 4))
    X[:, 3] = y

    leaves = 0
    for seed in range(40):
        drawn = np.random.default_rng(seed).permutation(4)[:2]
        tree = train_tree(X, y, np.random.default_rng(seed))
        if 3 in drawn:
            assert tree.root == Split(3, 0.5, Leaf(0), Leaf(1))
        else:
            assert tree.root == Leaf(0)
            leaves += 1
    assert 0 < leaves < 40
