import json

import numpy as np
import pandas as pd
import pytest

from gazetopo.errors import ReportError
from gazetopo.report import classification_report, write_report


def test_hand_counted_example():
    report = classification_report([0, 0, 1, 1], [0, 1, 1, 1])

    assert report.accuracy == pytest.approx(0.75)
    class0, class1 = report.per_class[0], report.per_class[1]
    assert (class0.precision, class0.recall) == (1.0, 0.5)
    assert class0.f1 == pytest.approx(2 / 3)
    assert class1.precision == pytest.approx(2 / 3)
    assert class1.recall == 1.0
    assert class1.f1 == pytest.approx(0.8)
    np.testing.assert_array_equal(report.confusion[:2, :2], [[1, 1], [0, 2]])


def test_perfect_prediction():
    labels = [0, 1, 2, 3, 3, 2]
    report = classification_report(labels, labels)
    assert report.accuracy == 1.0
    assert all(m.f1 == 1.0 for m in report.per_class)


def test_empty_prediction_column_gives_zero_precision():
    report = classification_report([0, 2, 2], [0, 0, 0])
    assert report.per_class[2].precision == 0.0
    assert report.per_class[2].f1 == 0.0
    assert report.per_class[3].support == 0


def test_report_invariants_on_random_labels():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 200))
        y_true = rng.integers(0, 4, size=n)
        y_pred = rng.integers(0, 4, size=n)
        report = classification_report(y_true, y_pred)

        assert report.confusion.sum() == n
        np.testing.assert_array_equal(report.confusion.sum(axis=1), np.bincount(y_true, minlength=4))
        assert [m.support for m in report.per_class] == np.bincount(y_true, minlength=4).tolist()
        assert report.accuracy == pytest.approx(np.trace(report.confusion) / n)
        for m in report.per_class:
            if m.precision + m.recall > 0:
                assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
            else:
                assert m.f1 == 0.0


@pytest.mark.parametrize(
    "y_true, y_pred",
    [([0, 1], [0]), ([], []), ([0, 4], [0, 1]), ([0, 1], [0, -1])],
)
def test_invalid_inputs(y_true, y_pred):
    with pytest.raises(ReportError):
        classification_report(y_true, y_pred)


def test_write_report_files(tmp_path):
    report = classification_report([0, 0, 1, 3], [0, 1, 1, 3])
    write_report(report, tmp_path / "report.json", tmp_path / "confusion.csv")

    payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert payload["accuracy"] == 0.75
    assert payload["classes"]["1"]["support"] == 1
    assert payload["confusion"][0] == [1, 1, 0, 0]

    frame = pd.read_csv(tmp_path / "confusion.csv")
    assert list(frame.columns) == ["true", "pred_0", "pred_1", "pred_2", "pred_3"]
    assert frame["pred_1"].tolist() == [1, 1, 0, 0]


def test_render_is_aligned_text():
    text = classification_report([0, 1, 2, 3], [0, 1, 2, 2]).render("== test ==")
    lines = text.splitlines()
    assert lines[0] == "== test =="
    assert "precision" in lines[1]
    assert "accuracy" in text
