"""Classification reports: confusion matrix plus per-class precision/recall/F1."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .artifacts import write_frame, write_json
from .errors import ReportError
from .forest import N_CLASSES

__all__ = ["ClassMetrics", "ClassificationReport", "classification_report", "write_report"]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    """Rows of ``confusion`` are true classes, columns are predictions."""

    confusion: np.ndarray
    per_class: Tuple[ClassMetrics, ...]
    accuracy: float

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def macro_f1(self) -> float:
        return float(np.mean([m.f1 for m in self.per_class]))

    def to_dict(self) -> Dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "total": self.total,
            "confusion": self.confusion.astype(int).tolist(),
            "classes": {
                str(c): {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
                for c, m in enumerate(self.per_class)
            },
        }

    def render(self, title: str = "") -> str:
        lines: List[str] = []
        if title:
            lines.append(title)
        lines.append(f"{'class':>8} {'precision':>10} {'recall':>10} {'f1-score':>10} {'support':>8}")
        for c, m in enumerate(self.per_class):
            lines.append(f"{c:>8} {m.precision:>10.2f} {m.recall:>10.2f} {m.f1:>10.2f} {m.support:>8d}")
        lines.append(f"{'accuracy':>8} {'':>10} {'':>10} {self.accuracy:>10.3f} {self.total:>8d}")
        lines.append("confusion (rows true, columns predicted):")
        for row in self.confusion:
            lines.append("  " + " ".join(f"{int(v):>5d}" for v in row))
        return "\n".join(lines)


def _check_labels(name: str, labels: np.ndarray) -> None:
    if np.any((labels < 0) | (labels >= N_CLASSES)):
        raise ReportError(f"{name} contains labels outside 0..{N_CLASSES - 1}")


def classification_report(y_true: Sequence[int], y_pred: Sequence[int]) -> ClassificationReport:
    y_true = np.asarray(y_true, dtype=np.int64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ReportError(f"y_true has {y_true.size} labels but y_pred has {y_pred.size}")
    if y_true.size == 0:
        raise ReportError("cannot report on zero samples")
    _check_labels("y_true", y_true)
    _check_labels("y_pred", y_pred)

    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    correct = np.diag(confusion)
    predicted = confusion.sum(axis=0)
    support = confusion.sum(axis=1)

    per_class = []
    for c in range(N_CLASSES):
        precision = correct[c] / predicted[c] if predicted[c] else 0.0
        recall = correct[c] / support[c] if support[c] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassMetrics(float(precision), float(recall), float(f1), int(support[c])))
    accuracy = float(correct.sum() / y_true.size)
    return ClassificationReport(confusion=confusion, per_class=tuple(per_class), accuracy=accuracy)


def write_report(report: ClassificationReport, json_path: Union[str, Path], confusion_csv: Union[str, Path, None] = None) -> Path:
    write_json(json_path, report.to_dict())
    if confusion_csv is not None:
        frame = pd.DataFrame(report.confusion, columns=[f"pred_{c}" for c in range(N_CLASSES)])
        frame.insert(0, "true", list(range(N_CLASSES)))
        write_frame(confusion_csv, frame)
    return Path(json_path)
