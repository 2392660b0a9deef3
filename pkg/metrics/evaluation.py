from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.metrics import confusion_matrix

from errors import DataError, ShapeMismatchError

SCALAR_METRICS = (
    "top1",
    "top2",
    "macro_precision",
    "macro_recall",
    "macro_f",
    "train_seconds",
    "test_seconds",
)


def confusion(true_labels: list[int] | np.ndarray, predicted_labels: list[int] | np.ndarray, k: int) -> np.ndarray:
    """K x K counts; entry (i, j) is true class i predicted as j."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise ShapeMismatchError(
            f"{true_labels.size} true labels vs {predicted_labels.size} predictions"
        )
    if k < 1:
        raise ValueError("k must be >= 1")
    if true_labels.size == 0:
        return np.zeros((k, k), dtype=np.int64)
    for name, values in (("true", true_labels), ("predicted", predicted_labels)):
        if values.min() < 0 or values.max() >= k:
            raise ValueError(f"{name} labels must lie in [0, {k})")
    return confusion_matrix(true_labels, predicted_labels, labels=np.arange(k)).astype(np.int64)


def topk_accuracy(probabilities: np.ndarray, true_labels: list[int] | np.ndarray, k: int) -> float:
    probabilities = np.asarray(probabilities, dtype=np.float64)
    true_labels = np.asarray(true_labels, dtype=np.int64)
    if probabilities.ndim != 2 or probabilities.shape[0] != true_labels.size:
        raise ShapeMismatchError(
            f"probabilities {probabilities.shape} do not match {true_labels.size} labels"
        )
    if not 1 <= k <= probabilities.shape[1]:
        raise ValueError(f"k must lie in [1, {probabilities.shape[1]}] (got {k})")
    if true_labels.size == 0:
        raise DataError("top-k accuracy of an empty set is undefined")
    # Stable sort keeps the lower class index first among equal probabilities.
    ranked = np.argsort(-probabilities, axis=1, kind="stable")[:, :k]
    return float(np.mean(np.any(ranked == true_labels[:, np.newaxis], axis=1)))


def per_class_prf(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    matrix = np.asarray(matrix, dtype=np.float64)
    hits = np.diag(matrix)
    predicted = matrix.sum(axis=0)
    actual = matrix.sum(axis=1)
    precision = np.divide(hits, predicted, out=np.zeros_like(hits), where=predicted > 0)
    recall = np.divide(hits, actual, out=np.zeros_like(hits), where=actual > 0)
    total = precision + recall
    f = np.divide(2 * precision * recall, total, out=np.zeros_like(hits), where=total > 0)
    return precision, recall, f


def macro_prf(matrix: np.ndarray) -> tuple[float, float, float]:
    precision, recall, f = per_class_prf(matrix)
    return float(precision.mean()), float(recall.mean()), float(f.mean())


@dataclass(frozen=True)
class MetricsReport:
    top1: float
    top2: float
    macro_precision: float
    macro_recall: float
    macro_f: float
    confusion: np.ndarray
    class_names: tuple[str, ...] = ()
    train_seconds: float = 0.0
    test_seconds: float = 0.0

    def scalars(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in SCALAR_METRICS}


def evaluate(
    probabilities: np.ndarray,
    true_labels: list[int] | np.ndarray,
    class_names: tuple[str, ...] | list[str] = (),
    train_seconds: float = 0.0,
    test_seconds: float = 0.0,
) -> MetricsReport:
    probabilities = np.asarray(probabilities, dtype=np.float64)
    true_labels = np.asarray(true_labels, dtype=np.int64)
    k = probabilities.shape[1]
    matrix = confusion(true_labels, probabilities.argmax(axis=1), k)
    precision, recall, f = macro_prf(matrix)
    return MetricsReport(
        top1=topk_accuracy(probabilities, true_labels, 1),
        top2=topk_accuracy(probabilities, true_labels, min(2, k)),
        macro_precision=precision,
        macro_recall=recall,
        macro_f=f,
        confusion=matrix,
        class_names=tuple(class_names),
        train_seconds=float(train_seconds),
        test_seconds=float(test_seconds),
    )


def render_confusion(matrix: np.ndarray, class_names: tuple[str, ...] | list[str] = ()) -> str:
    """Plain-text table: rows are true classes, columns predictions."""
    matrix = np.asarray(matrix, dtype=np.int64)
    k = matrix.shape[0]
    names = list(class_names) if len(class_names) == k else [str(i) for i in range(k)]
    width = max(max(len(name) for name in names), len(str(int(matrix.max(initial=0)))), 4)
    header = " " * width + " | " + " ".join(name.rjust(width) for name in names)
    lines = [header, "-" * len(header)]
    for name, row in zip(names, matrix):
        lines.append(name.rjust(width) + " | " + " ".join(str(int(v)).rjust(width) for v in row))
    return "\n".join(lines) + "\n"
