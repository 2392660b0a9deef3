from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import expit

from errors import DataError, ShapeMismatchError
from features.standardize import Standardizer
from svm.smo import BinarySvmModel, SvmHyper, train_binary


@dataclass(frozen=True)
class SvmModel:
    classes: tuple[int, ...]
    pair_models: dict[tuple[int, int], BinarySvmModel]
    standardizer: Standardizer
    hyper: SvmHyper
    class_names: tuple[str, ...] = field(default_factory=tuple)

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def train_multiclass(
    x: np.ndarray,
    labels: np.ndarray | list[int],
    hyper: SvmHyper,
    class_names: tuple[str, ...] = (),
) -> SvmModel:
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != labels.shape[0]:
        raise ShapeMismatchError(f"{x.shape[0]} feature rows for {labels.shape[0]} labels")
    classes = tuple(int(c) for c in np.unique(labels))
    if len(classes) < 2:
        raise DataError(f"multiclass SVM needs >= 2 classes (got {len(classes)})")
    standardizer = Standardizer.fit(x)
    z = standardizer.transform(x)
    pair_models: dict[tuple[int, int], BinarySvmModel] = {}
    # Pair (a, b) with a < b: +1 means class a.
    for a, b in combinations(classes, 2):
        chosen = (labels == a) | (labels == b)
        y = np.where(labels[chosen] == a, 1.0, -1.0)
        pair_models[(a, b)] = train_binary(z[chosen], y, hyper)
    return SvmModel(
        classes=classes,
        pair_models=pair_models,
        standardizer=standardizer,
        hyper=hyper,
        class_names=tuple(class_names),
    )


def scores_from_decisions(
    decisions: dict[tuple[int, int], np.ndarray], classes: tuple[int, ...], n: int
) -> np.ndarray:
    """Votes plus a squashed decision-sum tie-breaker below one vote."""
    index = {label: k for k, label in enumerate(classes)}
    k = len(classes)
    votes = np.zeros((n, k))
    decision_sum = np.zeros((n, k))
    for (a, b), values in decisions.items():
        ia, ib = index[a], index[b]
        wins_a = values > 0
        votes[:, ia] += wins_a
        votes[:, ib] += ~wins_a
        decision_sum[:, ia] += values
        decision_sum[:, ib] -= values
    return votes + expit(decision_sum) / (k + 1)


def predict_scores(model: SvmModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.standardizer.dimension:
        raise ShapeMismatchError(
            f"model expects {model.standardizer.dimension} features (got {x.shape[1]})"
        )
    z = model.standardizer.transform(x)
    decisions = {pair: binary.decision(z) for pair, binary in model.pair_models.items()}
    return scores_from_decisions(decisions, model.classes, x.shape[0])


def predict_labels(model: SvmModel, x: np.ndarray) -> np.ndarray:
    # argmax keeps the first (lowest-index) class on ties.
    scores = predict_scores(model, x)
    return np.asarray(model.classes)[np.argmax(scores, axis=1)]
