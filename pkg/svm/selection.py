from __future__ import annotations

import numpy as np
from sklearn.model_selection import StratifiedShuffleSplit

from errors import DataError
from runlog import log
from svm.multiclass import predict_labels, train_multiclass
from svm.smo import SvmHyper

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_MULTIPLIERS = (0.001, 0.01, 0.1, 1.0)
DEFAULT_CV_ITERATIONS = 5
VALIDATION_FRACTION = 0.2


def default_grid(
    dimension: int,
    c_values: tuple[float, ...] = DEFAULT_C_GRID,
    gamma_multipliers: tuple[float, ...] = DEFAULT_GAMMA_MULTIPLIERS,
) -> list[SvmHyper]:
    return [SvmHyper(C=c, gamma=g / dimension) for c in c_values for g in gamma_multipliers]


def _split_state(seed: int) -> int:
    # scikit-learn wants a 32-bit state; fold the 64-bit seed through SeedSequence.
    return int(np.random.SeedSequence(int(seed) & (2**64 - 1)).generate_state(1)[0])


def cross_validate(
    x: np.ndarray,
    labels: np.ndarray | list[int],
    grid: list[SvmHyper],
    n_iter: int = DEFAULT_CV_ITERATIONS,
    seed: int = 0,
) -> SvmHyper:
    """Pick the grid point with the best mean accuracy over stratified shuffled splits."""
    if not grid:
        raise ValueError("hyperparameter grid must not be empty")
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    _, counts = np.unique(labels, return_counts=True)
    if counts.min() < 2:
        raise DataError("every class needs at least 2 samples for cross-validation")
    if len(grid) == 1:
        return grid[0]

    splitter = StratifiedShuffleSplit(
        n_splits=n_iter, test_size=VALIDATION_FRACTION, random_state=_split_state(seed)
    )
    splits = list(splitter.split(x, labels))
    results: list[tuple[float, SvmHyper]] = []
    for hyper in grid:
        accuracies = []
        for train_idx, val_idx in splits:
            model = train_multiclass(x[train_idx], labels[train_idx], hyper)
            accuracies.append(float(np.mean(predict_labels(model, x[val_idx]) == labels[val_idx])))
        mean_acc = float(np.mean(accuracies))
        log("svm", "grid point scored", C=hyper.C, gamma=hyper.gamma, accuracy=mean_acc)
        results.append((mean_acc, hyper))
    best_acc, best = min(results, key=lambda item: (-item[0], item[1].C, item[1].gamma))
    log("svm", "hyperparameters selected", C=best.C, gamma=best.gamma, accuracy=best_acc)
    return best
