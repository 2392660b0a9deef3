from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def rbf(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"rbf inputs must have equal length (got {x.size} and {y.size})")
    diff = x - y
    return float(np.exp(-gamma * float(diff @ diff)))


def rbf_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"rbf inputs must have equal length (got {a.shape[1]} and {b.shape[1]})")
    return np.exp(-gamma * cdist(a, b, metric="sqeuclidean"))


class KernelRowCache:
    """Lazily computed rows of the training kernel matrix."""

    def __init__(self, x: np.ndarray, gamma: float) -> None:
        self._x = x
        self._gamma = gamma
        self._rows: dict[int, np.ndarray] = {}

    def row(self, index: int) -> np.ndarray:
        cached = self._rows.get(index)
        if cached is None:
            cached = rbf_matrix(self._x[index : index + 1], self._x, self._gamma)[0]
            self._rows[index] = cached
        return cached

    def __len__(self) -> int:
        return len(self._rows)
