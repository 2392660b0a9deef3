from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import DataError
from features.extract import FeatureVector, feature_matrix

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    mode: str | None = None

    @classmethod
    def fit(cls, matrix: np.ndarray, mode: str | None = None) -> Standardizer:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] < 2:
            raise DataError("standardizer needs at least 2 training rows")
        return cls(
            mean=matrix.mean(axis=0),
            std=np.maximum(matrix.std(axis=0), STD_FLOOR),
            mode=mode,
        )

    @property
    def dimension(self) -> int:
        return int(self.mean.size)

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape[-1] != self.dimension:
            raise DataError(
                f"standardizer expects {self.dimension} features (got {matrix.shape[-1]})"
            )
        return (matrix - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "mode": self.mode}

    @classmethod
    def from_dict(cls, data: dict) -> Standardizer:
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
            mode=data.get("mode"),
        )


def fit_standardizer(train: list[FeatureVector]) -> Standardizer:
    return Standardizer.fit(feature_matrix(train), mode=train[0].mode)


def apply(std: Standardizer, vector: FeatureVector) -> FeatureVector:
    if std.mode is not None and vector.mode != std.mode:
        raise DataError(f"standardizer fitted on '{std.mode}' features, got '{vector.mode}'")
    return FeatureVector(mode=vector.mode, values=std.transform(vector.values), schema=vector.schema)
