from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ConfigError, DataError
from features.mask import MaskParams, compute_mask
from features.morphology import MORPHOLOGY_NAMES, morphological_features
from features.spectral import spectral_features
from features.texture import TEXTURE_NAMES, GlcmParams, texture_features
from hsdc.cube import Datacube, ss_image

FEATURE_MODES = ("spatial", "spectral", "spatio-spectral")
SPATIAL_NAMES = TEXTURE_NAMES + MORPHOLOGY_NAMES


@dataclass(frozen=True)
class FeatureParams:
    mask: MaskParams = field(default_factory=MaskParams)
    glcm: GlcmParams = field(default_factory=GlcmParams)


@dataclass(frozen=True)
class FeatureVector:
    mode: str
    values: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.mode not in FEATURE_MODES:
            raise ConfigError(f"unknown feature mode '{self.mode}'")
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (len(self.schema),):
            raise DataError(
                f"feature vector has {values.size} values for {len(self.schema)} names"
            )
        if not np.all(np.isfinite(values)):
            raise DataError(f"{self.mode} feature vector contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def spectral_names(cube: Datacube) -> tuple[str, ...]:
    return tuple(f"band_{wl:.1f}nm" for wl in cube.wavelengths())


def check_mode(mode: str) -> str:
    if mode not in FEATURE_MODES:
        raise ConfigError(
            f"unknown feature mode '{mode}'. Expected one of: {', '.join(FEATURE_MODES)}"
        )
    return mode


def extract(cube: Datacube, mode: str, params: FeatureParams | None = None) -> FeatureVector:
    check_mode(mode)
    params = params or FeatureParams()
    ss = ss_image(cube)
    mask = compute_mask(ss, params.mask)
    parts: list[np.ndarray] = []
    names: list[str] = []
    if mode in ("spatial", "spatio-spectral"):
        parts.append(texture_features(ss, params.glcm))
        parts.append(morphological_features(mask))
        names.extend(SPATIAL_NAMES)
    if mode in ("spectral", "spatio-spectral"):
        parts.append(spectral_features(cube, mask))
        names.extend(spectral_names(cube))
    return FeatureVector(mode=mode, values=np.concatenate(parts), schema=tuple(names))


def feature_matrix(vectors: list[FeatureVector]) -> np.ndarray:
    if not vectors:
        raise DataError("no feature vectors")
    modes = {v.mode for v in vectors}
    if len(modes) != 1:
        raise DataError(f"feature vectors mix modes: {sorted(modes)}")
    return np.vstack([v.values for v in vectors])


def write_feature_csv(
    vectors: list[FeatureVector], labels: list[int], destination: Path | str
) -> None:
    frame = pd.DataFrame(feature_matrix(vectors), columns=list(vectors[0].schema))
    frame["label"] = labels
    frame.to_csv(destination, index=False, float_format="%.17g")


def read_feature_csv(source: Path | str, mode: str) -> tuple[list[FeatureVector], list[int]]:
    frame = pd.read_csv(source)
    if "label" not in frame.columns:
        raise DataError(f"{source}: missing label column")
    labels = frame.pop("label").astype(int).tolist()
    schema = tuple(frame.columns)
    vectors = [FeatureVector(mode=mode, values=row, schema=schema) for row in frame.to_numpy(dtype=np.float64)]
    return vectors, labels
