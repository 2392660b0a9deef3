from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.feature import graycomatrix, graycoprops

from hsdc.cube import GrayImage

TEXTURE_NAMES = ("contrast", "dissimilarity", "homogeneity", "ASM", "energy", "correlation")


@dataclass(frozen=True)
class GlcmParams:
    levels: int = 32
    distances: tuple[int, ...] = (1,)
    angles_deg: tuple[float, ...] = (0.0, 90.0)

    def validate(self) -> None:
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if self.levels > 65536:
            raise ValueError("levels must be <= 65536")
        if not self.distances or any(d < 1 for d in self.distances):
            raise ValueError("distances must be a non-empty list of positive integers")
        if not self.angles_deg:
            raise ValueError("angles_deg must not be empty")


def quantize(image: np.ndarray, levels: int) -> np.ndarray:
    low = float(image.min())
    high = float(image.max())
    if high <= low:
        return np.zeros(image.shape, dtype=np.uint16)
    scaled = np.floor((image - low) / (high - low) * levels)
    return np.clip(scaled, 0, levels - 1).astype(np.uint16)


def glcm(
    ss: GrayImage,
    levels: int = 32,
    distances: tuple[int, ...] = (1,),
    angles_deg: tuple[float, ...] = (0.0, 90.0),
) -> np.ndarray:
    """Symmetric co-occurrence distribution averaged over all offsets."""
    GlcmParams(levels, tuple(distances), tuple(angles_deg)).validate()
    quantized = quantize(ss.values, levels)
    counts = graycomatrix(
        quantized,
        distances=list(distances),
        angles=[np.deg2rad(a) for a in angles_deg],
        levels=levels,
        symmetric=True,
        normed=True,
    )
    per_offset = counts.reshape(levels, levels, -1)
    return per_offset.mean(axis=2)


def texture_features(ss: GrayImage, params: GlcmParams | None = None) -> np.ndarray:
    params = params or GlcmParams()
    dist = glcm(ss, params.levels, params.distances, params.angles_deg)
    stacked = dist[:, :, np.newaxis, np.newaxis]
    return np.array(
        [float(graycoprops(stacked, name)[0, 0]) for name in TEXTURE_NAMES],
        dtype=np.float64,
    )
