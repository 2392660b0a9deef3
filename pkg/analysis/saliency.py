from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from errors import DataError
from hsdc.cube import Datacube, normalize_max
from tensornet.network import Network


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    target_class: int

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"saliency map must be 2-D (got shape {values.shape})")
        if np.any(values < 0):
            raise DataError("saliency values must be >= 0")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


def saliency_map(net: Network, cube: Datacube, target_class: int | None = None) -> SaliencyMap:
    """|d score / d input| of the pre-softmax class score, max over bands.

    The gradient is taken in inference mode on the max-normalized cube.
    """
    x = normalize_max(cube).values[np.newaxis]
    logits = net.logits(x, "infer")
    classes = logits.shape[1]
    if target_class is None:
        target_class = int(np.argmax(logits[0]))
    if not 0 <= target_class < classes:
        raise ValueError(f"target class {target_class} outside [0, {classes})")
    seed = np.zeros_like(logits)
    seed[0, target_class] = 1.0
    grad = net.backward(seed)
    return SaliencyMap(np.abs(grad[0]).max(axis=2), target_class)


def region_contrast(saliency: SaliencyMap, mask: np.ndarray) -> float:
    """Mean saliency inside the mask over mean saliency outside it."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != saliency.values.shape:
        raise DataError(f"mask {mask.shape} does not match saliency {saliency.values.shape}")
    if mask.all() or not mask.any():
        raise DataError("mask must have both inside and outside pixels")
    outside = float(saliency.values[~mask].mean())
    inside = float(saliency.values[mask].mean())
    return inside / outside if outside > 0 else float("inf")


def to_gray8(saliency: SaliencyMap) -> np.ndarray:
    values = saliency.values
    low, high = float(values.min()), float(values.max())
    if high <= low:
        return np.zeros(values.shape, dtype=np.uint8)
    return np.round((values - low) / (high - low) * 255.0).astype(np.uint8)


def write_saliency_pgm(saliency: SaliencyMap, destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    # Pillow writes 8-bit grayscale through the PPM plugin as binary P5.
    Image.fromarray(to_gray8(saliency)).save(path, format="PPM")
    return path


def write_saliency_csv(saliency: SaliencyMap, destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, saliency.values, delimiter=",", fmt="%.17g")
    return path
