from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from errors import DataError, SegmentationError
from hsdc.cube import GrayImage


@dataclass(frozen=True)
class MaskParams:
    gaussian_sigma: float = 1.0
    window: int = 35
    offset_fraction: float = 0.01
    structure_size: int = 3
    min_fill: float = 0.005
    max_fill: float = 0.80

    def validate(self) -> None:
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be > 0")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be an odd number >= 1")
        if self.structure_size < 1:
            raise ValueError("structure_size must be >= 1")
        if not 0 <= self.min_fill < self.max_fill <= 1:
            raise ValueError("fill bounds must satisfy 0 <= min_fill < max_fill <= 1")


@dataclass(frozen=True)
class Mask:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=bool)
        if values.ndim != 2:
            raise DataError(f"mask must be 2-D (got shape {values.shape})")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def fill_fraction(self) -> float:
        return float(self.values.mean())


def _local_mean(image: np.ndarray, window: int) -> np.ndarray:
    # Zero padding divided by the in-bounds count averages only real pixels.
    total = ndi.uniform_filter(image, size=window, mode="constant", cval=0.0)
    count = ndi.uniform_filter(np.ones_like(image), size=window, mode="constant", cval=0.0)
    return total / count


def _binary_close(binary: np.ndarray, structure: np.ndarray) -> np.ndarray:
    # Edge padding stops the erosion step from eating true pixels at the border.
    radius = structure.shape[0] // 2
    if radius == 0:
        return binary.copy()
    padded = np.pad(binary, radius, mode="edge")
    closed = ndi.binary_closing(padded, structure=structure)
    return closed[radius:-radius, radius:-radius]


def _largest_component(binary: np.ndarray) -> np.ndarray:
    labels, count = ndi.label(binary)
    if count == 0:
        return binary
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def compute_mask(ss: GrayImage, params: MaskParams | None = None) -> Mask:
    """Blur, adaptive threshold, open then close, keep the largest 4-connected blob."""
    params = params or MaskParams()
    params.validate()
    if ss.height < 8 or ss.width < 8:
        raise DataError(f"mask input must be at least 8x8 (got {ss.height}x{ss.width})")
    image = ss.values
    # truncate=3 gives a ceil(3 sigma) kernel radius for sigma = 1.
    span = float(image.max() - image.min())
    if span == 0:
        # Flat image: every pixel passes the threshold.
        initial = np.ones(image.shape, dtype=bool)
    else:
        blurred = ndi.gaussian_filter(image, sigma=params.gaussian_sigma, mode="reflect", truncate=3.0)
        initial = blurred > _local_mean(blurred, params.window) - params.offset_fraction * span

    structure = np.ones((params.structure_size, params.structure_size), dtype=bool)
    cleaned = ndi.binary_opening(initial, structure=structure)
    cleaned = _binary_close(cleaned, structure)
    # The default 2-D labelling structure is 4-connectivity.
    mask = _largest_component(cleaned)

    fill = float(mask.mean())
    if not params.min_fill <= fill <= params.max_fill:
        raise SegmentationError(
            f"mask fill fraction {fill:.4f} outside [{params.min_fill}, {params.max_fill}]"
        )
    return Mask(mask)
