from __future__ import annotations

import numpy as np

from errors import DataError, ShapeMismatchError
from features.mask import Mask
from hsdc.cube import Datacube


def spectral_features(cube: Datacube, mask: Mask) -> np.ndarray:
    if (mask.height, mask.width) != (cube.height, cube.width):
        raise ShapeMismatchError(
            f"mask {mask.height}x{mask.width} does not match cube {cube.height}x{cube.width}"
        )
    if not mask.values.any():
        raise DataError("cannot average a spectrum over an empty mask")
    return cube.values[mask.values].mean(axis=0)
