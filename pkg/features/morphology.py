from __future__ import annotations

import numpy as np

from features.ellipse import fit_ellipse
from features.mask import Mask

MORPHOLOGY_NAMES = (
    "area",
    "perimeter",
    "perimeter_area_ratio",
    "major_axis",
    "minor_axis",
    "eccentricity",
    "radius_std",
    "radius_min",
    "radius_max",
    "radius_max_min_ratio",
    "haralick_ratio",
)
_HARALICK_STD_FLOOR = 1e-9


def perimeter(mask: np.ndarray) -> int:
    """Count of 4-adjacent foreground/background pixel edges, image border included."""
    padded = np.pad(mask.astype(bool), 1, constant_values=False)
    vertical = np.count_nonzero(padded[1:, :] != padded[:-1, :])
    horizontal = np.count_nonzero(padded[:, 1:] != padded[:, :-1])
    return int(vertical + horizontal)


def contour_pixels(mask: np.ndarray) -> np.ndarray:
    """(row, col) of foreground pixels with a background 4-neighbour or on the border."""
    values = mask.astype(bool)
    padded = np.pad(values, 1, constant_values=False)
    interior = (
        padded[1:-1, 1:-1]
        & padded[:-2, 1:-1]
        & padded[2:, 1:-1]
        & padded[1:-1, :-2]
        & padded[1:-1, 2:]
    )
    return np.argwhere(values & ~interior)


def morphological_features(mask: Mask) -> np.ndarray:
    values = mask.values
    area = int(np.count_nonzero(values))
    edges = perimeter(values)
    contour = contour_pixels(values)
    ellipse = fit_ellipse(contour)
    radii = np.hypot(contour[:, 0] - ellipse.center[0], contour[:, 1] - ellipse.center[1])
    radius_std = float(radii.std())
    radius_min = float(radii.min())
    radius_max = float(radii.max())
    return np.array(
        [
            area,
            edges,
            edges / area,
            2.0 * ellipse.semi_major,
            2.0 * ellipse.semi_minor,
            ellipse.eccentricity,
            radius_std,
            radius_min,
            radius_max,
            radius_max / radius_min,
            float(radii.mean()) / max(radius_std, _HARALICK_STD_FLOOR),
        ],
        dtype=np.float64,
    )
