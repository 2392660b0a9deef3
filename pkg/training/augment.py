from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import ConfigError
from hsdc.cube import Datacube


@dataclass(frozen=True)
class AugmentParams:
    allow_hflip: bool = True
    allow_vflip: bool = True
    max_shift_fraction: float = 0.04

    def validate(self) -> None:
        if not 0 <= self.max_shift_fraction < 0.5:
            raise ConfigError("max_shift_fraction must lie in [0, 0.5)")

    def shift_bounds(self, height: int, width: int) -> tuple[int, int]:
        return int(np.floor(self.max_shift_fraction * height)), int(np.floor(self.max_shift_fraction * width))


def shift(values: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Moves content by (dr, dc) pixels; vacated pixels are zero."""
    out = np.zeros_like(values)
    h, w = values.shape[:2]
    if abs(dr) >= h or abs(dc) >= w:
        return out
    src_r = slice(max(0, -dr), h - max(0, dr))
    dst_r = slice(max(0, dr), h - max(0, -dr))
    src_c = slice(max(0, -dc), w - max(0, dc))
    dst_c = slice(max(0, dc), w - max(0, -dc))
    out[dst_r, dst_c] = values[src_r, src_c]
    return out


def augment(cube: Datacube, params: AugmentParams, rng: np.random.Generator) -> Datacube:
    # Both coins and the shift are always drawn so the stream does not depend on the flags.
    hflip = rng.random() < 0.5
    vflip = rng.random() < 0.5
    max_dr, max_dc = params.shift_bounds(cube.height, cube.width)
    dr = int(rng.integers(-max_dr, max_dr + 1))
    dc = int(rng.integers(-max_dc, max_dc + 1))

    values = cube.values
    if hflip and params.allow_hflip:
        values = values[:, ::-1, :]
    if vflip and params.allow_vflip:
        values = values[::-1, :, :]
    if dr or dc:
        values = shift(values, dr, dc)
    return cube.with_values(values)


def expand_training_set(
    cubes: list[Datacube],
    params: AugmentParams,
    factor: int = 11,
    seed: int = 0,
) -> list[Datacube]:
    """Each cube followed by factor - 1 augmented variants of it."""
    if factor < 1:
        raise ConfigError("augment factor must be >= 1")
    params.validate()
    expanded: list[Datacube] = []
    for index, cube in enumerate(cubes):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), index]))
        expanded.append(cube)
        expanded += [augment(cube, params, rng) for _ in range(factor - 1)]
    return expanded


def expanded_labels(labels: list[int] | np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.asarray(labels, dtype=np.int64), factor)
