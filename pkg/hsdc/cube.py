from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import DataError, DegenerateInputError


@dataclass(frozen=True)
class Datacube:
    """Hyperspectral volume indexed (row, col, band).

    Values are held as a read-only float64 array of shape (H, W, B); the
    file format stores them as float32.
    """

    values: np.ndarray
    wavelength_start_nm: float
    wavelength_step_nm: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DataError(f"datacube must be 3-D (got shape {values.shape})")
        if min(values.shape) < 1:
            raise DataError(f"datacube dimensions must be >= 1 (got {values.shape})")
        if not np.all(np.isfinite(values)):
            raise DataError("datacube values must be finite")
        if np.any(values < 0):
            raise DataError("datacube values must be >= 0")
        if not self.wavelength_step_nm > 0:
            raise DataError(
                f"wavelength_step_nm must be > 0 (got {self.wavelength_step_nm})"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "wavelength_start_nm", float(self.wavelength_start_nm))
        object.__setattr__(self, "wavelength_step_nm", float(self.wavelength_step_nm))

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def bands(self) -> int:
        return int(self.values.shape[2])

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.bands)

    def wavelengths(self) -> np.ndarray:
        return self.wavelength_start_nm + self.wavelength_step_nm * np.arange(self.bands)

    def with_values(self, values: np.ndarray) -> Datacube:
        return Datacube(values, self.wavelength_start_nm, self.wavelength_step_nm)


@dataclass(frozen=True)
class GrayImage:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"gray image must be 2-D (got shape {values.shape})")
        if not np.all(np.isfinite(values)):
            raise DataError("gray image values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


def normalize_max(cube: Datacube) -> Datacube:
    peak = float(cube.values.max())
    if peak <= 0:
        raise DegenerateInputError("cannot max-normalize an all-zero datacube")
    return cube.with_values(cube.values / peak)


def ss_image(cube: Datacube) -> GrayImage:
    return GrayImage(np.einsum("rcb,rcb->rc", cube.values, cube.values))
