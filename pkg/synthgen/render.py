from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from errors import GeometryError
from hsdc.cube import Datacube
from synthgen.specs import ClassSpec

CENTER_JITTER_FRACTION = 0.1
_ROUGHNESS_KNOTS = 16


def check_geometry(spec: ClassSpec, dims: tuple[int, int, int], allow_rotation: bool = False) -> None:
    height, width = dims[0], dims[1]
    grow = 1.0 + spec.boundary_roughness
    major = spec.semi_major_px[1] * grow
    minor = spec.semi_minor_px[1] * grow
    row_extent = major if allow_rotation else minor
    col_extent = major
    for axis, extent, size in (("row", row_extent, height), ("column", col_extent, width)):
        room = (size - 1) / 2.0 - CENTER_JITTER_FRACTION * size
        if extent > room:
            raise GeometryError(
                f"{spec.name}: seed {axis} extent {extent:.2f}px exceeds the {room:.2f}px "
                f"available in a {size}px dimension"
            )


def _radial_profile(roughness: float, rng: np.random.Generator) -> CubicSpline | None:
    if roughness <= 0:
        return None
    knots = np.linspace(0.0, 2.0 * np.pi, _ROUGHNESS_KNOTS + 1)
    offsets = rng.uniform(-roughness, roughness, size=_ROUGHNESS_KNOTS)
    offsets = np.append(offsets, offsets[0])
    return CubicSpline(knots, offsets, bc_type="periodic")


def render_seed_with_mask(
    spec: ClassSpec,
    dims: tuple[int, int, int],
    wavelengths_nm: np.ndarray,
    background_level: float,
    noise_std: float,
    rng: np.random.Generator,
    allow_rotation: bool = False,
) -> tuple[Datacube, np.ndarray]:
    """Render one seed and return it with its ground-truth interior."""
    check_geometry(spec, dims, allow_rotation)
    height, width, bands = dims
    wavelengths_nm = np.asarray(wavelengths_nm, dtype=np.float64)

    semi_major = rng.uniform(*spec.semi_major_px)
    semi_minor = min(rng.uniform(*spec.semi_minor_px), semi_major)
    center_row = (height - 1) / 2.0 + rng.uniform(-1.0, 1.0) * CENTER_JITTER_FRACTION * height
    center_col = (width - 1) / 2.0 + rng.uniform(-1.0, 1.0) * CENTER_JITTER_FRACTION * width
    angle = rng.uniform(-np.pi / 2, np.pi / 2) if allow_rotation else 0.0
    profile = _radial_profile(spec.boundary_roughness, rng)
    gain = 1.0 + rng.uniform(-spec.gain_jitter, spec.gain_jitter) if spec.gain_jitter > 0 else 1.0

    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    dr = rows - center_row
    dc = cols - center_col
    # Major axis along columns when angle = 0.
    along = dc * np.cos(angle) + dr * np.sin(angle)
    across = -dc * np.sin(angle) + dr * np.cos(angle)
    u = along / semi_major
    v = across / semi_minor
    rho = np.hypot(u, v)
    limit = np.ones_like(rho)
    if profile is not None:
        phi = np.mod(np.arctan2(v, u), 2.0 * np.pi)
        limit = limit + profile(phi)
    inside = rho <= limit

    signature = spec.signature_at(wavelengths_nm) * gain
    values = np.full((height, width, bands), background_level, dtype=np.float64)
    if spec.texture_amp > 0:
        speckle = 1.0 + spec.texture_amp * rng.uniform(-1.0, 1.0, size=(height, width))
    else:
        speckle = np.ones((height, width))
    values[inside] = speckle[inside][:, None] * signature[None, :]
    if noise_std > 0:
        values = values + rng.normal(0.0, noise_std, size=values.shape)
    values = np.clip(values, 0.0, None)
    # Round through float32 so a saved file reproduces the cube exactly.
    values = values.astype(np.float32).astype(np.float64)
    step = float(wavelengths_nm[1] - wavelengths_nm[0]) if bands > 1 else 1.0
    return Datacube(values, float(wavelengths_nm[0]), step), inside


def render_seed(
    spec: ClassSpec,
    dims: tuple[int, int, int],
    wavelengths_nm: np.ndarray,
    background_level: float,
    noise_std: float,
    rng: np.random.Generator,
    allow_rotation: bool = False,
) -> Datacube:
    cube, _ = render_seed_with_mask(
        spec, dims, wavelengths_nm, background_level, noise_std, rng, allow_rotation
    )
    return cube
