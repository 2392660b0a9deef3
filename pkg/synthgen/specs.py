from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from errors import ConfigError

BENCHMARK_KINDS = ("spectral-only", "spatial-only", "mixed-4class", "easy-6class")
DESK_DIMS = (16, 48, 24)
FULL_DIMS = (50, 170, 110)
WAVELENGTH_FIRST_NM = 950.0
WAVELENGTH_LAST_NM = 1550.0


@dataclass(frozen=True)
class Bump:
    center_nm: float
    width_nm: float
    amplitude: float


@dataclass(frozen=True)
class ClassSpec:
    name: str
    semi_major_px: tuple[float, float]
    semi_minor_px: tuple[float, float]
    boundary_roughness: float = 0.0
    texture_amp: float = 0.0
    baseline: float = 0.4
    signature: tuple[Bump, ...] = ()
    gain_jitter: float = 0.0

    def signature_at(self, wavelengths_nm: np.ndarray) -> np.ndarray:
        lam = np.asarray(wavelengths_nm, dtype=np.float64)
        out = np.full(lam.shape, self.baseline, dtype=np.float64)
        for bump in self.signature:
            out += bump.amplitude * np.exp(-0.5 * ((lam - bump.center_nm) / bump.width_nm) ** 2)
        return out

    def validate(self, wavelengths_nm: np.ndarray) -> None:
        for label, (lo, hi) in (
            ("semi_major_px", self.semi_major_px),
            ("semi_minor_px", self.semi_minor_px),
        ):
            if not 0 < lo <= hi:
                raise ConfigError(f"{self.name}: {label} must satisfy 0 < min <= max (got {lo}, {hi})")
        if self.semi_minor_px[1] > self.semi_major_px[1] or self.semi_minor_px[0] > self.semi_major_px[0]:
            raise ConfigError(f"{self.name}: semi_minor_px must not exceed semi_major_px")
        if self.boundary_roughness < 0 or self.texture_amp < 0:
            raise ConfigError(f"{self.name}: boundary_roughness and texture_amp must be >= 0")
        if not 0 <= self.baseline <= 1:
            raise ConfigError(f"{self.name}: baseline must be in [0, 1] (got {self.baseline})")
        if not 0 <= self.gain_jitter < 1:
            raise ConfigError(f"{self.name}: gain_jitter must be in [0, 1) (got {self.gain_jitter})")
        for bump in self.signature:
            if bump.width_nm <= 0:
                raise ConfigError(f"{self.name}: signature bump width must be > 0")
        values = self.signature_at(wavelengths_nm)
        if values.min() < 0 or values.max() > 1.5:
            raise ConfigError(f"{self.name}: signature must stay within [0, 1.5]")


@dataclass(frozen=True)
class DatasetSpec:
    classes: tuple[ClassSpec, ...]
    cubes_per_class: int
    cube_dims: tuple[int, int, int] = DESK_DIMS
    wavelength_start_nm: float = WAVELENGTH_FIRST_NM
    wavelength_step_nm: float = (WAVELENGTH_LAST_NM - WAVELENGTH_FIRST_NM) / (DESK_DIMS[2] - 1)
    background_level: float = 0.02
    noise_std: float = 0.01
    allow_rotation: bool = False

    def wavelengths(self) -> np.ndarray:
        return self.wavelength_start_nm + self.wavelength_step_nm * np.arange(self.cube_dims[2])

    def validate(self) -> None:
        if not self.classes:
            raise ConfigError("dataset must define at least one class")
        if self.cubes_per_class < 1:
            raise ConfigError("cubes_per_class must be >= 1")
        height, width, bands = self.cube_dims
        if height < 8 or width < 8 or bands < 4:
            raise ConfigError(f"cube_dims must be at least (8, 8, 4) (got {self.cube_dims})")
        if self.wavelength_step_nm <= 0:
            raise ConfigError("wavelength_step_nm must be > 0")
        if self.noise_std < 0 or self.background_level < 0:
            raise ConfigError("noise_std and background_level must be >= 0")
        names = [spec.name for spec in self.classes]
        if len(set(names)) != len(names):
            raise ConfigError(f"class names must be unique (got {names})")
        for spec in self.classes:
            if not spec.name or any(ch in spec.name for ch in "\t\n/\\"):
                raise ConfigError(f"class name '{spec.name}' is not usable as a path part")
            spec.validate(self.wavelengths())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> DatasetSpec:
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown dataset keys: {', '.join(unknown)}")
        classes = tuple(_class_from_dict(item) for item in data.get("classes", []))
        kwargs = {key: value for key, value in data.items() if key != "classes"}
        if "cube_dims" in kwargs:
            kwargs["cube_dims"] = tuple(int(v) for v in kwargs["cube_dims"])
        return cls(classes=classes, **kwargs)


def _class_from_dict(data: dict) -> ClassSpec:
    known = {f for f in ClassSpec.__dataclass_fields__}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown class keys: {', '.join(unknown)}")
    kwargs = dict(data)
    kwargs["semi_major_px"] = tuple(float(v) for v in kwargs["semi_major_px"])
    kwargs["semi_minor_px"] = tuple(float(v) for v in kwargs["semi_minor_px"])
    kwargs["signature"] = tuple(Bump(**bump) for bump in kwargs.get("signature", []))
    return ClassSpec(**kwargs)


def _bump(center_nm: float, amplitude: float = 0.3, width_nm: float = 60.0) -> tuple[Bump, ...]:
    return (Bump(center_nm=center_nm, width_nm=width_nm, amplitude=amplitude),)


def benchmark_spec(
    kind: str, size: str = "desk", cubes_per_class: int = 60
) -> DatasetSpec:
    """Canonical synthetic datasets.

    spectral-only shares one shape distribution and varies the signature;
    spatial-only does the opposite; mixed-4class crosses two shapes with two
    signatures so only the joint cue names all four classes; easy-6class
    mixes both cues with wide margins.
    """
    if kind not in BENCHMARK_KINDS:
        raise ConfigError(
            f"unknown benchmark kind '{kind}'. Expected one of: {', '.join(BENCHMARK_KINDS)}"
        )
    if size == "desk":
        dims = DESK_DIMS
        scale = 1.0
    elif size == "full":
        dims = FULL_DIMS
        scale = min(FULL_DIMS[0] / DESK_DIMS[0], FULL_DIMS[1] / DESK_DIMS[1])
    else:
        raise ConfigError(f"unknown benchmark size '{size}'. Expected one of: desk, full")

    def shape(major: tuple[float, float], minor: tuple[float, float]) -> dict:
        return {
            "semi_major_px": (major[0] * scale, major[1] * scale),
            "semi_minor_px": (minor[0] * scale, minor[1] * scale),
        }

    common = {"boundary_roughness": 0.03, "texture_amp": 0.04, "gain_jitter": 0.1}
    background = 0.02
    if kind == "spectral-only":
        seed_shape = shape((12.0, 15.0), (4.0, 5.0))
        classes = tuple(
            ClassSpec(name=f"spec{k}", signature=_bump(1040.0 + 140.0 * k), **seed_shape, **common)
            for k in range(4)
        )
    elif kind == "spatial-only":
        # Dark background keeps mask-boundary pixels from leaking shape into
        # the mean spectrum.
        background = 0.0
        shapes = [
            shape((15.0, 16.0), (3.5, 4.0)),
            shape((12.5, 13.5), (4.5, 5.0)),
            shape((10.0, 11.0), (5.0, 5.5)),
            shape((13.5, 14.5), (5.0, 5.5)),
        ]
        classes = tuple(
            ClassSpec(name=f"shape{k}", signature=_bump(1250.0), **shapes[k], **common)
            for k in range(4)
        )
    elif kind == "mixed-4class":
        slim = shape((14.0, 15.5), (3.6, 4.2))
        plump = shape((11.5, 13.0), (4.6, 5.2))
        sig_a = _bump(1150.0, amplitude=0.22)
        sig_b = _bump(1330.0, amplitude=0.22)
        classes = (
            ClassSpec(name="slim_a", signature=sig_a, **slim, **common),
            ClassSpec(name="slim_b", signature=sig_b, **slim, **common),
            ClassSpec(name="plump_a", signature=sig_a, **plump, **common),
            ClassSpec(name="plump_b", signature=sig_b, **plump, **common),
        )
    else:
        layouts = [
            (shape((14.5, 16.0), (3.5, 4.0)), _bump(1000.0)),
            (shape((10.0, 11.0), (4.8, 5.4)), _bump(1000.0)),
            (shape((12.0, 13.5), (4.0, 4.6)), _bump(1150.0)),
            (shape((12.0, 13.5), (4.0, 4.6)), _bump(1300.0)),
            (shape((14.5, 16.0), (3.5, 4.0)), _bump(1450.0)),
            (shape((10.0, 11.0), (4.8, 5.4)), _bump(1450.0, amplitude=0.15) + _bump(1050.0, amplitude=0.15)),
        ]
        classes = tuple(
            ClassSpec(name=f"variety{k}", signature=sig, **geometry, **common)
            for k, (geometry, sig) in enumerate(layouts)
        )

    return DatasetSpec(
        classes=classes,
        cubes_per_class=cubes_per_class,
        cube_dims=dims,
        wavelength_start_nm=WAVELENGTH_FIRST_NM,
        wavelength_step_nm=(WAVELENGTH_LAST_NM - WAVELENGTH_FIRST_NM) / (dims[2] - 1),
        background_level=background,
        noise_std=0.01,
    )
