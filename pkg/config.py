from __future__ import annotations

import json
import os
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable

from dotenv import load_dotenv

import runlog
from errors import ConfigError
from features.extract import FEATURE_MODES, FeatureParams
from features.mask import MaskParams
from features.texture import GlcmParams
from svm.selection import DEFAULT_C_GRID, DEFAULT_CV_ITERATIONS, DEFAULT_GAMMA_MULTIPLIERS
from synthgen.specs import DatasetSpec, benchmark_spec
from tensornet.adam import AdamHyper
from tensornet.architectures import FAMILIES, ArchConfig, desk_config
from training.augment import AugmentParams
from training.loop import EarlyStopping, TrainConfig

BASE_DIR = Path(__file__).resolve().parent
DEFAULT_OUTPUT_DIR = "runs"


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "mixed-4class"
    size: str = "desk"
    cubes_per_class: int = 60
    allow_rotation: bool = False
    workers: int = 1
    # A full DatasetSpec object; when set, kind and size are ignored.
    spec: dict | None = None

    def to_spec(self) -> DatasetSpec:
        if self.spec is not None:
            spec = DatasetSpec.from_dict(self.spec)
        else:
            spec = benchmark_spec(self.kind, size=self.size, cubes_per_class=self.cubes_per_class)
        if self.allow_rotation:
            spec = replace(spec, allow_rotation=True)
        spec.validate()
        return spec


@dataclass(frozen=True)
class FeatureConfig:
    mask: MaskParams = field(default_factory=MaskParams)
    glcm: GlcmParams = field(default_factory=GlcmParams)

    def params(self) -> FeatureParams:
        return FeatureParams(mask=self.mask, glcm=self.glcm)


@dataclass(frozen=True)
class SvmConfig:
    mode: str = "spatio-spectral"
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    gamma_multipliers: tuple[float, ...] = DEFAULT_GAMMA_MULTIPLIERS
    cv_iterations: int = DEFAULT_CV_ITERATIONS
    test_fraction: float = 0.15


@dataclass(frozen=True)
class CnnConfig:
    family: str = "resnet-b"
    stem_width: int | None = None
    stage_widths: tuple[int, ...] | None = None
    blocks_per_stage: tuple[int, ...] | None = None
    head_hidden: int | None = None
    adam: AdamHyper = field(default_factory=AdamHyper)
    augment: AugmentParams = field(default_factory=AugmentParams)
    augment_factor: int = 11
    early_stopping: EarlyStopping = field(default_factory=EarlyStopping)
    split: tuple[float, float, float] = (0.65, 0.20, 0.15)
    fit_on_validation: bool = True

    def arch(self, num_classes: int, input_shape: tuple[int, int, int]) -> ArchConfig:
        base = desk_config(self.family, num_classes, input_shape)
        overrides = {
            name: value
            for name, value in (
                ("stem_width", self.stem_width),
                ("stage_widths", self.stage_widths),
                ("blocks_per_stage", self.blocks_per_stage),
                ("head_hidden", self.head_hidden),
            )
            if value is not None
        }
        arch = replace(base, **overrides)
        arch.validate()
        return arch

    def train_config(self, arch: ArchConfig, seed: int) -> TrainConfig:
        return TrainConfig(
            arch=arch,
            adam=self.adam,
            augment=self.augment,
            augment_factor=self.augment_factor,
            early_stopping=self.early_stopping,
            fit_on_validation=self.fit_on_validation,
            seed=seed,
        )


@dataclass(frozen=True)
class MetricsConfig:
    repetitions: int = 5
    ddof: int = 0
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    cnn: CnnConfig = field(default_factory=CnnConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    seed: int = 0


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    value = raw.strip().lower()
    if value in {"1", "true", "yes", "on"}:
        return True
    if value in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(
        f"{name} must be one of 1/0/true/false/yes/no/on/off (got '{raw}')"
    )


def _default_of(item: Any) -> Any:
    if item.default is not MISSING:
        return item.default
    if item.default_factory is not MISSING:
        return item.default_factory()
    return None


def _check_scalar(value: Any, default: Any, path: str) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false (got {value!r})")
    elif isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer (got {value!r})")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number (got {value!r})")
        return float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string (got {value!r})")
    elif isinstance(default, tuple) or (default is None and isinstance(value, list)):
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be a list (got {value!r})")
        return tuple(value)
    return value


def _build(cls: type, data: Any, path: str, nested: dict[str, Callable[[Any, str], Any]] | None = None) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be an object")
    known = {item.name: item for item in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key '{path}.{key}'")
    nested = nested or {}
    values = {}
    for key, raw in data.items():
        key_path = f"{path}.{key}"
        if key in nested:
            values[key] = nested[key](raw, key_path)
        else:
            values[key] = _check_scalar(raw, _default_of(known[key]), key_path)
    return cls(**values)


def _validated(value: Any, path: str) -> Any:
    try:
        value.validate()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return value


def _leaf(cls: type) -> Callable[[Any, str], Any]:
    return lambda raw, path: _validated(_build(cls, raw, path), path)


def _plain(cls: type) -> Callable[[Any, str], Any]:
    return lambda raw, path: _build(cls, raw, path)


def _check_run(cfg: RunConfig) -> RunConfig:
    data = cfg.dataset
    if data.cubes_per_class < 1:
        raise ConfigError("dataset.cubes_per_class must be >= 1")
    if data.workers < 1:
        raise ConfigError("dataset.workers must be >= 1")
    if data.spec is not None and not isinstance(data.spec, dict):
        raise ConfigError("dataset.spec must be an object")
    svm = cfg.svm
    if svm.mode not in FEATURE_MODES:
        raise ConfigError(f"svm.mode must be one of {', '.join(FEATURE_MODES)} (got '{svm.mode}')")
    if not svm.c_grid or min(svm.c_grid) <= 0:
        raise ConfigError("svm.c_grid must hold positive values")
    if not svm.gamma_multipliers or min(svm.gamma_multipliers) <= 0:
        raise ConfigError("svm.gamma_multipliers must hold positive values")
    if svm.cv_iterations < 1:
        raise ConfigError("svm.cv_iterations must be >= 1")
    if not 0 < svm.test_fraction < 1:
        raise ConfigError("svm.test_fraction must lie in (0, 1)")
    cnn = cfg.cnn
    if cnn.family not in FAMILIES:
        raise ConfigError(f"cnn.family must be one of {', '.join(FAMILIES)} (got '{cnn.family}')")
    if cnn.augment_factor < 1:
        raise ConfigError("cnn.augment_factor must be >= 1")
    if len(cnn.split) != 3 or min(cnn.split) < 0 or abs(sum(cnn.split) - 1.0) > 1e-9:
        raise ConfigError("cnn.split must be three non-negative fractions summing to 1")
    if cnn.early_stopping.enabled and cnn.early_stopping.patience < 1:
        raise ConfigError("cnn.early_stopping.patience must be >= 1")
    metrics = cfg.metrics
    if metrics.repetitions < 1:
        raise ConfigError("metrics.repetitions must be >= 1")
    if metrics.ddof not in (0, 1):
        raise ConfigError("metrics.ddof must be 0 or 1")
    if metrics.workers < 1:
        raise ConfigError("metrics.workers must be >= 1")
    return cfg


def parse_config(data: Any, default_output_dir: str = DEFAULT_OUTPUT_DIR) -> RunConfig:
    """Builds a RunConfig from parsed JSON; unknown keys are fatal."""
    data = dict(data) if isinstance(data, dict) else data
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data.setdefault("output_dir", default_output_dir)
    cfg = _build(
        RunConfig,
        data,
        "config",
        nested={
            "dataset": _plain(DatasetConfig),
            "features": lambda raw, path: _build(
                FeatureConfig, raw, path, nested={"mask": _leaf(MaskParams), "glcm": _leaf(GlcmParams)}
            ),
            "svm": _plain(SvmConfig),
            "cnn": lambda raw, path: _build(
                CnnConfig,
                raw,
                path,
                nested={
                    "adam": _leaf(AdamHyper),
                    "augment": _leaf(AugmentParams),
                    "early_stopping": _plain(EarlyStopping),
                },
            ),
            "metrics": _plain(MetricsConfig),
            "output_dir": lambda raw, path: Path(_check_scalar(raw, "", path)).expanduser(),
        },
    )
    return _check_run(cfg)


def load_config(path: Path | str | None = None) -> RunConfig:
    """Environment (after .env) supplies defaults; the JSON file overrides them."""
    load_dotenv()
    runlog.set_debug(_env_bool("RICEHSI_DEBUG", False))
    output_dir = os.getenv("RICEHSI_OUTPUT_DIR", "").strip() or DEFAULT_OUTPUT_DIR
    if path is None:
        return parse_config({}, default_output_dir=output_dir)
    source = Path(path)
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source} is not valid JSON: {exc}") from exc
    return parse_config(data, default_output_dir=output_dir)
