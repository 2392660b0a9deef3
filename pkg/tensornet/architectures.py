from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from errors import ConfigError
from runlog import debug, log
from tensornet.layers import (
    BatchNorm,
    Conv2D,
    Dense,
    GlobalAvgPool,
    Layer,
    MaxPool2,
    Residual,
    Swish,
)
from tensornet.network import Network

FAMILIES = ("vgg", "resnet", "resnet-b")
BOTTLENECK_EXPANSION = 4

# Published totals in millions, logged for comparison only.
REFERENCE_PARAMETER_MILLIONS = {"vgg": 35.80, "resnet": 35.97, "resnet-b": 35.76}


@dataclass(frozen=True)
class ArchConfig:
    family: str
    input_shape: tuple[int, int, int]
    num_classes: int
    stem_width: int = 8
    stage_widths: tuple[int, ...] = (8, 16)
    blocks_per_stage: tuple[int, ...] = (2, 2)
    head_hidden: int = 32

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown architecture family {self.family!r} (expected one of {FAMILIES})")
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ConfigError(f"input_shape must be three positive dims (got {self.input_shape})")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if self.stem_width < 1 or self.head_hidden < 1:
            raise ConfigError("stem_width and head_hidden must be >= 1")
        if not self.stage_widths or len(self.stage_widths) != len(self.blocks_per_stage):
            raise ConfigError("stage_widths and blocks_per_stage must be non-empty and the same length")
        if min(self.stage_widths) < 1 or min(self.blocks_per_stage) < 1:
            raise ConfigError("stage widths and block counts must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ArchConfig:
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown architecture keys: {', '.join(unknown)}")
        values = dict(data)
        for key in ("input_shape", "stage_widths", "blocks_per_stage"):
            if key in values:
                values[key] = tuple(int(v) for v in values[key])
        return cls(**values)


def reference_config(family: str, num_classes: int = 4, input_shape: tuple[int, int, int] = (50, 170, 110)) -> ArchConfig:
    """Full-size configurations with 31 / 34 / 116 convolutional layers."""
    if family == "vgg":
        return ArchConfig(
            family="vgg",
            input_shape=input_shape,
            num_classes=num_classes,
            stem_width=64,
            stage_widths=(64, 128, 256, 480, 480),
            blocks_per_stage=(2, 4, 8, 8, 8),
            head_hidden=1024,
        )
    if family == "resnet":
        return ArchConfig(
            family="resnet",
            input_shape=input_shape,
            num_classes=num_classes,
            stem_width=80,
            stage_widths=(80, 160, 320, 640),
            blocks_per_stage=(3, 4, 5, 3),
            head_hidden=1024,
        )
    if family == "resnet-b":
        return ArchConfig(
            family="resnet-b",
            input_shape=input_shape,
            num_classes=num_classes,
            stem_width=48,
            stage_widths=(48, 96, 192, 384),
            blocks_per_stage=(3, 8, 18, 8),
            head_hidden=1024,
        )
    raise ConfigError(f"unknown architecture family {family!r} (expected one of {FAMILIES})")


def desk_config(family: str, num_classes: int, input_shape: tuple[int, int, int]) -> ArchConfig:
    if family == "resnet-b":
        return ArchConfig("resnet-b", input_shape, num_classes, stem_width=8, stage_widths=(4, 8))
    return ArchConfig(family, input_shape, num_classes)


@dataclass
class _Builder:
    rng: np.random.Generator
    layers: list[Layer] = field(default_factory=list)
    convs: int = 0

    def conv(self, size: int, c_in: int, c_out: int) -> Conv2D:
        self.convs += 1
        return Conv2D(size, c_in, c_out, self.rng)

    def conv_bn_swish(self, size: int, c_in: int, c_out: int) -> list[Layer]:
        return [self.conv(size, c_in, c_out), BatchNorm(c_out), Swish()]

    def basic_block(self, c_in: int, width: int) -> list[Layer]:
        branch = self.conv_bn_swish(3, c_in, width) + [self.conv(3, width, width), BatchNorm(width)]
        projection = self.conv(1, c_in, width) if c_in != width else None
        return [Residual(branch, projection), Swish()]

    def bottleneck_block(self, c_in: int, width: int) -> list[Layer]:
        c_out = width * BOTTLENECK_EXPANSION
        branch = (
            self.conv_bn_swish(1, c_in, width)
            + self.conv_bn_swish(3, width, width)
            + [self.conv(1, width, c_out), BatchNorm(c_out)]
        )
        projection = self.conv(1, c_in, c_out) if c_in != c_out else None
        return [Residual(branch, projection), Swish()]


def _should_pool(h: int, w: int) -> bool:
    # Pooling rounds up, so the feature map stays at least 2x2.
    return min((h + 1) // 2, (w + 1) // 2) >= 2


def build_network(cfg: ArchConfig, seed: int = 0) -> Network:
    """Stem conv, stages with max pooling between them, then GAP -> dense -> swish -> dense."""
    cfg.validate()
    builder = _Builder(np.random.default_rng(seed))
    h, w, bands = cfg.input_shape
    builder.layers += builder.conv_bn_swish(3, bands, cfg.stem_width)
    channels = cfg.stem_width
    pools = 0
    for stage, (width, blocks) in enumerate(zip(cfg.stage_widths, cfg.blocks_per_stage)):
        if stage > 0 and _should_pool(h, w):
            builder.layers.append(MaxPool2())
            h, w = (h + 1) // 2, (w + 1) // 2
            pools += 1
        for _ in range(blocks):
            if cfg.family == "vgg":
                builder.layers += builder.conv_bn_swish(3, channels, width)
                channels = width
            elif cfg.family == "resnet":
                builder.layers += builder.basic_block(channels, width)
                channels = width
            else:
                builder.layers += builder.bottleneck_block(channels, width)
                channels = width * BOTTLENECK_EXPANSION
    builder.layers += [
        GlobalAvgPool(),
        Dense(channels, cfg.head_hidden, builder.rng),
        Swish(),
        Dense(cfg.head_hidden, cfg.num_classes, builder.rng),
    ]

    net = Network(builder.layers, arch=cfg)
    if net.conv_layer_count() != builder.convs:
        raise RuntimeError("conv layer bookkeeping diverged during assembly")
    params = net.parameter_count()
    log(
        "cnn",
        "network built",
        family=cfg.family,
        conv_layers=builder.convs,
        params=params,
        params_m=round(params / 1e6, 2),
        reference_m=REFERENCE_PARAMETER_MILLIONS[cfg.family],
    )
    debug("cnn", "feature map", pools=pools, final_h=h, final_w=w, channels=channels)
    return net
