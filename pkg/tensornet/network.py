from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from errors import ShapeMismatchError
from tensornet import ops
from tensornet.layers import BatchNorm, Conv2D, Layer, walk

if TYPE_CHECKING:
    from tensornet.architectures import ArchConfig

MODES = ("train", "infer")


def _check_mode(mode: str) -> bool:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES} (got {mode!r})")
    return mode == "train"


class Network:
    """Sequential stack of layers ending in logits; forward() adds the softmax."""

    def __init__(self, layers: list[Layer], arch: ArchConfig | None = None) -> None:
        self.layers = layers
        self.arch = arch

    def _check_input(self, x: np.ndarray) -> None:
        if x.ndim != 4:
            raise ShapeMismatchError(f"network input must be (n, h, w, c) (got shape {x.shape})")
        if self.arch is not None and x.shape[3] != self.arch.input_shape[2]:
            raise ShapeMismatchError(
                f"network expects {self.arch.input_shape[2]} bands (got {x.shape[3]})"
            )

    def logits(self, x: np.ndarray, mode: str) -> np.ndarray:
        training = _check_mode(mode)
        self._check_input(x)
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out, training)
        return out

    def forward(self, x: np.ndarray, mode: str) -> np.ndarray:
        return ops.softmax(self.logits(x, mode))

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        """Propagates d(loss)/d(logits) back, filling every layer's grads; returns dx."""
        grad = grad_logits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def named_layers(self) -> list[tuple[str, Layer]]:
        return [(f"{index:03d}.{layer.kind}", layer) for index, layer in enumerate(walk(self.layers))]

    def parameters(self) -> dict[str, np.ndarray]:
        """Live parameter arrays keyed by layer position; updating them in place updates the net."""
        return {
            f"{prefix}.{name}": value
            for prefix, layer in self.named_layers()
            for name, value in layer.params.items()
        }

    def gradients(self) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        for prefix, layer in self.named_layers():
            for name, value in layer.params.items():
                grads[f"{prefix}.{name}"] = layer.grads.get(name, np.zeros_like(value))
        return grads

    def batchnorm_layers(self) -> list[tuple[str, BatchNorm]]:
        return [(prefix, layer) for prefix, layer in self.named_layers() if isinstance(layer, BatchNorm)]

    def conv_layer_count(self) -> int:
        return sum(1 for layer in walk(self.layers) if isinstance(layer, Conv2D))

    def parameter_count(self) -> int:
        return int(sum(value.size for value in self.parameters().values()))

    def snapshot(self) -> dict[str, np.ndarray | None]:
        """Copies of all parameters plus batch-norm running statistics."""
        state: dict[str, np.ndarray | None] = {k: v.copy() for k, v in self.parameters().items()}
        for prefix, layer in self.batchnorm_layers():
            state[f"{prefix}.running_mean"] = None if layer.running_mean is None else layer.running_mean.copy()
            state[f"{prefix}.running_var"] = None if layer.running_var is None else layer.running_var.copy()
        return state

    def restore(self, state: dict[str, np.ndarray | None]) -> None:
        for key, value in self.parameters().items():
            saved = state[key]
            if saved is None or saved.shape != value.shape:
                raise ShapeMismatchError(f"snapshot entry {key} does not match the network")
            value[...] = saved
        for prefix, layer in self.batchnorm_layers():
            mean = state[f"{prefix}.running_mean"]
            var = state[f"{prefix}.running_var"]
            layer.running_mean = None if mean is None else mean.copy()
            layer.running_var = None if var is None else var.copy()
