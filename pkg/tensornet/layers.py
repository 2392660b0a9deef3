from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from tensornet import ops


class Layer:
    """Base layer. Parameters and gradients live in name-keyed dicts.

    backward() overwrites grads for the most recent forward() call.
    """

    kind = "layer"

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sublayers(self) -> list[Layer]:
        return []


def walk(layers: list[Layer]) -> Iterator[Layer]:
    """Depth-first over layers and their sublayers, in construction order."""
    for layer in layers:
        yield layer
        yield from walk(layer.sublayers())


def he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Conv2D(Layer):
    kind = "conv"

    def __init__(self, size: int, c_in: int, c_out: int, rng: np.random.Generator) -> None:
        super().__init__()
        self.params["kernel"] = he_normal(rng, (size, size, c_in, c_out), size * size * c_in)
        self.params["bias"] = np.zeros(c_out)
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._x = x
        return ops.conv2d_forward(x, self.params["kernel"], self.params["bias"])

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        dx, dkernel, dbias = ops.conv2d_backward(self._x, self.params["kernel"], dout)
        self.grads = {"kernel": dkernel, "bias": dbias}
        return dx


class BatchNorm(Layer):
    kind = "batchnorm"

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.running_mean: np.ndarray | None = None
        self.running_var: np.ndarray | None = None
        self._cache: ops.BatchNormCache | None = None

    @property
    def channels(self) -> int:
        return int(self.params["gamma"].shape[0])

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        out, self._cache, updated = ops.batchnorm_forward(
            x,
            self.params["gamma"],
            self.params["beta"],
            training,
            self.running_mean,
            self.running_var,
        )
        if updated is not None:
            self.running_mean, self.running_var = updated
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        dx, dgamma, dbeta = ops.batchnorm_backward(dout, self._cache)
        self.grads = {"gamma": dgamma, "beta": dbeta}
        return dx


class Swish(Layer):
    kind = "swish"

    def __init__(self) -> None:
        super().__init__()
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._x = x
        return ops.swish(x)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        return ops.swish_backward(self._x, dout)


class MaxPool2(Layer):
    kind = "maxpool"

    def __init__(self) -> None:
        super().__init__()
        self._cache: ops.PoolCache | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        out, self._cache = ops.maxpool2_forward(x)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        return ops.maxpool2_backward(dout, self._cache)


class GlobalAvgPool(Layer):
    kind = "gap"

    def __init__(self) -> None:
        super().__init__()
        self._shape: tuple[int, ...] | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise RuntimeError("backward called before forward")
        n, h, w, c = self._shape
        return np.broadcast_to(dout[:, np.newaxis, np.newaxis, :] / (h * w), self._shape).copy()


class Flatten(Layer):
    kind = "flatten"

    def __init__(self) -> None:
        super().__init__()
        self._shape: tuple[int, ...] | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise RuntimeError("backward called before forward")
        return dout.reshape(self._shape)


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator) -> None:
        super().__init__()
        self.params["weight"] = he_normal(rng, (n_in, n_out), n_in)
        self.params["bias"] = np.zeros(n_out)
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._x = x
        return ops.dense_forward(x, self.params["weight"], self.params["bias"])

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        dx, dweight, dbias = ops.dense_backward(self._x, self.params["weight"], dout)
        self.grads = {"weight": dweight, "bias": dbias}
        return dx


class Residual(Layer):
    """branch(x) + shortcut(x); the shortcut is identity or a 1x1 projection."""

    kind = "residual"

    def __init__(self, branch: list[Layer], projection: Conv2D | None = None) -> None:
        super().__init__()
        self.branch = branch
        self.projection = projection

    def sublayers(self) -> list[Layer]:
        return self.branch + ([self.projection] if self.projection is not None else [])

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        out = x
        for layer in self.branch:
            out = layer.forward(out, training)
        shortcut = self.projection.forward(x, training) if self.projection is not None else x
        if shortcut.shape != out.shape:
            raise ValueError(f"residual shapes differ: {out.shape} vs {shortcut.shape}")
        return out + shortcut

    def backward(self, dout: np.ndarray) -> np.ndarray:
        grad = dout
        for layer in reversed(self.branch):
            grad = layer.backward(grad)
        if self.projection is not None:
            return grad + self.projection.backward(dout)
        return grad + dout
