from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from errors import ShapeMismatchError

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


def same_padding(size: int) -> tuple[int, int]:
    before = (size - 1) // 2
    return before, size - 1 - before


def _check_batch(x: np.ndarray, name: str = "input") -> None:
    if x.ndim != 4:
        raise ShapeMismatchError(f"{name} must be a 4-D (n, h, w, c) batch (got shape {x.shape})")


def _pad_same(x: np.ndarray, kh: int, kw: int) -> tuple[np.ndarray, int, int]:
    top, bottom = same_padding(kh)
    left, right = same_padding(kw)
    return np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0))), top, left


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Stride-1 cross-correlation with zero "same" padding.

    kernel is (kh, kw, c_in, c_out); output spatial dims equal the input's.
    """
    _check_batch(x)
    if kernel.ndim != 4 or kernel.shape[2] != x.shape[3]:
        raise ShapeMismatchError(
            f"kernel {kernel.shape} does not match input channels {x.shape[3]}"
        )
    if bias.shape != (kernel.shape[3],):
        raise ShapeMismatchError(f"bias {bias.shape} does not match kernel {kernel.shape}")
    n, h, w, _ = x.shape
    kh, kw = kernel.shape[:2]
    if kh == 1 and kw == 1:
        return x @ kernel[0, 0] + bias
    padded, _, _ = _pad_same(x, kh, kw)
    out = np.zeros((n, h, w, kernel.shape[3]))
    for i in range(kh):
        for j in range(kw):
            out += padded[:, i : i + h, j : j + w, :] @ kernel[i, j]
    return out + bias


def conv2d_backward(
    x: np.ndarray, kernel: np.ndarray, dout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dkernel, dbias)."""
    n, h, w, _ = x.shape
    kh, kw = kernel.shape[:2]
    dbias = dout.sum(axis=(0, 1, 2))
    if kh == 1 and kw == 1:
        dkernel = np.tensordot(x, dout, axes=([0, 1, 2], [0, 1, 2]))[np.newaxis, np.newaxis]
        return dout @ kernel[0, 0].T, dkernel, dbias
    padded, top, left = _pad_same(x, kh, kw)
    dpadded = np.zeros_like(padded)
    dkernel = np.zeros_like(kernel)
    for i in range(kh):
        for j in range(kw):
            window = padded[:, i : i + h, j : j + w, :]
            dkernel[i, j] = np.tensordot(window, dout, axes=([0, 1, 2], [0, 1, 2]))
            dpadded[:, i : i + h, j : j + w, :] += dout @ kernel[i, j].T
    return dpadded[:, top : top + h, left : left + w, :], dkernel, dbias


@dataclass
class BatchNormCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray
    training: bool


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    training: bool,
    running_mean: np.ndarray | None,
    running_var: np.ndarray | None,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
) -> tuple[np.ndarray, BatchNormCache, tuple[np.ndarray, np.ndarray] | None]:
    """Per-channel normalization over (n, h, w).

    Returns the output, the backward cache and, in training mode, the updated
    running (mean, var); the first update adopts the batch statistics.
    """
    _check_batch(x)
    if gamma.shape != (x.shape[3],) or beta.shape != (x.shape[3],):
        raise ShapeMismatchError(f"batch norm expects {gamma.shape[0]} channels (got {x.shape[3]})")
    if training:
        count = x.shape[0] * x.shape[1] * x.shape[2]
        if count < 2:
            raise ShapeMismatchError("batch norm training needs n*h*w >= 2 per channel")
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        if running_mean is None or running_var is None:
            updated = (mean.copy(), var.copy())
        else:
            updated = (
                momentum * running_mean + (1.0 - momentum) * mean,
                momentum * running_var + (1.0 - momentum) * var,
            )
    else:
        if running_mean is None or running_var is None:
            raise RuntimeError("batch norm has no running statistics; run a training step first")
        mean, var = running_mean, running_var
        updated = None
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    return gamma * x_hat + beta, BatchNormCache(x_hat, inv_std, gamma, training), updated


def batchnorm_backward(
    dout: np.ndarray, cache: BatchNormCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dgamma, dbeta)."""
    dgamma = (dout * cache.x_hat).sum(axis=(0, 1, 2))
    dbeta = dout.sum(axis=(0, 1, 2))
    dx_hat = dout * cache.gamma
    if not cache.training:
        return dx_hat * cache.inv_std, dgamma, dbeta
    count = dout.shape[0] * dout.shape[1] * dout.shape[2]
    dx = (
        cache.inv_std
        / count
        * (
            count * dx_hat
            - dx_hat.sum(axis=(0, 1, 2))
            - cache.x_hat * (dx_hat * cache.x_hat).sum(axis=(0, 1, 2))
        )
    )
    return dx, dgamma, dbeta


def swish(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def swish_backward(x: np.ndarray, dout: np.ndarray) -> np.ndarray:
    s = expit(x)
    return dout * s * (1.0 + x * (1.0 - s))


@dataclass
class PoolCache:
    input_shape: tuple[int, ...]
    padded_shape: tuple[int, ...]
    argmax: np.ndarray


def maxpool2_forward(x: np.ndarray) -> tuple[np.ndarray, PoolCache]:
    """2x2 non-overlapping max; odd dims are padded by replicating the last row/col."""
    _check_batch(x)
    n, h, w, c = x.shape
    pad_h, pad_w = h % 2, w % 2
    padded = np.pad(x, ((0, 0), (0, pad_h), (0, pad_w), (0, 0)), mode="edge") if (pad_h or pad_w) else x
    hp, wp = padded.shape[1], padded.shape[2]
    windows = (
        padded.reshape(n, hp // 2, 2, wp // 2, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, hp // 2, wp // 2, c, 4)
    )
    # argmax returns the first occurrence, so ties go to the top-left element.
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., np.newaxis], axis=-1)[..., 0]
    return out, PoolCache(x.shape, padded.shape, argmax)


def maxpool2_backward(dout: np.ndarray, cache: PoolCache) -> np.ndarray:
    n, h, w, c = cache.input_shape
    hp, wp = cache.padded_shape[1], cache.padded_shape[2]
    routed = np.zeros(dout.shape + (4,))
    np.put_along_axis(routed, cache.argmax[..., np.newaxis], dout[..., np.newaxis], axis=-1)
    dpadded = (
        routed.reshape(n, hp // 2, wp // 2, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, hp, wp, c)
    )
    if hp != h:
        dpadded[:, h - 1, :, :] += dpadded[:, h, :, :]
    if wp != w:
        dpadded[:, :, w - 1, :] += dpadded[:, :, w, :]
    return dpadded[:, :h, :w, :]


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeMismatchError(f"dense layer expects {weight.shape[0]} inputs (got shape {x.shape})")
    return x @ weight + bias


def dense_backward(
    x: np.ndarray, weight: np.ndarray, dout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dout @ weight.T, x.T @ dout, dout.sum(axis=0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient (p - onehot) / n."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeMismatchError(f"{labels.shape[0]} labels for {n} logit rows")
    if np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    log_probs = logits - logsumexp(logits, axis=1, keepdims=True)
    loss = float(-log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n
