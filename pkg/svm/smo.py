from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import DataError, NumericalError
from runlog import debug, log
from svm.kernel import KernelRowCache, rbf_matrix

KKT_TOLERANCE = 1e-3
_TAU = 1e-12


@dataclass(frozen=True)
class SvmHyper:
    C: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError(f"C must be > 0 (got {self.C})")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0 (got {self.gamma})")


@dataclass(frozen=True)
class BinarySvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    hyper: SvmHyper
    iterations: int = 0

    def decision(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.support_vectors.shape[0] == 0:
            return np.full(x.shape[0], self.bias)
        return rbf_matrix(x, self.support_vectors, self.hyper.gamma) @ self.dual_coef + self.bias


def _bias(alpha: np.ndarray, y: np.ndarray, grad: np.ndarray, c: float) -> float:
    y_grad = y * grad
    upper = alpha >= c
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        return -float(y_grad[free].mean())
    # Bounds on rho from the at-bound variables.
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = float(y_grad[ub_mask].min()) if ub_mask.any() else np.inf
    lb = float(y_grad[lb_mask].max()) if lb_mask.any() else -np.inf
    return -(ub + lb) / 2.0


def train_binary(
    x: np.ndarray,
    y: np.ndarray,
    hyper: SvmHyper,
    tolerance: float = KKT_TOLERANCE,
    max_updates: int | None = None,
) -> BinarySvmModel:
    """Soft-margin dual solved by SMO with maximal-violating-pair selection."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n < 2 or y.shape != (n,):
        raise DataError(f"binary SVM needs >= 2 labelled samples (got {n})")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary SVM labels must be -1 or +1")
    if np.all(y == y[0]):
        raise DataError("binary SVM needs both classes present")
    c = hyper.C
    limit = max_updates if max_updates is not None else 10 * n * 100

    cache = KernelRowCache(x, hyper.gamma)
    alpha = np.zeros(n)
    # Gradient of 0.5 a'Qa - e'a with Q_ij = y_i y_j K_ij.
    grad = -np.ones(n)
    updates = 0
    while True:
        minus_yg = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(minus_yg[up])])
        j = int(np.flatnonzero(low)[np.argmin(minus_yg[low])])
        if minus_yg[i] - minus_yg[j] < tolerance:
            break
        if updates >= limit:
            log("svm", "SMO stopped at update limit", updates=updates, gap=float(minus_yg[i] - minus_yg[j]))
            break

        k_i = cache.row(i)
        k_j = cache.row(j)
        q_i = y[i] * y * k_i
        q_j = y[j] * y * k_j
        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = k_i[i] + k_j[j] + 2.0 * q_i[j]
            quad = quad if quad > 0 else _TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            elif alpha[j] > c:
                alpha[j] = c
                alpha[i] = c + diff
        else:
            quad = k_i[i] + k_j[j] - 2.0 * q_i[j]
            quad = quad if quad > 0 else _TAU
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        grad += q_i * (alpha[i] - old_i) + q_j * (alpha[j] - old_j)
        updates += 1

    if not np.all(np.isfinite(alpha)) or not np.all(np.isfinite(grad)):
        raise NumericalError("SMO produced non-finite multipliers")
    bias = _bias(alpha, y, grad, c)
    support = alpha > 0
    debug("svm", "binary model trained", n=n, support=int(support.sum()), updates=updates, rows=len(cache))
    return BinarySvmModel(
        support_vectors=x[support].copy(),
        dual_coef=(alpha * y)[support],
        bias=bias,
        hyper=hyper,
        iterations=updates,
    )
