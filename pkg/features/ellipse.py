from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import EllipseFitError


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_major: float
    semi_minor: float
    orientation: float

    @property
    def eccentricity(self) -> float:
        return float(np.sqrt(max(0.0, 1.0 - (self.semi_minor / self.semi_major) ** 2)))


def _conic_coefficients(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Numerically stable split of the direct least-squares ellipse fit
    # (quadratic and linear parts solved separately).
    d1 = np.column_stack((x * x, x * y, y * y))
    d2 = np.column_stack((x, y, np.ones_like(x)))
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as exc:
        raise EllipseFitError("boundary points are degenerate (collinear or repeated)") from exc
    m = s1 + s2 @ t
    # Premultiply by the inverse of the ellipse constraint matrix.
    m = np.vstack((m[2] / 2.0, -m[1], m[0] / 2.0))
    eigvals, eigvecs = np.linalg.eig(m)
    eigvecs = np.real(eigvecs)
    cond = 4.0 * eigvecs[0] * eigvecs[2] - eigvecs[1] ** 2
    candidates = np.flatnonzero(cond > 0)
    if candidates.size == 0:
        raise EllipseFitError("no elliptical solution for the boundary points")
    a1 = eigvecs[:, candidates[0]]
    return np.concatenate((a1, t @ a1))


def fit_ellipse(boundary_points: np.ndarray | list[tuple[float, float]]) -> Ellipse:
    """Least-squares ellipse through (row, col) points.

    Orientation is the angle of the major axis from the column axis towards
    the row axis, wrapped to [-pi/2, pi/2).
    """
    points = np.asarray(boundary_points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise EllipseFitError(f"expected an (n, 2) array of points (got shape {points.shape})")
    if points.shape[0] < 6:
        raise EllipseFitError(f"ellipse fit needs >= 6 points (got {points.shape[0]})")

    # Centre and scale for conditioning; the fit is undone below.
    mean = points.mean(axis=0)
    scale = float(np.sqrt(((points - mean) ** 2).sum(axis=1).mean()))
    if scale == 0:
        raise EllipseFitError("boundary points are all identical")
    rows = (points[:, 0] - mean[0]) / scale
    cols = (points[:, 1] - mean[1]) / scale

    a, b, c, d, e, f = _conic_coefficients(cols, rows)
    den = b * b - 4.0 * a * c
    if den >= 0:
        raise EllipseFitError("fitted conic is not an ellipse")
    x0 = (2.0 * c * d - b * e) / den
    y0 = (2.0 * a * e - b * d) / den
    value_at_center = a * x0 * x0 + b * x0 * y0 + c * y0 * y0 + d * x0 + e * y0 + f

    quad = np.array([[a, b / 2.0], [b / 2.0, c]])
    eigvals, eigvecs = np.linalg.eigh(quad)
    with np.errstate(divide="ignore", invalid="ignore"):
        squared = -value_at_center / eigvals
    if not np.all(np.isfinite(squared)) or np.any(squared <= 0):
        raise EllipseFitError("fitted conic is degenerate")
    axes = np.sqrt(squared) * scale
    major_index = int(np.argmax(axes))
    minor_index = 1 - major_index
    vx, vy = eigvecs[:, major_index]
    orientation = float(np.arctan2(vy, vx))
    if orientation >= np.pi / 2:
        orientation -= np.pi
    elif orientation < -np.pi / 2:
        orientation += np.pi

    return Ellipse(
        center=(float(mean[0] + y0 * scale), float(mean[1] + x0 * scale)),
        semi_major=float(axes[major_index]),
        semi_minor=float(axes[minor_index]),
        orientation=orientation,
    )
