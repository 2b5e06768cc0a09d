"""Unscented transformation over isotropic Gaussian input noise."""

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParameterDomainError

DEFAULT_K = 0.0


@dataclass(frozen=True)
class InputNoise:
    """Isotropic input noise N(0, sigma_x^2 I) in normalized input units."""

    sigma_x: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma_x) and self.sigma_x >= 0):
            raise ParameterDomainError(f"sigma_x must be >= 0, got {self.sigma_x}")

    def covariance(self, dim):
        return self.sigma_x ** 2 * np.eye(dim)


@dataclass(frozen=True)
class SigmaPointSet:
    points: np.ndarray  # (2d+1, d); row 0 is the center
    weights: np.ndarray  # (2d+1,)
    center: np.ndarray

    @property
    def dim(self):
        return self.center.size


def sigma_weights(dim, k=DEFAULT_K):
    """Weights k/(d+k) for the center and 1/(2(d+k)) for the 2d others."""
    if not dim + k > 0:
        raise ParameterDomainError(f"d + k must be positive (d={dim}, k={k})")
    w = np.full(2 * dim + 1, 1.0 / (2.0 * (dim + k)))
    w[0] = k / (dim + k)
    return w


def sigma_offsets(dim, sigma_x, k=DEFAULT_K):
    """Offsets of the 2d+1 sigma points from the center, shape (2d+1, d).

    Rows 1..d are the + directions, rows d+1..2d the matching - directions.
    """
    if not dim + k > 0:
        raise ParameterDomainError(f"d + k must be positive (d={dim}, k={k})")
    # column i of sqrt((d+k) sigma^2 I) is sqrt(d+k) sigma e_i
    root = np.sqrt(dim + k) * sigma_x * np.eye(dim)
    return np.vstack([np.zeros((1, dim)), root, -root])


def sigma_points(center, noise, k=DEFAULT_K):
    """Sigma points around ``center`` clamped coordinate-wise to [0, 1].

    Weights are not renormalized after clamping.
    """
    center = np.asarray(center, dtype=float).ravel()
    if np.any(center < 0) or np.any(center > 1):
        raise ParameterDomainError("center must lie in the unit hypercube")
    d = center.size
    pts = np.clip(center + sigma_offsets(d, noise.sigma_x, k), 0.0, 1.0)
    return SigmaPointSet(pts, sigma_weights(d, k), center.copy())


def unscented_mean(f, sp):
    """Weighted sigma-point average of a scalar function ``f(point)``."""
    values = np.empty(len(sp.weights))
    for i, x in enumerate(sp.points):
        v = float(f(x))
        if not np.isfinite(v):
            raise EvaluationError(f"non-finite value {v} at sigma point {i}: {x}", x, v)
        values[i] = v
    if np.all(sp.points == sp.center):
        # zero spread: return f(center) exactly rather than a rounded weighted sum
        return values[0]
    return float(sp.weights @ values)


def unscented_mean_batch(f, centers, noise, k=DEFAULT_K):
    """Vectorized unscented mean at many centers.

    ``f`` maps an (q, d) array to q values.  With ``sigma_x == 0`` this is
    exactly ``f(centers)``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    q, d = centers.shape
    if noise.sigma_x == 0:
        sigma_weights(d, k)  # domain check only
        return np.asarray(f(centers), dtype=float)
    offsets = sigma_offsets(d, noise.sigma_x, k)
    w = sigma_weights(d, k)
    pts = np.clip(centers[:, None, :] + offsets[None, :, :], 0.0, 1.0)
    values = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(q, 2 * d + 1)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise EvaluationError(f"non-finite value at sigma point {pts[i, j]}", pts[i, j], values[i, j])
    return values @ w
