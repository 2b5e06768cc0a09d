"""Gaussian process regression with an anisotropic Matern-5/2 kernel.

The surrogate is a mixture over hyperparameter samples: every sample gets its
own Gram matrix and Cholesky factor, and a query returns one (mean, variance)
pair per sample.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import ConditioningError, ParameterDomainError

SQRT5 = np.sqrt(5.0)

# Relative to the signal variance: first level tried, and the last.
JITTER_START = 1e-10
JITTER_STOP = 1e-4

DEFAULT_OBSERVATION_NOISE = 1e-6


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KernelHyperparameters:
    """Log-space kernel hyperparameters plus the fixed observation noise."""

    log_lengthscales: np.ndarray
    log_signal_variance: float
    observation_noise_variance: float = DEFAULT_OBSERVATION_NOISE

    def __post_init__(self):
        ls = _frozen(np.atleast_1d(self.log_lengthscales))
        if ls.ndim != 1 or ls.size == 0:
            raise ParameterDomainError("log_lengthscales must be a non-empty vector")
        object.__setattr__(self, "log_lengthscales", ls)
        object.__setattr__(self, "log_signal_variance", float(self.log_signal_variance))
        object.__setattr__(self, "observation_noise_variance", float(self.observation_noise_variance))
        if not np.all(np.isfinite(ls)) or not np.isfinite(self.log_signal_variance):
            raise ParameterDomainError("log-hyperparameters must be finite")
        if not self.observation_noise_variance >= 0.0:
            raise ParameterDomainError("observation_noise_variance must be >= 0")

    @property
    def dim(self):
        return self.log_lengthscales.size

    @property
    def lengthscales(self):
        return np.exp(self.log_lengthscales)

    @property
    def signal_variance(self):
        return float(np.exp(self.log_signal_variance))

    def to_vector(self):
        """Sampled coordinates: log length-scales followed by log signal variance."""
        return np.append(self.log_lengthscales, self.log_signal_variance)

    @classmethod
    def from_vector(cls, theta, observation_noise_variance=DEFAULT_OBSERVATION_NOISE):
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-1], theta[-1], observation_noise_variance)

    @classmethod
    def default(cls, dim, observation_noise_variance=DEFAULT_OBSERVATION_NOISE):
        return cls(np.zeros(dim), 0.0, observation_noise_variance)


@dataclass(frozen=True)
class Dataset:
    """Observed query points (n x d, in the unit hypercube) and their outcomes.

    Instances are immutable; ``append`` returns a new snapshot.
    """

    points: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        X = _frozen(np.atleast_2d(self.points))
        y = _frozen(np.atleast_1d(self.outcomes))
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} points but {y.shape[0]} outcomes")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ParameterDomainError("points must lie in the unit hypercube")
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "outcomes", y)

    def __len__(self):
        return self.outcomes.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def append(self, x, y):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.points, x]), np.append(self.outcomes, float(y)))


@dataclass(frozen=True)
class PosteriorPrediction:
    """Gaussian mixture prediction: ``mean[i, j]``, ``variance[i, j]`` for
    hyperparameter sample i at query j."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_2d(np.asarray(self.mean, dtype=float))
        var = np.atleast_2d(np.asarray(self.variance, dtype=float))
        if mean.shape != var.shape:
            raise ValueError("mean and variance shapes differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", np.maximum(var, 0.0))

    @classmethod
    def from_components(cls, components):
        """Build a single-query prediction from ``[(mean, variance), ...]``."""
        comps = np.asarray(components, dtype=float).reshape(-1, 2)
        return cls(comps[:, :1], comps[:, 1:])

    @property
    def num_samples(self):
        return self.mean.shape[0]

    @property
    def components(self):
        """(mean, variance) pairs of the first query point."""
        return [(float(m), float(v)) for m, v in zip(self.mean[:, 0], self.variance[:, 0])]

    def mixture_mean(self):
        return self.mean.mean(axis=0)


def matern52(r, lengthscale, signal_variance):
    """Matern nu=5/2 covariance at distance ``r``.

    >>> round(float(matern52(1.0, 1.0, 1.0)), 5)
    0.52399
    """
    if not np.all(np.asarray(lengthscale) > 0):
        raise ParameterDomainError("lengthscale must be positive")
    if not signal_variance > 0:
        raise ParameterDomainError("signal_variance must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterDomainError("distance must be non-negative")
    s = r / lengthscale
    return _matern52_scaled(s * s, signal_variance)


def _matern52_scaled(r2, signal_variance):
    # r2: squared distance already divided by the length-scales
    t = np.sqrt(5.0 * r2)
    e = np.exp(-t)
    t += 1.0 + (5.0 / 3.0) * r2
    t *= e
    t *= signal_variance
    return t


def _scaled_sqdist(A, B, lengthscales):
    A = A / lengthscales
    B = B / lengthscales
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0)


def cross_covariance(A, B, hyp):
    """Noise-free kernel matrix k(A, B)."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    return _matern52_scaled(_scaled_sqdist(A, B, hyp.lengthscales), hyp.signal_variance)


def _pairwise_sqdiff(X):
    # (d, n*n) squared coordinate differences; exact zeros on the diagonal
    diff = X.T[:, :, None] - X.T[:, None, :]
    return (diff * diff).reshape(X.shape[1], -1)


def _gram_from_sqdiff(sqdiff, inv_ls2, signal_variance, diag_add):
    n = int(round(np.sqrt(sqdiff.shape[1])))
    K = _matern52_scaled(inv_ls2 @ sqdiff, signal_variance).reshape(n, n)
    K.flat[:: n + 1] += diag_add
    return K


def _jitter_ladder(signal_variance):
    levels = []
    j = JITTER_START
    while j <= JITTER_STOP * (1 + 1e-9):
        levels.append(j * signal_variance)
        j *= 10.0
    return levels


def _cholesky(K_base, signal_variance):
    """Lower Cholesky factor of ``K_base + jitter*I`` for the first jitter on the ladder that works."""
    levels = _jitter_ladder(signal_variance)
    n = K_base.shape[0]
    for jitter in levels:
        K = K_base.copy()
        K.flat[:: n + 1] += jitter
        c, info = lapack.dpotrf(K, lower=1, clean=1, overwrite_a=1)
        if info == 0:
            return c, jitter
    raise ConditioningError(levels)


def build_gram(data, hyp):
    """Gram matrix K(X, X) + (noise + base jitter) I.

    The base jitter is the first rung of the ladder used by the factorization;
    the matrix returned here never has escalated jitter.
    """
    X = data.points
    K = _gram_from_sqdiff(
        _pairwise_sqdiff(X),
        np.exp(-2.0 * hyp.log_lengthscales),
        hyp.signal_variance,
        hyp.observation_noise_variance + JITTER_START * hyp.signal_variance,
    )
    return K


class MarginalLikelihood:
    """Gaussian log-evidence of a fixed dataset as a function of log-hyperparameters.

    Pairwise coordinate differences are computed once, so repeated evaluation
    (as done by the slice sampler) only rebuilds the kernel and factorizes.
    """

    def __init__(self, data, observation_noise_variance=DEFAULT_OBSERVATION_NOISE):
        self.data = data
        self.noise = float(observation_noise_variance)
        self._sqdiff = _pairwise_sqdiff(data.points)
        self._y = np.ascontiguousarray(data.outcomes)
        self._const = 0.5 * len(data) * np.log(2.0 * np.pi)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        sv = np.exp(theta[-1])
        K = _gram_from_sqdiff(self._sqdiff, np.exp(-2.0 * theta[:-1]), sv, self.noise)
        L, _ = _cholesky(K, sv)
        alpha, _ = lapack.dpotrs(L, self._y, lower=1)
        return float(-0.5 * self._y @ alpha - np.log(np.diag(L)).sum() - self._const)


def log_marginal_likelihood(data, hyp):
    """log N(y | 0, K) with K the (noisy, jittered) Gram matrix."""
    return MarginalLikelihood(data, hyp.observation_noise_variance)(hyp.to_vector())


class GPPosterior:
    """Immutable posterior snapshot: dataset plus cached factors per sample.

    ``offset`` is a constant prior mean; the driver passes the outcome mean so
    the GP models centered data and predictions come back un-centered.
    Safe to share between threads.
    """

    def __init__(self, data, hyp_samples, offset=0.0):
        if len(data) < 1:
            raise ValueError("GP needs at least one observation")
        self.data = data
        self.samples = tuple(hyp_samples)
        if not self.samples:
            raise ValueError("at least one hyperparameter sample is required")
        self.offset = float(offset)
        yc = data.outcomes - self.offset
        sqdiff = _pairwise_sqdiff(data.points)
        factors, alphas, jitters = [], [], []
        for hyp in self.samples:
            sv = hyp.signal_variance
            K = _gram_from_sqdiff(sqdiff, np.exp(-2.0 * hyp.log_lengthscales), sv,
                                  hyp.observation_noise_variance)
            L, jitter = _cholesky(K, sv)
            alpha, _ = lapack.dpotrs(L, yc, lower=1)
            factors.append(_frozen(L))
            alphas.append(_frozen(alpha))
            jitters.append(jitter)
        self._factors = tuple(factors)
        self._alphas = tuple(alphas)
        self.jitters = tuple(jitters)

    @property
    def num_samples(self):
        return len(self.samples)

    def predict(self, query, return_variance=True):
        """Per-sample predictive mean and latent variance at each query row."""
        Q = np.atleast_2d(np.asarray(query, dtype=float))
        X = self.data.points
        m = len(self.samples)
        mean = np.empty((m, Q.shape[0]))
        var = np.zeros((m, Q.shape[0]))
        for i, hyp in enumerate(self.samples):
            Ks = cross_covariance(X, Q, hyp)
            mean[i] = Ks.T @ self._alphas[i] + self.offset
            if return_variance:
                v = solve_triangular(self._factors[i], Ks, lower=True, check_finite=False)
                var[i] = hyp.signal_variance - (v * v).sum(0)
        return PosteriorPrediction(mean, var)

    def mixture_mean(self, query):
        """Posterior mean averaged over hyperparameter samples."""
        return self.predict(query, return_variance=False).mixture_mean()


def predict(data, hyp_samples, query, offset=0.0):
    """One-shot prediction; prefer :class:`GPPosterior` when querying repeatedly."""
    if isinstance(hyp_samples, KernelHyperparameters):
        hyp_samples = [hyp_samples]
    return GPPosterior(data, hyp_samples, offset).predict(query)
