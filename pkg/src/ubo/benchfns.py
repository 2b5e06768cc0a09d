"""Synthetic objectives with a narrow (risky) global peak and a broad safe peak,
plus Monte Carlo evaluation of an incumbent under input noise."""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParameterDomainError


def _read_table(text):
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(tok) for tok in line.split()])
    return np.array(rows, dtype=float)


def _read_data(name):
    return resources.files("ubo").joinpath("data").joinpath(name).read_text()


def _check_unit(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,) and not (dim == 1 and x.ndim == 0):
        raise ParameterDomainError(f"expected points of dimension {dim}, got shape {x.shape}")
    if np.any(x < 0) or np.any(x > 1) or np.any(np.isnan(x)):
        raise ParameterDomainError(f"point outside [0, 1]^{dim}: {x}")
    return x


@dataclass(frozen=True)
class RKHSFunction:
    """Fixed linear combination of squared-exponential bumps on [0, 1]."""

    centers: np.ndarray
    weights: np.ndarray
    lengthscales: np.ndarray

    dim = 1

    @classmethod
    def from_text(cls, text):
        t = _read_table(text)
        return cls(t[:, 0], t[:, 1], t[:, 2])

    def __call__(self, x):
        """Accepts a scalar, a (1,) point or an (n, 1) batch."""
        x = _check_unit(x, 1)
        scalar = x.ndim <= 1
        z = np.atleast_1d(x).reshape(-1)
        r = (z[:, None] - self.centers) / self.lengthscales
        out = np.exp(-0.5 * r * r) @ self.weights
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class GaussianMixtureSpec:
    weights: np.ndarray
    centers: np.ndarray  # (c, d)
    stds: np.ndarray

    def __post_init__(self):
        if len(self.weights) < 2:
            raise ValueError("a mixture needs at least two components")
        if np.any(np.asarray(self.weights) <= 0) or np.any(np.asarray(self.stds) <= 0):
            raise ValueError("weights and stds must be positive")

    @classmethod
    def from_text(cls, text):
        t = _read_table(text)
        return cls(t[:, 0], t[:, 1:-1], t[:, -1])

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def narrow_peak(self):
        """Center of the tallest component."""
        return self.centers[int(np.argmax(self.weights))]

    @property
    def broad_peak(self):
        """Center of the widest component."""
        return self.centers[int(np.argmax(self.stds))]


class GaussianMixtureFunction:
    """Unnormalized sum of isotropic Gaussian bumps."""

    def __init__(self, spec):
        self.spec = spec
        self.dim = spec.dim

    def __call__(self, x):
        """Accepts a (d,) point or an (n, d) batch."""
        x = _check_unit(x, self.dim)
        scalar = x.ndim == 1
        X = np.atleast_2d(x)
        s = self.spec
        d2 = ((X[:, None, :] - s.centers[None, :, :]) ** 2).sum(-1)
        out = np.exp(-0.5 * d2 / s.stds ** 2) @ s.weights
        return float(out[0]) if scalar else out


def load_rkhs(path=None):
    text = Path(path).read_text() if path else _read_data("rkhs.txt")
    return RKHSFunction.from_text(text)


def load_gm(path=None):
    text = Path(path).read_text() if path else _read_data("gm.txt")
    return GaussianMixtureFunction(GaussianMixtureSpec.from_text(text))


_RKHS = load_rkhs()
_GM = load_gm()


def rkhs_function(x):
    """The 1D RKHS benchmark; global max f(0.89235) = 5.73839, safe max near 0.078."""
    return _RKHS(x)


def gm_function(x):
    """The default 2D Gaussian-mixture benchmark."""
    return _GM(x)


def get_function(name):
    """Resolve a benchmark by name, or load a mixture fixture from a file path."""
    if name == "rkhs":
        return _RKHS
    if name == "gm":
        return _GM
    path = Path(name)
    if path.is_file():
        return load_gm(path)
    raise ValueError(f"unknown function {name!r} (expected 'rkhs', 'gm' or a mixture file)")


@dataclass(frozen=True)
class RobustnessStats:
    mean_outcome: float
    std_outcome: float
    worst_outcome: float
    num_probes: int


def robustness_eval(objective, x_star, noise, num_probes, rng):
    """Evaluate ``objective`` at ``num_probes`` draws from N(x*, sigma_x^2 I), clamped to the box.

    The standard deviation is the population one.
    """
    if num_probes < 1:
        raise ValueError("num_probes must be >= 1")
    rng = np.random.default_rng(rng)
    x_star = np.asarray(x_star, dtype=float).ravel()
    probes = np.clip(x_star + noise.sigma_x * rng.standard_normal((num_probes, x_star.size)), 0.0, 1.0)
    values = np.array([float(objective(p)) for p in probes])
    worst = float(values.min())
    best = float(values.max())
    if worst == best:
        return RobustnessStats(worst, 0.0, worst, num_probes)
    mean = min(max(float(values.mean()), worst), best)
    return RobustnessStats(mean, float(values.std()), worst, num_probes)
