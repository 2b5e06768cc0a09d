"""Slice sampling of GP kernel hyperparameters.

Coordinate-wise univariate slice sampling with stepping-out and shrinkage
(Neal, 2003) over the log-hyperparameter vector.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, InvalidStartError
from .gp import KernelHyperparameters, MarginalLikelihood


@dataclass(frozen=True)
class SliceSamplerConfig:
    num_samples: int = 10
    burn_in: int = 100
    warm_burn_in: int = 10
    thinning: int = 10
    initial_step_width: float = 1.0
    max_step_out: int = 100
    prior_mean: float = 0.0
    prior_std: float = 2.0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.burn_in < 0 or self.warm_burn_in < 0:
            raise ValueError("burn-in must be >= 0")
        if not self.initial_step_width > 0:
            raise ValueError("initial_step_width must be > 0")
        if self.max_step_out < 1:
            raise ValueError("max_step_out must be >= 1")
        if not self.prior_std > 0:
            raise ValueError("prior_std must be > 0")


@dataclass
class SliceStep:
    """Bookkeeping of one univariate update, kept for testing the invariants."""

    x_new: float
    log_density: float
    level: float
    lower: float
    upper: float
    evaluations: int = field(default=0)


def slice_step(logp, x0, logp0, width, max_step_out, rng):
    """One univariate slice-sampling update of a scalar ``x0``.

    ``logp0`` must equal ``logp(x0)``.  The returned point is inside the final
    (shrunk) bracket and has log-density at or above the slice level.
    """
    level = logp0 + np.log(rng.uniform())
    u = rng.uniform()
    lower = x0 - width * u
    upper = lower + width
    # Neal's budgeted step-out: J steps left, max_step_out-1-J right
    j = int(np.floor(max_step_out * rng.uniform()))
    k = max_step_out - 1 - j
    evals = 0
    while j > 0:
        evals += 1
        if logp(lower) <= level:
            break
        lower -= width
        j -= 1
    while k > 0:
        evals += 1
        if logp(upper) <= level:
            break
        upper += width
        k -= 1
    while True:
        x1 = rng.uniform(lower, upper)
        lp1 = logp(x1)
        evals += 1
        if lp1 > level:
            return SliceStep(x1, lp1, level, lower, upper, evals)
        if x1 < x0:
            lower = x1
        else:
            upper = x1
        if upper - lower < 1e-300:
            # bracket collapsed onto x0 through round-off; stay put
            return SliceStep(x0, logp0, level, lower, upper, evals)


def slice_sample(logp, x0, num_samples, burn_in, thinning, width=1.0, max_step_out=100, rng=None):
    """Draw ``num_samples`` vectors from the density ``exp(logp)``.

    Every sweep updates each coordinate once; after ``burn_in`` sweeps one
    state is kept every ``thinning`` sweeps.  Returns ``(samples, last_state)``.
    """
    rng = np.random.default_rng(rng)
    x = np.array(x0, dtype=float, ndmin=1)
    widths = np.broadcast_to(np.asarray(width, dtype=float), x.shape)
    lp = logp(x)
    if not np.isfinite(lp):
        raise InvalidStartError(f"log-density at start {x} is {lp}")

    def coord_logp(i):
        def f(v):
            z = x.copy()
            z[i] = v
            return logp(z)
        return f

    samples = []
    total = burn_in + num_samples * thinning
    for sweep in range(1, total + 1):
        for i in range(x.size):
            step = slice_step(coord_logp(i), x[i], lp, widths[i], max_step_out, rng)
            x[i] = step.x_new
            lp = step.log_density
        if sweep > burn_in and (sweep - burn_in) % thinning == 0:
            samples.append(x.copy())
    return np.array(samples), x


class HyperparameterPosterior:
    """Unnormalized log-posterior of log-hyperparameters given data.

    Independent normal priors on every log coordinate.  Points where the Gram
    matrix cannot be factorized get log-density -inf.
    """

    def __init__(self, data, cfg, observation_noise_variance):
        self.likelihood = MarginalLikelihood(data, observation_noise_variance)
        self.cfg = cfg

    def log_prior(self, theta):
        z = (np.asarray(theta) - self.cfg.prior_mean) / self.cfg.prior_std
        return float(-0.5 * z @ z)

    def __call__(self, theta):
        lp = self.log_prior(theta)
        if not np.isfinite(lp):
            return -np.inf
        try:
            ll = self.likelihood(theta)
        except ConditioningError:
            return -np.inf
        return lp + ll if np.isfinite(ll) else -np.inf


def slice_sample_hyperparameters(data, start, cfg, rng, burn_in=None):
    """Sample ``cfg.num_samples`` hyperparameter settings from their posterior.

    ``burn_in`` overrides ``cfg.burn_in`` (the driver uses the shorter
    ``cfg.warm_burn_in`` when the chain is warm-started).  Returns the list of
    samples; the last one is also the chain end to warm-start from.
    """
    if len(data) < 1:
        raise ValueError("dataset is empty")
    noise = start.observation_noise_variance
    target = HyperparameterPosterior(data, cfg, noise)
    samples, _ = slice_sample(
        target,
        start.to_vector(),
        cfg.num_samples,
        cfg.burn_in if burn_in is None else burn_in,
        cfg.thinning,
        cfg.initial_step_width,
        cfg.max_step_out,
        rng,
    )
    return [KernelHyperparameters.from_vector(s, noise) for s in samples]
