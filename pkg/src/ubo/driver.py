"""The Bayesian optimization loop, classical and unscented."""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .acquisition import ei_function, uei_function
from .errors import EvaluationError, ParameterDomainError
from .gp import DEFAULT_OBSERVATION_NOISE, Dataset, GPPosterior, KernelHyperparameters
from .mcmc import SliceSamplerConfig, slice_sample_hyperparameters
from .unscented import DEFAULT_K, InputNoise, unscented_mean_batch


class Mode(str, enum.Enum):
    CLASSICAL = "classical_bo"
    UNSCENTED = "unscented_bo"


@dataclass(frozen=True)
class OptimizerConfig:
    dim: int = 1
    initial_samples: int = 5
    iterations: int = 45
    input_noise: InputNoise = field(default_factory=lambda: InputNoise(0.01))
    ut_k: float = DEFAULT_K
    mode: Mode = Mode.UNSCENTED
    inner_optimizer_budget: int = 1000
    seed: int = 0
    sampler: SliceSamplerConfig = field(default_factory=SliceSamplerConfig)
    observation_noise: float = DEFAULT_OBSERVATION_NOISE

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if isinstance(self.input_noise, (int, float)):
            object.__setattr__(self, "input_noise", InputNoise(float(self.input_noise)))
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.initial_samples < 1:
            raise ValueError("initial_samples must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.inner_optimizer_budget < 1:
            raise ValueError("inner_optimizer_budget must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.observation_noise < 0:
            raise ValueError("observation_noise must be >= 0")
        if self.mode is Mode.UNSCENTED and not self.dim + self.ut_k > 0:
            raise ParameterDomainError(f"d + k must be positive (d={self.dim}, k={self.ut_k})")


@dataclass(frozen=True)
class IncumbentReport:
    x_star: np.ndarray
    criterion_value: float
    iteration: int
    index: int


@dataclass
class OptimizationResult:
    reports: list
    dataset: Dataset
    evaluations: int


def latin_hypercube(p, d, rng):
    """p points in [0,1]^d with exactly one point per stratum [j/p, (j+1)/p) in every dimension."""
    if p < 1:
        raise ValueError("p must be >= 1")
    u = rng.uniform(size=(p, d))
    perms = np.column_stack([rng.permutation(p) for _ in range(d)])
    return (perms + u) / p


def maximize_acquisition(acq, dim, budget, rng, refine_step=None):
    """Maximize a batch acquisition ``acq((q, d)) -> (q,)`` over the unit box.

    ceil(0.9 budget) uniform probes, then coordinate search from the best probe
    with a step halved (at most 10 times) whenever a sweep brings no gain.
    Ties go to the first point evaluated.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n_global = math.ceil(0.9 * budget)
    probes = rng.uniform(size=(n_global, dim))
    values = _checked(acq, probes)
    best = int(np.argmax(values))
    x, fx = probes[best].copy(), float(values[best])
    remaining = budget - n_global

    step = refine_step if refine_step is not None else 0.5 / n_global ** (1.0 / dim)
    halvings = 0
    while remaining > 0 and halvings <= 10:
        cand = np.repeat(x[None, :], 2 * dim, axis=0)
        for i in range(dim):
            cand[2 * i, i] += step
            cand[2 * i + 1, i] -= step
        cand = np.clip(cand, 0.0, 1.0)[: remaining]
        vals = _checked(acq, cand)
        remaining -= len(cand)
        j = int(np.argmax(vals))
        if vals[j] > fx:
            x, fx = cand[j].copy(), float(vals[j])
        else:
            step *= 0.5
            halvings += 1
    return x


def _checked(acq, X):
    values = np.asarray(acq(X), dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(f"acquisition is {values[i]} at {X[i]}", X[i], values[i])
    return values


def unscented_outcome(posterior, x, noise, k=DEFAULT_K):
    """UO: sigma-point average of the mixture-mean prediction.

    ``x`` may be a single point (returns a float) or an (q, d) batch.
    """
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    uo = unscented_mean_batch(posterior.mixture_mean, X, noise, k)
    return float(uo[0]) if x.ndim == 1 else uo


def select_incumbent(dataset, posterior, cfg, iteration=0):
    """Best observed point: by outcome (classical) or by unscented outcome."""
    if len(dataset) < 1:
        raise ValueError("dataset is empty")
    if Mode(cfg.mode) is Mode.CLASSICAL:
        scores = dataset.outcomes
    else:
        scores = unscented_outcome(posterior, dataset.points, cfg.input_noise, cfg.ut_k)
    i = int(np.argmax(scores))  # first maximum
    return IncumbentReport(dataset.points[i].copy(), float(scores[i]), iteration, i)


def run_optimization(objective, cfg, rng=None, callback=None):
    """Run p initial LHS evaluations and N acquisition-driven ones.

    One :class:`IncumbentReport` is produced after the initial design and one
    after every further evaluation.  ``callback(report, dataset)`` is invoked
    for each report as it is produced.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    calls = 0

    def evaluate(x):
        nonlocal calls
        calls += 1
        y = float(objective(x))
        if not np.isfinite(y):
            raise EvaluationError(f"objective returned {y} at {x}", x, y)
        return y

    X0 = latin_hypercube(cfg.initial_samples, cfg.dim, rng)
    data = Dataset(X0, [evaluate(x) for x in X0])

    hyp = KernelHyperparameters.default(cfg.dim, cfg.observation_noise)
    reports = []
    for t in range(cfg.iterations + 1):
        burn = cfg.sampler.burn_in if t == 0 else cfg.sampler.warm_burn_in
        samples = slice_sample_hyperparameters(data, hyp, cfg.sampler, rng, burn_in=burn)
        hyp = samples[-1]
        posterior = GPPosterior(data, samples, offset=float(data.outcomes.mean()))

        report = select_incumbent(data, posterior, cfg, iteration=t)
        reports.append(report)
        if callback is not None:
            callback(report, data)
        if t == cfg.iterations:
            break

        y_best = float(data.outcomes.max())
        if cfg.mode is Mode.CLASSICAL:
            acq = ei_function(posterior, y_best)
        else:
            acq = uei_function(posterior, y_best, cfg.input_noise, cfg.ut_k)
        x_next = maximize_acquisition(acq, cfg.dim, cfg.inner_optimizer_budget, rng)
        data = data.append(x_next, evaluate(x_next))

    return OptimizationResult(reports, data, calls)
