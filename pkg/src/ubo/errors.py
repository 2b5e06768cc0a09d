"""Exception types raised by the ubo package."""

import numpy as np


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class ConditioningError(np.linalg.LinAlgError):
    """Cholesky factorization failed at every jitter level tried."""

    def __init__(self, jitters):
        self.jitters = tuple(float(j) for j in jitters)
        levels = ", ".join(f"{j:.1e}" for j in self.jitters)
        super().__init__(f"Gram matrix not positive definite; jitter levels tried: {levels}")


class InvalidStartError(ValueError):
    """The MCMC chain was started at a point with non-finite log-posterior."""


class EvaluationError(RuntimeError):
    """A function returned a non-finite value.

    The offending input is kept in ``point`` so callers can log or replay it.
    """

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float).copy()
        self.value = value
