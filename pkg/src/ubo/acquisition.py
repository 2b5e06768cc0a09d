"""Expected improvement over a GP hyperparameter mixture, and its unscented version.

Maximization convention: improvement is ``max(0, f(x) - y_best)``.
"""

import numpy as np
from scipy.special import erfcx, ndtr

from .unscented import DEFAULT_K, unscented_mean, unscented_mean_batch

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _h(z):
    """phi(z) + z Phi(z), so that EI = sigma * h((mu - y_best) / sigma)."""
    out = np.empty_like(z)
    tail = z < -6.0
    zt = z[tail]
    # Phi(z) = erfcx(-z/sqrt2) exp(-z^2/2) / 2 avoids cancelling two tiny terms
    out[tail] = np.exp(-0.5 * zt * zt) * (_INV_SQRT_2PI + 0.5 * zt * erfcx(-zt / np.sqrt(2.0)))
    zb = z[~tail]
    out[~tail] = _INV_SQRT_2PI * np.exp(-0.5 * zb * zb) + zb * ndtr(zb)
    return out


def _ei_terms(mean, variance, y_best):
    """Elementwise single-Gaussian EI; zero-variance entries use the limit max(0, mu - y_best)."""
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    gain = mean - y_best
    out = np.maximum(gain, 0.0)
    # beyond |z| = 40 the Gaussian tail is below double precision: EI is max(0, gain)
    live = (sd > 0) & (np.abs(gain) < 40.0 * sd)
    if np.any(live):
        ei = sd[live] * _h(gain[live] / sd[live])
        out[live] = np.maximum(ei, 0.0)
    return out


def expected_improvement(pred, y_best):
    """EI averaged over mixture components.

    For a single-query prediction returns a float, otherwise one value per
    query column.
    """
    ei = _ei_terms(pred.mean, pred.variance, float(y_best)).mean(axis=0)
    return float(ei[0]) if ei.size == 1 else ei


def ei_function(posterior, y_best):
    """Batch EI callable ``(q, d) array -> (q,) array`` against a GP posterior."""
    y_best = float(y_best)

    def ei(X):
        pred = posterior.predict(X)
        return _ei_terms(pred.mean, pred.variance, y_best).mean(axis=0)

    return ei


def unscented_expected_improvement(ei_at, sp):
    """UEI: weighted EI over a sigma-point set (``ei_at`` takes one point)."""
    return unscented_mean(ei_at, sp)


def uei_function(posterior, y_best, noise, k=DEFAULT_K):
    """Batch UEI callable; reduces to :func:`ei_function` when sigma_x is 0."""
    ei = ei_function(posterior, y_best)

    def uei(X):
        return unscented_mean_batch(ei, X, noise, k)

    return uei
