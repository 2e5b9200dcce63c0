"""Post-hoc numerics on solver traces: rate fits and ergodic bounds."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import bundles, cones
from .model import ConicProblem

__all__ = [
    "fit_log10_slope",
    "fit_power_exponent",
    "median_successive_ratio",
    "ergodic_cost_bound",
    "ergodic_affine_bound",
    "quadratic_closeness",
]

LOG_FLOOR = 1e-300


def fit_log10_slope(ks: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log10(values) against ks.

    Values are clamped away from zero before taking logs, so a sequence
    that has already hit floating-point zero fits a very steep slope
    rather than producing NaN.
    """
    ks = np.asarray(ks, dtype=float)
    vals = np.maximum(np.asarray(values, dtype=float), LOG_FLOOR)
    if ks.size < 2:
        raise ValueError("need at least two points to fit a slope")
    coeffs = np.polyfit(ks, np.log10(vals), 1)
    return float(coeffs[0])


def fit_power_exponent(counts: Sequence[float],
                       errors: Sequence[float]) -> float:
    """Slope of log10(errors) vs log10(counts): the fitted rate exponent."""
    counts = np.asarray(counts, dtype=float)
    if np.any(counts <= 0):
        raise ValueError("counts must be positive")
    errs = np.maximum(np.asarray(errors, dtype=float), LOG_FLOOR)
    coeffs = np.polyfit(np.log10(counts), np.log10(errs), 1)
    return float(coeffs[0])


def median_successive_ratio(values: Sequence[float]) -> float:
    """Median of values[i+1] / values[i]; zero tails count as ratio 0."""
    vals = np.asarray(values, dtype=float)
    if vals.size < 2:
        raise ValueError("need at least two values")
    prev = vals[:-1]
    nxt = vals[1:]
    ratios = np.where(prev > 0.0, nxt / np.maximum(prev, LOG_FLOOR),
                      np.where(nxt > 0.0, np.inf, 0.0))
    return float(np.median(ratios))


# ---------------------------------------------------------------------------
# ergodic (average-iterate) bounds, zero dual start
# ---------------------------------------------------------------------------

def ergodic_cost_bound(y_star_norm: float, g_y1: float, g_star: float,
                       rho: float, beta: float, s_count: int) -> float:
    """Bound on |<c, x_avg> - p*| after s_count accepted steps (plus start)."""
    if s_count <= 0:
        raise ValueError("s_count must be positive")
    return (2.0 * y_star_norm**2 / (s_count * rho)
            + (g_y1 - g_star) / (s_count * beta))


def ergodic_affine_bound(y_star_norm: float, g_y1: float, g_star: float,
                         rho: float, beta: float, s_count: int) -> float:
    """Bound on ||A x_avg - b|| after s_count accepted steps (plus start)."""
    if s_count <= 0:
        raise ValueError("s_count must be positive")
    return ((1.0 + y_star_norm**2) / (2.0 * s_count * rho)
            + (g_y1 - g_star) / (s_count * beta))


# ---------------------------------------------------------------------------
# quadratic-closeness diagnostic (measured, never asserted)
# ---------------------------------------------------------------------------

def quadratic_closeness(prob: ConicProblem, bundle, y_center: np.ndarray,
                        seed: int = 0, samples: int = 100,
                        radius: float = 1.0):
    """How well g_k + (gamma/2)||y - y_c||^2 tracks g near y_center.

    Fits the single scalar gamma_hat by least squares on sampled dual
    points and returns (gamma_hat, max excess), where the excess at y is
    g(y) - g_k(y) - (gamma_hat/2)||y - y_center||^2.  A small max excess
    means the model plus a quadratic captures the dual function there.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    resid = np.empty(samples)
    half_sq = np.empty(samples)
    for i in range(samples):
        y = y_center + radius * rng.standard_normal(prob.m)
        g_y = cones.dual_value(prob, y)
        gk_y = bundles.model_value(bundle, prob, y)
        resid[i] = g_y - gk_y
        half_sq[i] = 0.5 * float((y - y_center) @ (y - y_center))
    denom = float(half_sq @ half_sq)
    gamma_hat = float(resid @ half_sq) / denom if denom > 0 else 0.0
    return gamma_hat, float(np.max(resid - gamma_hat * half_sq))
