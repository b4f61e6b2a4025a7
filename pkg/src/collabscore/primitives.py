"""Lipschitz-resilient robust statistics on weighted scalar inputs.

All estimators here share the same structure: a quadratic regularizer
``m^2 / 2L`` plus a sum of per-input convex losses whose derivatives are
bounded by the input's weight. That bound is what caps the influence of
any single input on the output (L-Lipschitz resilience in the weights).

Inputs are :class:`WeightedInput` records. An input with ``value=None``
is treated as absent and skipped; an infinite uncertainty makes the
input's pull vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "WeightedInput",
    "ResilienceParams",
    "UnboundedObjectiveError",
    "huber_asym",
    "huber_asym_derivative",
    "minimize_convex_1d",
    "qr_med",
    "qr_qtl",
    "qr_dev",
    "qr_unc",
    "clip_mean",
    "br_mean",
]

_MAX_DOUBLINGS = 64
_BRENT_MAXITER = 256


class UnboundedObjectiveError(RuntimeError):
    """The derivative never changes sign: no interior minimizer exists."""


@dataclass(frozen=True)
class WeightedInput:
    """One weighted scalar with asymmetric uncertainty.

    ``value=None`` encodes a missing input, skipped by every estimator.
    Uncertainties may be ``math.inf``, which neutralizes the input.
    """

    weight: float
    value: float | None = None
    unc_left: float = 0.0
    unc_right: float = 0.0

    def __post_init__(self):
        if not self.weight >= 0.0:
            raise ValueError(f"weight must be >= 0, got {self.weight}")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError(f"value must be finite or None, got {self.value}")
        if not self.unc_left >= 0.0 or not self.unc_right >= 0.0:
            raise ValueError("uncertainties must be >= 0")


@dataclass(frozen=True)
class ResilienceParams:
    """Bundle of the knobs shared by the regularized estimators."""

    lipschitz: float
    quantile: float
    default_deviation: float = 1.0
    solver_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.lipschitz > 0.0:
            raise ValueError("lipschitz must be > 0")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie in (0, 1)")
        if not self.default_deviation > 0.0:
            raise ValueError("default_deviation must be > 0")
        if not self.solver_tolerance > 0.0:
            raise ValueError("solver_tolerance must be > 0")


def _branch_coefficients(alpha: float) -> tuple[float, float]:
    # Pinball-style asymmetry, normalized so the steeper side has slope 1:
    # estimating below a data point costs alpha per unit, above costs
    # (1 - alpha), hence the minimizer tracks the alpha-quantile.
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    below = min(1.0, alpha / (1.0 - alpha))
    above = min(1.0, (1.0 - alpha) / alpha)
    return below, above


def huber_asym(m: float, x: float, delta_left: float, delta_right: float,
               alpha: float) -> float:
    """Asymmetric Huber loss of an estimate ``m`` against data point ``x``.

    Zero at ``m == x``, convex in ``m``, smoothed around ``x`` by the
    side-dependent uncertainty. An infinite uncertainty flattens its
    branch to zero.
    """
    below, above = _branch_coefficients(alpha)
    d = m - x
    if d == 0.0:
        return 0.0
    coeff, delta = (below, delta_left) if d < 0.0 else (above, delta_right)
    if math.isinf(delta):
        return 0.0
    # sqrt(delta^2 + d^2) - delta in cancellation-free form
    return coeff * d * d / (math.hypot(delta, d) + delta)


def huber_asym_derivative(m: float, x: float, delta_left: float,
                          delta_right: float, alpha: float) -> float:
    """Derivative of :func:`huber_asym` in ``m``; always within [-1, 1]."""
    below, above = _branch_coefficients(alpha)
    d = m - x
    if d == 0.0:
        return 0.0
    coeff, delta = (below, delta_left) if d < 0.0 else (above, delta_right)
    denom = math.hypot(delta, d)
    return coeff * d / denom if denom > 0.0 else 0.0


def _as_arrays(inputs: Sequence[WeightedInput]):
    present = [i for i in inputs if i.value is not None]
    w = np.array([i.weight for i in present], dtype=float)
    x = np.array([i.value for i in present], dtype=float)
    dl = np.array([i.unc_left for i in present], dtype=float)
    dr = np.array([i.unc_right for i in present], dtype=float)
    return w, x, dl, dr


def _huber_derivative_sum(m, w, x, dl, dr, below, above) -> float:
    d = m - x
    delta = np.where(d < 0.0, dl, dr)
    coeff = np.where(d < 0.0, below, above)
    denom = np.hypot(delta, d)
    contrib = np.zeros_like(d)
    np.divide(coeff * d, denom, out=contrib, where=denom > 0.0)
    return float(np.dot(w, contrib))


def minimize_convex_1d(derivative: Callable[[float], float],
                       tol: float = 0.01) -> float:
    """Root of a nondecreasing derivative, to absolute accuracy ``tol``.

    Brackets by doubling outward from [-1, 1], then runs Brent-Dekker.
    Raises :class:`UnboundedObjectiveError` when no sign change is found
    within the doubling budget.
    """
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    lo, f_lo = -1.0, derivative(-1.0)
    for _ in range(_MAX_DOUBLINGS):
        if f_lo <= 0.0:
            break
        lo *= 2.0
        f_lo = derivative(lo)
    else:
        raise UnboundedObjectiveError("derivative stays positive; no minimizer")
    hi, f_hi = 1.0, derivative(1.0)
    for _ in range(_MAX_DOUBLINGS):
        if f_hi >= 0.0:
            break
        hi *= 2.0
        f_hi = derivative(hi)
    else:
        raise UnboundedObjectiveError("derivative stays negative; no minimizer")
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    return float(brentq(derivative, lo, hi, xtol=tol, maxiter=_BRENT_MAXITER))


def qr_qtl(alpha: float, lipschitz: float, inputs: Iterable[WeightedInput],
           tol: float = 0.01) -> float:
    """Quadratically regularized weighted alpha-quantile.

    Minimizes ``m^2/2L + sum_u w_u * huber_asym(m | x_u, Delta_u, alpha)``.
    Returns 0 when no input carries weight. The output moves by at most
    ``L * ||dw||_1`` under any change ``dw`` of the weights.
    """
    below, above = _branch_coefficients(alpha)
    if not lipschitz > 0.0:
        raise ValueError("lipschitz must be > 0")
    w, x, dl, dr = _as_arrays(list(inputs))
    if x.size == 0 or float(w.sum()) == 0.0:
        return 0.0

    def derivative(m: float) -> float:
        return m / lipschitz + _huber_derivative_sum(m, w, x, dl, dr, below, above)

    return minimize_convex_1d(derivative, tol)


def qr_med(lipschitz: float, inputs: Iterable[WeightedInput],
           tol: float = 0.01) -> float:
    """Quadratically regularized weighted median: ``qr_qtl`` at alpha = 1/2."""
    return qr_qtl(0.5, lipschitz, inputs, tol)


def qr_dev(alpha_dev: float, lipschitz: float, default_dev: float,
           inputs: Iterable[WeightedInput], tol: float = 0.01) -> float:
    """Regularized deviation of the inputs around their ``qr_med``.

    ``default_dev + qr_qtl(alpha_dev, L)`` applied to the recentered
    absolute deviations ``|x_u - m| - default_dev``. 2L-Lipschitz
    resilient in the weights.
    """
    if not default_dev > 0.0:
        raise ValueError("default_dev must be > 0")
    inputs = [i for i in inputs if i.value is not None]
    m = qr_med(lipschitz, inputs, tol)
    recentered = [
        WeightedInput(i.weight, abs(i.value - m) - default_dev,
                      i.unc_left, i.unc_right)
        for i in inputs
    ]
    return default_dev + qr_qtl(alpha_dev, lipschitz, recentered, tol)


def qr_unc(lipschitz: float, default_dev: float,
           inputs: Iterable[WeightedInput], tol: float = 0.01,
           quantile_dev: float = 0.9) -> float:
    """Uncertainty proxy for ``qr_med``: returns :func:`qr_dev`.

    The deviation quantile is threaded through ``quantile_dev`` rather
    than hardcoded.
    """
    return qr_dev(quantile_dev, lipschitz, default_dev, inputs, tol)


def clip_mean(inputs: Iterable[WeightedInput], center: float,
              radius: float) -> float:
    """Weighted mean of values clipped to ``[center - radius, center + radius]``.

    Uncertainties are ignored. Returns ``center`` when no weight is
    available, the unique continuity-respecting fallback.
    """
    if not radius >= 0.0:
        raise ValueError("radius must be >= 0")
    w, x, _, _ = _as_arrays(list(inputs))
    total = float(w.sum())
    if x.size == 0 or total <= 0.0:
        return float(center)
    clipped = np.clip(x, center - radius, center + radius)
    return float(np.dot(w, clipped) / total)


def br_mean(lipschitz: float, inputs: Iterable[WeightedInput],
            tol: float = 0.01) -> float:
    """Byzantine-robustified mean.

    Clipped mean centered on ``qr_med`` at L/4 with radius ``L/4 * sum(w)``.
    Recovers the exact weighted mean once ``L * sum(w) >= 8 * radius`` for
    any radius bounding the values. The L/4 center keeps the total
    single-input influence (center motion, radius motion and reweighting,
    at most L/4 + L/4 + L/2) within the stated L.
    """
    if not lipschitz > 0.0:
        raise ValueError("lipschitz must be > 0")
    inputs = [i for i in inputs if i.value is not None]
    w, _, _, _ = _as_arrays(inputs)
    total = float(w.sum())
    if total <= 0.0:
        return 0.0
    center = qr_med(0.25 * lipschitz, inputs, tol)
    radius = 0.25 * lipschitz * total
    return clip_mean(inputs, center, radius)
