"""Per-user preference learning from pairwise comparisons.

Scores minimize a strongly convex loss: a Gaussian prior plus, per
comparison (e, f, r), the term ``phi(theta_e - theta_f) + r (theta_e -
theta_f) / r_max`` where ``phi`` is the cumulant generating function of
the uniform law on [-1, 1]. Negative judgments favor the first entity,
so decreasing r pushes theta_e up. Score uncertainties are read off the
likelihood profile: the shift of one coordinate that costs one unit of
log-likelihood, separately on each side.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator

from .errors import ConfigError, DataError

__all__ = ["UserModel", "cgf_uniform", "cgf_uniform_prime", "gbt_loss",
           "fit_raw_scores", "estimate_uncertainties", "UniformGBT"]

_TAYLOR_SWITCH = 1e-2
_LARGE_THETA = 20.0
_MAX_SWEEPS = 10_000
_STEP_CAP = 10.0
_UNC_BRACKET_LO = 1e-3
_UNC_BRACKET_HI = 1e6


@dataclass
class UserModel:
    """Fitted scores and asymmetric uncertainties on the entities a user compared."""

    scores: dict[str, float] = field(default_factory=dict)
    unc_left: dict[str, float] = field(default_factory=dict)
    unc_right: dict[str, float] = field(default_factory=dict)
    prior_weight: float = 0.0

    def entities(self) -> list[str]:
        return sorted(self.scores)


def cgf_uniform(theta: float) -> float:
    """log(sinh(t)/t), evenly extended, with Taylor and asymptotic branches."""
    t = abs(float(theta))
    if t < _TAYLOR_SWITCH:
        t2 = t * t
        return t2 / 6.0 - t2 * t2 / 180.0
    if t > _LARGE_THETA:
        return t - math.log(2.0) - math.log(t) + math.log1p(-math.exp(-2.0 * t))
    return math.log(math.sinh(t) / t)


def cgf_uniform_prime(theta: float) -> float:
    """coth(t) - 1/t; odd, zero at zero, saturates at +-1."""
    t = float(theta)
    if abs(t) < _TAYLOR_SWITCH:
        return t / 3.0 - t ** 3 / 45.0
    return 1.0 / math.tanh(t) - 1.0 / t


def _phi_prime_arr(d: np.ndarray) -> np.ndarray:
    out = np.empty_like(d)
    small = np.abs(d) < _TAYLOR_SWITCH
    ds = d[small]
    out[small] = ds / 3.0 - ds ** 3 / 45.0
    db = d[~small]
    out[~small] = 1.0 / np.tanh(db) - 1.0 / db
    return out


def _phi_prime_second_arr(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivative in one pass (shared branch masks)."""
    prime = np.empty_like(d)
    second = np.empty_like(d)
    a = np.abs(d)
    small = a < _TAYLOR_SWITCH
    ds = d[small]
    prime[small] = ds / 3.0 - ds ** 3 / 45.0
    second[small] = 1.0 / 3.0 - ds ** 2 / 15.0
    big = ~small
    db = d[big]
    prime[big] = 1.0 / np.tanh(db) - 1.0 / db
    with np.errstate(over="ignore"):
        sinh2 = np.sinh(np.minimum(np.abs(db), 360.0)) ** 2
    second[big] = 1.0 / db ** 2 - 1.0 / sinh2
    return prime, second


def _phi_arr(d: np.ndarray) -> np.ndarray:
    out = np.empty_like(d)
    a = np.abs(d)
    small = a < _TAYLOR_SWITCH
    large = a > _LARGE_THETA
    mid = ~small & ~large
    t2 = a[small] ** 2
    out[small] = t2 / 6.0 - t2 * t2 / 180.0
    out[mid] = np.log(np.sinh(a[mid]) / a[mid])
    al = a[large]
    out[large] = al - math.log(2.0) - np.log(al) + np.log1p(-np.exp(-2.0 * al))
    return out


def gbt_loss(theta: Mapping[str, float],
             data: Iterable[tuple[str, str, float]],
             r_max: float, prior_weight: float) -> float:
    """Prior-regularized negative log-likelihood of the scores."""
    loss = 0.5 * prior_weight * sum(v * v for v in theta.values())
    for e, f, r in data:
        d = theta[e] - theta[f]
        loss += cgf_uniform(d) + r * d / r_max
    return loss


class _UserProblem:
    """Indexed view of one user's comparisons for fitting and profiling."""

    def __init__(self, data, r_max):
        self.r_max = float(r_max)
        self.entities = sorted({e for e, _, _ in data} | {f for _, f, _ in data})
        index = {e: i for i, e in enumerate(self.entities)}
        self.ea = np.array([index[e] for e, _, _ in data], dtype=int)
        self.eb = np.array([index[f] for _, f, _ in data], dtype=int)
        self.r = np.array([r for _, _, r in data], dtype=float)
        n = len(self.entities)
        # adjacency: per entity, the opposite endpoints and the judgment
        # oriented so that a negative value favors this entity
        adj_other: list[list[int]] = [[] for _ in range(n)]
        adj_r: list[list[float]] = [[] for _ in range(n)]
        for a, b, r in zip(self.ea, self.eb, self.r):
            adj_other[a].append(b)
            adj_r[a].append(r)
            adj_other[b].append(a)
            adj_r[b].append(-r)
        self.adj_other = [np.array(o, dtype=int) for o in adj_other]
        self.adj_r = [np.array(v, dtype=float) for v in adj_r]
        self.components = self._components(n)

    def _components(self, n):
        comp = [-1] * n
        groups = []
        for start in range(n):
            if comp[start] >= 0:
                continue
            label = len(groups)
            stack, members = [start], []
            comp[start] = label
            while stack:
                i = stack.pop()
                members.append(i)
                for j in self.adj_other[i]:
                    if comp[j] < 0:
                        comp[j] = label
                        stack.append(int(j))
            groups.append(np.array(sorted(members), dtype=int))
        return groups

    def nll(self, theta: np.ndarray) -> float:
        d = theta[self.ea] - theta[self.eb]
        return float(np.sum(_phi_arr(d) + self.r * d / self.r_max))

    def slice_profile(self, theta: np.ndarray, i: int):
        """Likelihood-term increase along coordinate i, as a function of delta."""
        d0 = theta[i] - theta[self.adj_other[i]]
        base = float(np.sum(_phi_arr(d0)))
        lin_rate = float(np.sum(self.adj_r[i])) / self.r_max

        def delta_nll(delta: float) -> float:
            return float(np.sum(_phi_arr(d0 + delta))) - base + lin_rate * delta

        return delta_nll

    def slice_nll_delta(self, theta: np.ndarray, i: int, delta: float) -> float:
        """Change of the likelihood term when entity i moves by delta."""
        return self.slice_profile(theta, i)(delta)


def fit_raw_scores(data: Iterable[tuple[str, str, float]], r_max: float,
                   prior_weight: float, tol: float = 1e-05,
                   start: Mapping[str, float] | None = None) -> dict[str, float]:
    """Unique minimizer of the prior-regularized comparison loss.

    Cyclic per-coordinate Newton with clipped steps, plus an exact
    per-component recentering each sweep (the likelihood is invariant
    under shifting a connected component, so its optimal offset under
    the prior is closed-form); stops when the largest update falls
    below ``tol``.
    """
    if not prior_weight > 0.0:
        raise ValueError("prior_weight must be > 0")
    data = list(data)
    if not data:
        return {}
    problem = _UserProblem(data, r_max)
    n = len(problem.entities)
    theta = np.zeros(n)
    if start is not None:
        for e, v in start.items():
            theta[problem.entities.index(e)] = v
    lin = np.array([float(np.sum(r)) / problem.r_max for r in problem.adj_r])
    for _ in range(_MAX_SWEEPS):
        largest = 0.0
        for comp in problem.components:
            shift = float(theta[comp].mean())
            theta[comp] -= shift
            largest = max(largest, abs(shift))
        for i in range(n):
            d = theta[i] - theta[problem.adj_other[i]]
            prime, second = _phi_prime_second_arr(d)
            g = prior_weight * theta[i] + float(np.sum(prime)) + lin[i]
            h = prior_weight + float(np.sum(second))
            step = g / h
            if step > _STEP_CAP:
                step = _STEP_CAP
            elif step < -_STEP_CAP:
                step = -_STEP_CAP
            theta[i] -= step
            largest = max(largest, abs(step))
        if largest < tol:
            break
    else:
        warnings.warn("score fit hit the sweep limit before converging")
    return dict(zip(problem.entities, theta.tolist()))


def estimate_uncertainties(scores: Mapping[str, float],
                           data: Iterable[tuple[str, str, float]],
                           r_max: float) -> tuple[dict[str, float], dict[str, float]]:
    """Left/right score shifts that raise the likelihood term by one unit.

    Solves ``nll(theta -+ delta e_i) = nll(theta) + 1`` per entity by
    bracketing with doubling then Brent root finding; a side with no
    finite solution within the bracket budget gets ``inf``.
    """
    data = list(data)
    problem = _UserProblem(data, r_max)
    theta = np.array([scores[e] for e in problem.entities], dtype=float)
    unc_left: dict[str, float] = {}
    unc_right: dict[str, float] = {}
    for i, entity in enumerate(problem.entities):
        profile = problem.slice_profile(theta, i)
        unc_left[entity] = _one_side(profile, -1.0)
        unc_right[entity] = _one_side(profile, +1.0)
    return unc_left, unc_right


def _one_side(profile, sign: float) -> float:
    def excess(delta: float) -> float:
        return profile(sign * delta) - 1.0

    hi = _UNC_BRACKET_LO
    if excess(hi) >= 0.0:
        lo = 0.0
    else:
        lo = hi
        while True:
            hi *= 2.0
            if hi > _UNC_BRACKET_HI:
                return math.inf
            value = excess(hi)
            if value >= 0.0:
                break
            lo = hi
    return float(brentq(excess, lo, hi, xtol=1e-10, maxiter=256))


class UniformGBT(BaseEstimator):
    """Pipeline stage: fit every user's raw scores and uncertainties."""

    def __init__(self, prior_std_dev=7.0, comparison_max=10.0,
                 convergence_error=1e-05,
                 cumulant_generating_function_error=1e-05,
                 prior_weight=None):
        self.prior_std_dev = prior_std_dev
        self.comparison_max = comparison_max
        self.convergence_error = convergence_error
        self.cumulant_generating_function_error = cumulant_generating_function_error
        self.prior_weight = prior_weight

    def _validate(self):
        if self.prior_weight is not None:
            if not self.prior_weight > 0.0:
                raise ConfigError("prior_weight must be > 0")
        elif not self.prior_std_dev > 0.0:
            raise ConfigError("prior_std_dev must be > 0")
        if not self.comparison_max > 0.0:
            raise ConfigError("comparison_max must be > 0")
        if not self.convergence_error > 0.0:
            raise ConfigError("convergence_error must be > 0")
        if not self.cumulant_generating_function_error > 0.0:
            raise ConfigError("cumulant_generating_function_error must be > 0")

    def effective_prior_weight(self) -> float:
        if self.prior_weight is not None:
            return float(self.prior_weight)
        return 1.0 / float(self.prior_std_dev) ** 2

    def __call__(self, state):
        self._validate()
        alpha = self.effective_prior_weight()
        models: dict[str, UserModel] = {}
        for user in sorted(state.dataset.comparisons):
            triples = state.dataset.triples(user)
            for _, _, r in triples:
                if abs(r) > self.comparison_max:
                    raise DataError(
                        f"comparison {r} by {user!r} exceeds comparison_max")
            scores = fit_raw_scores(triples, self.comparison_max, alpha,
                                    self.convergence_error)
            left, right = estimate_uncertainties(scores, triples,
                                                 self.comparison_max)
            models[user] = UserModel(scores=scores, unc_left=left,
                                     unc_right=right, prior_weight=alpha)
        state.raw_models = models
        return state
