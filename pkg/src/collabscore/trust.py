"""Trust propagation over the vouch graph.

Builds the sink-augmented row-substochastic vouch matrix and iterates
the clipped propagation ``t <- min(p + beta V^T t, 1)`` for a fixed,
precomputed number of steps. The clipping bounds every trust score by
1 and caps the influence any single voucher can exert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ConfigError, DataError

__all__ = ["VouchSet", "VouchMatrix", "TrustState",
           "build_vouch_matrix", "lipschitrust", "LipschiTrust"]


@dataclass(frozen=True)
class VouchSet:
    """Directed vouch pairs over a known user universe."""

    users: frozenset[str]
    vouches: frozenset[tuple[str, str]]
    sink_vouch: float = 5.0

    def __post_init__(self):
        if not self.sink_vouch > 0.0:
            raise ValueError("sink_vouch must be > 0")
        for voucher, vouchee in self.vouches:
            if voucher == vouchee:
                raise DataError(f"self-vouch by {voucher!r}")
            if voucher not in self.users or vouchee not in self.users:
                raise DataError(f"vouch ({voucher!r}, {vouchee!r}) references unknown user")


@dataclass(frozen=True)
class VouchMatrix:
    """Sparse weighted vouch matrix; each row sums to deg/(sink + deg) <= 1."""

    users: tuple[str, ...]
    weights: dict[tuple[str, str], float]

    def row_sum(self, voucher: str) -> float:
        return sum(w for (u, _), w in self.weights.items() if u == voucher)


@dataclass
class TrustState:
    users: tuple[str, ...]
    pretrust: np.ndarray
    decay: float
    trust: np.ndarray
    epsilon: float
    iterations_run: int

    def as_dict(self) -> dict[str, float]:
        return {u: float(t) for u, t in zip(self.users, self.trust)}

    def trust_of(self, user: str) -> float:
        return float(self.trust[self.users.index(user)])


def build_vouch_matrix(vouch_set: VouchSet) -> VouchMatrix:
    """Weight each recorded vouch by 1 / (sink_vouch + out-degree of voucher).

    Duplicate pairs collapse before degree counting; vouches are a set.
    """
    unique = set(vouch_set.vouches)
    out_degree: dict[str, int] = {}
    for voucher, _ in unique:
        out_degree[voucher] = out_degree.get(voucher, 0) + 1
    weights = {
        (voucher, vouchee): 1.0 / (vouch_set.sink_vouch + out_degree[voucher])
        for voucher, vouchee in unique
    }
    return VouchMatrix(users=tuple(sorted(vouch_set.users)), weights=weights)


def lipschitrust(pretrust: Mapping[str, float], matrix: VouchMatrix,
                 beta: float, epsilon: float) -> TrustState:
    """Propagate pretrust through the vouch matrix to the clipped fixed point.

    Runs exactly ``ceil(ln(U / epsilon) / ln(1 / beta))`` iterations, which
    brings the iterate within ``epsilon`` of the fixed point in l1 norm.
    """
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"decay must lie in (0, 1), got {beta}")
    if not epsilon > 0.0:
        raise ConfigError("epsilon must be > 0")
    users = matrix.users
    index = {u: i for i, u in enumerate(users)}
    p = np.zeros(len(users))
    for user, value in pretrust.items():
        if user not in index:
            raise DataError(f"pretrust references unknown user {user!r}")
        if not 0.0 <= value <= 1.0:
            raise DataError(f"pretrust value {value} outside [0, 1]")
        p[index[user]] = value

    src = np.array([index[u] for (u, _) in matrix.weights], dtype=int)
    dst = np.array([index[v] for (_, v) in matrix.weights], dtype=int)
    wgt = np.array(list(matrix.weights.values()), dtype=float)

    n = len(users)
    iterations = 0
    if n > 0:
        iterations = max(0, math.ceil(math.log(n / epsilon) / math.log(1.0 / beta)))
    t = np.minimum(p.copy(), 1.0)
    for _ in range(iterations):
        acc = p.copy()
        if src.size:
            np.add.at(acc, dst, beta * wgt * t[src])
        t = np.minimum(acc, 1.0)
    return TrustState(users=users, pretrust=p, decay=beta, trust=t,
                      epsilon=epsilon, iterations_run=iterations)


class LipschiTrust(BaseEstimator):
    """Pipeline stage: pretrust plus vouches to trust scores in [0, 1]."""

    def __init__(self, pretrust_value=0.8, decay=0.8, sink_vouch=5.0, error=1e-08):
        self.pretrust_value = pretrust_value
        self.decay = decay
        self.sink_vouch = sink_vouch
        self.error = error

    def _validate(self):
        if not 0.0 <= self.pretrust_value <= 1.0:
            raise ConfigError("pretrust_value must lie in [0, 1]")
        if not 0.0 < self.decay < 1.0:
            raise ConfigError("decay must lie in (0, 1)")
        if not self.sink_vouch > 0.0:
            raise ConfigError("sink_vouch must be > 0")
        if not self.error > 0.0:
            raise ConfigError("error must be > 0")

    def __call__(self, state):
        self._validate()
        dataset = state.dataset
        users = frozenset(dataset.users())
        vouch_set = VouchSet(users=users,
                             vouches=frozenset(dataset.vouches),
                             sink_vouch=self.sink_vouch)
        matrix = build_vouch_matrix(vouch_set)
        pretrust = {u: self.pretrust_value
                    for u in users if dataset.pretrusted.get(u, False)}
        state.trust_state = lipschitrust(pretrust, matrix, self.decay, self.error)
        return state
