"""Voting rights from trust scores and participation.

Grants every rater of an entity at least a minimal voting right, while
capping the total weight handed out above trust (the overtrust) by an
affine budget in the entity's cumulative trusted score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from sklearn.base import BaseEstimator

from .dataset import PRIVATE, PUBLIC
from .errors import ConfigError

__all__ = ["OvertrustParams", "VotingRightsMatrix", "penalty_weight",
           "overtrust", "max_tolerated_overtrust", "solve_min_voting_right",
           "compute_voting_rights", "AffineOvertrust"]


@dataclass(frozen=True)
class OvertrustParams:
    privacy_penalty: float = 0.5
    min_overtrust: float = 2.0
    overtrust_ratio: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.privacy_penalty <= 1.0:
            raise ValueError("privacy_penalty must lie in (0, 1]")
        if not self.min_overtrust > 0.0:
            raise ValueError("min_overtrust must be > 0")
        if not 0.0 <= self.overtrust_ratio < 1.0:
            raise ValueError("overtrust_ratio must lie in [0, 1)")


@dataclass
class VotingRightsMatrix:
    """Per-(user, entity) voting rights plus each entity's minimal right."""

    rights: dict[tuple[str, str], float] = field(default_factory=dict)
    min_voting_right: dict[str, float] = field(default_factory=dict)

    def right(self, user: str, entity: str) -> float:
        return self.rights.get((user, entity), 0.0)

    def raters_of(self, entity: str) -> list[str]:
        return sorted(u for (u, e) in self.rights if e == entity)


def penalty_weight(flag: str | None, privacy_penalty: float) -> float:
    if flag == PUBLIC:
        return 1.0
    if flag == PRIVATE:
        return privacy_penalty
    return 0.0


def _entity_raters(flags: Mapping[str, Mapping[str, str]], entity: str,
                   trusts: Mapping[str, float], params: OvertrustParams):
    pairs = []
    for user in sorted(flags):
        flag = flags[user].get(entity)
        if flag is not None:
            pairs.append((penalty_weight(flag, params.privacy_penalty),
                          trusts.get(user, 0.0)))
    return pairs


def overtrust(entity: str, w_min: float,
              flags: Mapping[str, Mapping[str, str]],
              trusts: Mapping[str, float],
              params: OvertrustParams) -> float:
    """Total weight granted above trust when the minimal right is ``w_min``."""
    pairs = _entity_raters(flags, entity, trusts, params)
    return _overtrust_from_pairs(w_min, pairs)


def _overtrust_from_pairs(w_min: float, pairs) -> float:
    return sum(p * max(w_min - t, 0.0) for p, t in pairs)


def max_tolerated_overtrust(entity: str,
                            flags: Mapping[str, Mapping[str, str]],
                            trusts: Mapping[str, float],
                            params: OvertrustParams) -> float:
    pairs = _entity_raters(flags, entity, trusts, params)
    return _cap_from_pairs(pairs, params)


def _cap_from_pairs(pairs, params: OvertrustParams) -> float:
    trusted = sum(p * t for p, t in pairs)
    return params.min_overtrust + params.overtrust_ratio * trusted


def _solve_from_pairs(pairs, params: OvertrustParams, tol: float) -> float:
    cap = _cap_from_pairs(pairs, params)
    if _overtrust_from_pairs(1.0, pairs) <= cap:
        return 1.0
    # overtrust is continuous, zero at 0 and strictly increasing once
    # positive, so the budget equation has a unique root in (0, 1).
    # Bisect until both the argument and the residual meet the tolerance
    # (the overtrust slope can reach the number of raters).
    lo, hi = 0.0, 1.0
    mid, value = 0.5, _overtrust_from_pairs(0.5, pairs)
    for _ in range(200):
        if value < cap:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol and abs(value - cap) <= 0.5 * tol:
            break
        mid = 0.5 * (lo + hi)
        value = _overtrust_from_pairs(mid, pairs)
    return mid


def solve_min_voting_right(entity: str,
                           flags: Mapping[str, Mapping[str, str]],
                           trusts: Mapping[str, float],
                           params: OvertrustParams,
                           tol: float = 1e-06) -> float:
    """Largest minimal voting right whose overtrust stays within budget.

    Returns 1 outright when even a unit minimal right fits the budget;
    otherwise dichotomy on [0, 1] to absolute accuracy ``tol``.
    """
    pairs = _entity_raters(flags, entity, trusts, params)
    if not pairs:
        raise ValueError(f"entity {entity!r} has no raters")
    return _solve_from_pairs(pairs, params, tol)


def compute_voting_rights(flags: Mapping[str, Mapping[str, str]],
                          trusts: Mapping[str, float],
                          params: OvertrustParams,
                          tol: float = 1e-06) -> VotingRightsMatrix:
    """Voting rights for every rated (user, entity) pair.

    ``w_ue = penalty_ue * max(trust_u, min_voting_right_e)``; entities
    nobody rated produce no entries.
    """
    by_entity: dict[str, list[tuple[str, str]]] = {}
    for user in sorted(flags):
        for entity, flag in flags[user].items():
            by_entity.setdefault(entity, []).append((user, flag))

    result = VotingRightsMatrix()
    for entity in sorted(by_entity):
        raters = by_entity[entity]
        pairs = [(penalty_weight(flag, params.privacy_penalty),
                  trusts.get(user, 0.0)) for user, flag in raters]
        w_min = _solve_from_pairs(pairs, params, tol)
        result.min_voting_right[entity] = w_min
        for (user, flag), (penalty, trust) in zip(raters, pairs):
            result.rights[(user, entity)] = penalty * max(trust, w_min)
    return result


class AffineOvertrust(BaseEstimator):
    """Pipeline stage: trust plus participation to voting rights."""

    def __init__(self, privacy_penalty=0.5, min_overtrust=2.0,
                 overtrust_ratio=0.1, error=1e-06):
        self.privacy_penalty = privacy_penalty
        self.min_overtrust = min_overtrust
        self.overtrust_ratio = overtrust_ratio
        self.error = error

    def _validate(self):
        try:
            self._params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.error > 0.0:
            raise ConfigError("error must be > 0")

    def _params(self) -> OvertrustParams:
        return OvertrustParams(privacy_penalty=self.privacy_penalty,
                               min_overtrust=self.min_overtrust,
                               overtrust_ratio=self.overtrust_ratio)

    def __call__(self, state):
        self._validate()
        trusts = state.trust_state.as_dict() if state.trust_state else {}
        flags = state.dataset.participation()
        state.voting_rights = compute_voting_rights(
            flags, trusts, self._params(), self.error)
        return state
