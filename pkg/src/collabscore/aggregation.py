"""Global score aggregation and bounded display post-processing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from sklearn.base import BaseEstimator

from .errors import ConfigError
from .preference import UserModel
from .primitives import ResilienceParams, WeightedInput, qr_qtl
from .scaling import standardize
from .voting import VotingRightsMatrix

__all__ = ["GlobalScores", "aggregate_entity", "squash", "postprocess",
           "QuantileStandardizedQrMedian", "Squash"]


@dataclass
class GlobalScores:
    """Per-entity aggregate plus the squashed display values."""

    rho: dict[str, float] = field(default_factory=dict)
    n_raters: dict[str, int] = field(default_factory=dict)
    total_voting_right: dict[str, float] = field(default_factory=dict)
    rho_display: dict[str, float] = field(default_factory=dict)
    user_display: dict[tuple[str, str], float] = field(default_factory=dict)

    def entities(self) -> list[str]:
        return sorted(self.rho)


def aggregate_entity(entity: str, voting_rights: VotingRightsMatrix,
                     models: Mapping[str, UserModel], alpha: float = 0.2,
                     lipschitz: float = 0.1, tol: float = 1e-05) -> float:
    """Regularized alpha-quantile of the entity's weighted user scores.

    Quantiles below one half favor consensual entities: a population
    split between love and hate lands strictly on the unhappy side.
    Returns 0 when nobody scored the entity.
    """
    inputs = []
    for user in sorted(models):
        model = models[user]
        if entity in model.scores:
            inputs.append(WeightedInput(voting_rights.right(user, entity),
                                        model.scores[entity],
                                        model.unc_left[entity],
                                        model.unc_right[entity]))
    return qr_qtl(alpha, lipschitz, inputs, tol)


def squash(x: float, score_max: float = 100.0) -> float:
    """Increasing odd map of the reals onto (-score_max, score_max)."""
    return score_max * x / (1.0 + x * x) ** 0.5


def postprocess(scores: GlobalScores, models: Mapping[str, UserModel],
                score_max: float = 100.0) -> GlobalScores:
    """Fill the display fields by squashing global and user scores."""
    scores.rho_display = {e: squash(v, score_max) for e, v in scores.rho.items()}
    scores.user_display = {
        (user, e): squash(v, score_max)
        for user in sorted(models)
        for e, v in models[user].scores.items()
    }
    return scores


class QuantileStandardizedQrMedian(BaseEstimator):
    """Pipeline stage: standardize the scaled models, then aggregate.

    Spread estimation uses ``dev_quantile``; the per-entity aggregate is
    the regularized ``quantile``-quantile of the standardized scores
    under the voting rights.
    """

    def __init__(self, dev_quantile=0.9, lipschitz=0.1, error=1e-05,
                 quantile=0.2):
        self.dev_quantile = dev_quantile
        self.lipschitz = lipschitz
        self.error = error
        self.quantile = quantile

    def _validate(self):
        try:
            ResilienceParams(lipschitz=self.lipschitz, quantile=self.quantile,
                             solver_tolerance=self.error)
            ResilienceParams(lipschitz=self.lipschitz,
                             quantile=self.dev_quantile,
                             solver_tolerance=self.error)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def __call__(self, state):
        self._validate()
        models = state.scaled_models if state.scaled_models is not None \
            else state.raw_models
        models = models or {}
        sigma, standardized = standardize(models, self.dev_quantile,
                                          self.lipschitz, self.error)
        state.sigma_scaled = sigma
        state.standardized_models = standardized

        rights = state.voting_rights or VotingRightsMatrix()
        scores = GlobalScores()
        entities = sorted({e for m in standardized.values() for e in m.scores})
        for entity in entities:
            scores.rho[entity] = aggregate_entity(
                entity, rights, standardized, self.quantile,
                self.lipschitz, self.error)
            raters = [u for u in standardized if entity in standardized[u].scores]
            scores.n_raters[entity] = len(raters)
            scores.total_voting_right[entity] = sum(
                rights.right(u, entity) for u in raters)
        state.global_scores = scores
        return state


class Squash(BaseEstimator):
    """Pipeline stage: map global and user scores to the display scale."""

    def __init__(self, score_max=100.0):
        self.score_max = score_max

    def _validate(self):
        if not self.score_max > 0.0:
            raise ConfigError("score_max must be > 0")

    def __call__(self, state):
        self._validate()
        scores = state.global_scores if state.global_scores is not None \
            else GlobalScores()
        models = state.standardized_models or {}
        state.global_scores = postprocess(scores, models, self.score_max)
        return state
