"""Collaborative scaling of user score models.

Puts all users on a common scale in three moves: a multiplicative and
additive calibration against a set of high-activity trusted anchor
users (with uncertainty tracking throughout), a global shift placing a
chosen quantile of individual scores at zero, and a robust
standardization of the spread.

Anchors ("scalers") are calibrated against each other first; everyone
else is then calibrated against the anchors' finalized scaled scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator

from .dataset import PUBLIC
from .errors import ConfigError
from .preference import UserModel
from .primitives import WeightedInput, br_mean, qr_med, qr_qtl, qr_unc
from .voting import penalty_weight

__all__ = ["ScalerSet", "ScalingParams", "ScaleConfig", "select_scalers",
           "clearly_ordered_pairs", "ratio_estimate", "pair_scale",
           "pair_translation", "scale_user", "translate_user",
           "apply_scaling", "quantile_zero_shift", "standardize",
           "Mehestan", "QuantileZeroShift", "ScalingCompose"]

SIGMA_FLOOR = 1e-6


@dataclass
class ScalerSet:
    """Anchor users and their calibration weights."""

    weights: dict[str, float] = field(default_factory=dict)

    def members(self) -> list[str]:
        return sorted(self.weights)

    def __contains__(self, user) -> bool:
        return user in self.weights


@dataclass
class ScalingParams:
    """Affine rescaling of one user: score -> s * score + tau."""

    s: float = 1.0
    unc_s: tuple[float, float] = (0.0, 0.0)
    tau: float = 0.0
    unc_tau: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class ScaleConfig:
    lipschitz: float = 1.0
    user_comparison_lipschitz: float = 10.0
    n_scalers_max: int = 100
    trust_min: float = 0.1
    privacy_penalty: float = 0.5
    zero_quantile: float = 0.15
    dev_quantile: float = 0.9
    tol: float = 1e-05
    p_norm: float | None = None

    def __post_init__(self):
        if not (self.lipschitz > 0 and self.user_comparison_lipschitz > 0):
            raise ValueError("lipschitz constants must be > 0")
        if not (0 < self.zero_quantile < 1 and 0 < self.dev_quantile < 1):
            raise ValueError("quantiles must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


def _scale_norm(model: UserModel, p_norm: float | None) -> float:
    values = np.array(list(model.scores.values()), dtype=float)
    if values.size == 0:
        return 0.0
    if p_norm is None or math.isinf(p_norm):
        return float(np.max(np.abs(values)))
    return float(np.sum(np.abs(values) ** p_norm) ** (1.0 / p_norm))


def select_scalers(models: Mapping[str, UserModel],
                   trusts: Mapping[str, float],
                   *, n_scalers_max: int = 100, trust_min: float = 0.1,
                   min_activity: int = 1) -> ScalerSet:
    """Top users by number of compared entities among the trusted ones.

    Ties break toward the smaller user id; every selected anchor gets
    calibration weight 1. May be empty, in which case scaling later
    degenerates to the identity.
    """
    eligible = [u for u, m in models.items()
                if trusts.get(u, 0.0) >= trust_min
                and len(m.scores) >= min_activity]
    eligible.sort(key=lambda u: (-len(models[u].scores), u))
    return ScalerSet(weights={u: 1.0 for u in eligible[:n_scalers_max]})


def clearly_ordered_pairs(model: UserModel) -> set[tuple[str, str]]:
    """Entity pairs whose score gap clearly exceeds the uncertainties.

    A pair qualifies when the gap is nonzero and at least twice the
    inner-facing uncertainties; any infinite uncertainty disqualifies.
    Pairs are returned in canonical (smaller id first) order.
    """
    entities = model.entities()
    pairs = set()
    for i, e in enumerate(entities):
        for f in entities[i + 1:]:
            gap = model.scores[e] - model.scores[f]
            if gap > 0:
                ok = gap >= 2.0 * model.unc_left[e] + 2.0 * model.unc_right[f]
            elif gap < 0:
                ok = -gap >= 2.0 * model.unc_right[e] + 2.0 * model.unc_left[f]
            else:
                ok = False
            if ok:
                pairs.add((e, f))
    return pairs


def ratio_estimate(model_u: UserModel, model_v: UserModel,
                   e: str, f: str) -> tuple[float, tuple[float, float]]:
    """Anchor-pair estimate of v's scale relative to u, with uncertainty.

    The point estimate is the ratio of absolute score gaps. Its left and
    right uncertainties bound the ratio over the box spanned by the four
    scores' own uncertainties (numerator shrunk and denominator grown,
    and vice versa), clamped at zero from below.
    """
    gu = model_u.scores[e] - model_u.scores[f]
    gv = model_v.scores[e] - model_v.scores[f]
    if gv >= 0:
        v_shrink = model_v.unc_left[e] + model_v.unc_right[f]
        v_grow = model_v.unc_right[e] + model_v.unc_left[f]
    else:
        v_shrink = model_v.unc_right[e] + model_v.unc_left[f]
        v_grow = model_v.unc_left[e] + model_v.unc_right[f]
    if gu >= 0:
        u_grow = model_u.unc_right[e] + model_u.unc_left[f]
        u_shrink = model_u.unc_left[e] + model_u.unc_right[f]
    else:
        u_grow = model_u.unc_left[e] + model_u.unc_right[f]
        u_shrink = model_u.unc_right[e] + model_u.unc_left[f]
    agu, agv = abs(gu), abs(gv)
    s = agv / agu
    left = s - (agv - v_shrink) / (agu + u_grow)
    right = (agv + v_grow) / (agu - u_shrink) - s
    return s, (max(left, 0.0), max(right, 0.0))


def pair_scale(model_u: UserModel, model_v: UserModel,
               common_pairs, *, l_user: float, dev_quantile: float,
               tol: float) -> tuple[float, tuple[float, float]]:
    """Aggregate the anchor-pair ratios into one scale estimate for (u, v)."""
    inputs = []
    for e, f in sorted(common_pairs):
        s, (dl, dr) = ratio_estimate(model_u, model_v, e, f)
        inputs.append(WeightedInput(1.0, s - 1.0, dl, dr))
    s_uv = 1.0 + qr_med(l_user, inputs, tol)
    unc = qr_unc(l_user, 1.0, inputs, tol, quantile_dev=dev_quantile)
    return s_uv, (unc, unc)


def pair_translation(model_u: UserModel, model_v: UserModel,
                     s_u: float, s_v: float, *, dev_quantile: float,
                     tol: float) -> tuple[float, tuple[float, float]] | None:
    """Offset between the rescaled scores of u and v on common entities.

    Returns None when the two users share no scored entity.
    """
    common = sorted(set(model_u.scores) & set(model_v.scores))
    if not common:
        return None
    inputs = []
    for e in common:
        x = s_v * model_v.scores[e] - s_u * model_u.scores[e]
        dl = s_u * model_u.unc_left[e] + s_v * model_v.unc_left[e]
        dr = s_u * model_u.unc_right[e] + s_v * model_v.unc_right[e]
        inputs.append(WeightedInput(1.0, x, dl, dr))
    tau = qr_med(1.0, inputs, tol)
    unc = qr_unc(1.0, 1.0, inputs, tol, quantile_dev=dev_quantile)
    return tau, (unc, unc)


def _pair_inputs(user, model_u, scalers, anchor_models, anchor_pairs,
                 own_pairs, config, include_self):
    """Weighted (s_uv - 1) inputs over comparable anchors, self optional."""
    inputs = []
    for v in scalers.members():
        if v == user:
            continue
        common = own_pairs & anchor_pairs[v]
        if not common:
            continue
        s_uv, (dl, dr) = pair_scale(
            model_u, anchor_models[v], common,
            l_user=config.user_comparison_lipschitz,
            dev_quantile=config.dev_quantile, tol=config.tol)
        inputs.append(WeightedInput(scalers.weights[v], s_uv - 1.0, dl, dr))
    if include_self:
        inputs.append(WeightedInput(1.0, 0.0, 0.0, 0.0))
    return inputs


def scale_user(user: str, model_u: UserModel, scalers: ScalerSet,
               anchor_models: Mapping[str, UserModel],
               anchor_pairs: Mapping[str, set], own_pairs: set,
               config: ScaleConfig) -> tuple[float, tuple[float, float]]:
    """Multiplicative calibration of one user against the anchors.

    Anchors aggregate with the regularized median and include the user
    as their own unit-weight anchor; non-anchors aggregate with the
    robustified mean and exclude themselves, falling back to identity
    when comparable to no anchor. The inner Lipschitz constant shrinks
    with the magnitude of the user's scores, keeping the effect on the
    scores themselves bounded.
    """
    norm = _scale_norm(model_u, config.p_norm)
    if norm == 0.0:
        return 1.0, (0.0, 0.0)
    l_inner = config.lipschitz / (8.0 * norm)
    is_scaler = user in scalers
    inputs = _pair_inputs(user, model_u, scalers, anchor_models, anchor_pairs,
                          own_pairs, config, include_self=is_scaler)
    if not inputs:
        return 1.0, (0.0, 0.0)
    if is_scaler:
        s = 1.0 + qr_med(l_inner, inputs, config.tol)
    else:
        s = 1.0 + br_mean(l_inner, inputs, config.tol)
    unc = qr_unc(l_inner, 1.0, inputs, config.tol,
                 quantile_dev=config.dev_quantile)
    return s, (unc, unc)


def translate_user(user: str, model_u: UserModel, s_u: float,
                   scalers: ScalerSet,
                   anchor_models: Mapping[str, UserModel],
                   anchor_scales: Mapping[str, float],
                   anchor_pairs: Mapping[str, set], own_pairs: set,
                   config: ScaleConfig) -> tuple[float, tuple[float, float]]:
    """Additive calibration of one user against the comparable anchors."""
    inputs = []
    is_scaler = user in scalers
    for v in scalers.members():
        if v == user:
            continue
        if not (own_pairs & anchor_pairs[v]):
            continue
        pair = pair_translation(model_u, anchor_models[v], s_u,
                                anchor_scales[v],
                                dev_quantile=config.dev_quantile,
                                tol=config.tol)
        if pair is None:
            continue
        tau_uv, (dl, dr) = pair
        inputs.append(WeightedInput(scalers.weights[v], tau_uv, dl, dr))
    if is_scaler:
        inputs.append(WeightedInput(1.0, 0.0, 0.0, 0.0))
    if not inputs:
        return 0.0, (0.0, 0.0)
    l_inner = config.lipschitz / 8.0
    if is_scaler:
        tau = qr_med(l_inner, inputs, config.tol)
    else:
        tau = br_mean(l_inner, inputs, config.tol)
    unc = qr_unc(l_inner, 1.0, inputs, config.tol,
                 quantile_dev=config.dev_quantile)
    return tau, (unc, unc)


def apply_scaling(model: UserModel, params: ScalingParams) -> UserModel:
    """Affine transform of the scores with uncertainty bookkeeping.

    The scale uncertainty contributes proportionally to the magnitude of
    the raw score; for negative raw scores its left and right parts swap
    sides.
    """
    scores, unc_left, unc_right = {}, {}, {}
    ds_left, ds_right = params.unc_s
    dt_left, dt_right = params.unc_tau
    for e, raw in model.scores.items():
        scores[e] = params.s * raw + params.tau
        if raw >= 0:
            extra_left, extra_right = ds_left * raw, ds_right * raw
        else:
            extra_left, extra_right = ds_right * (-raw), ds_left * (-raw)
        unc_left[e] = params.s * model.unc_left[e] + dt_left + extra_left
        unc_right[e] = params.s * model.unc_right[e] + dt_right + extra_right
    return UserModel(scores=scores, unc_left=unc_left, unc_right=unc_right,
                     prior_weight=model.prior_weight)


def quantile_zero_shift(models: Mapping[str, UserModel],
                        weights: Mapping[tuple[str, str], float],
                        q_shift: float, l_shift: float,
                        tol: float = 1e-05) -> tuple[float, dict[str, UserModel]]:
    """Subtract one global shift so a quantile of individual scores sits at zero."""
    inputs = []
    for user in sorted(models):
        model = models[user]
        for e in model.entities():
            inputs.append(WeightedInput(weights.get((user, e), 0.0),
                                        model.scores[e],
                                        model.unc_left[e],
                                        model.unc_right[e]))
    shift = qr_qtl(q_shift, l_shift, inputs, tol) if inputs else 0.0
    shifted = {
        user: UserModel(
            scores={e: v - shift for e, v in model.scores.items()},
            unc_left=dict(model.unc_left), unc_right=dict(model.unc_right),
            prior_weight=model.prior_weight)
        for user, model in models.items()
    }
    return shift, shifted


def standardize(models: Mapping[str, UserModel], q_dev: float,
                lipschitz: float,
                tol: float = 1e-05) -> tuple[float, dict[str, UserModel]]:
    """Divide all scores and uncertainties by a robust spread estimate.

    The spread is the q_dev regularized quantile of absolute deviations
    from the regularized median, each score weighted inversely to how
    many entities its user compared, floored away from zero.
    """
    inputs = []
    for user in sorted(models):
        model = models[user]
        n = len(model.scores)
        if n == 0:
            continue
        w = 1.0 / n
        for e in model.entities():
            inputs.append(WeightedInput(w, model.scores[e],
                                        model.unc_left[e], model.unc_right[e]))
    if inputs:
        center = qr_med(lipschitz, inputs, tol)
        deviations = [WeightedInput(i.weight, abs(i.value - center),
                                    i.unc_left, i.unc_right) for i in inputs]
        sigma = max(SIGMA_FLOOR, qr_qtl(q_dev, lipschitz, deviations, tol))
    else:
        sigma = SIGMA_FLOOR
    scaled = {
        user: UserModel(
            scores={e: v / sigma for e, v in model.scores.items()},
            unc_left={e: v / sigma for e, v in model.unc_left.items()},
            unc_right={e: v / sigma for e, v in model.unc_right.items()},
            prior_weight=model.prior_weight)
        for user, model in models.items()
    }
    return sigma, scaled


class Mehestan(BaseEstimator):
    """Pipeline stage: anchor-based multiplicative and additive calibration."""

    def __init__(self, lipschitz=1.0, min_activity=1, n_scalers_max=100,
                 privacy_penalty=0.5, user_comparison_lipschitz=10.0,
                 p_norm_for_multiplicative_resilience=None, error=1e-05,
                 trust_min=0.1, dev_quantile=0.9):
        self.lipschitz = lipschitz
        self.min_activity = min_activity
        self.n_scalers_max = n_scalers_max
        self.privacy_penalty = privacy_penalty
        self.user_comparison_lipschitz = user_comparison_lipschitz
        self.p_norm_for_multiplicative_resilience = p_norm_for_multiplicative_resilience
        self.error = error
        self.trust_min = trust_min
        self.dev_quantile = dev_quantile

    def _config(self) -> ScaleConfig:
        return ScaleConfig(
            lipschitz=self.lipschitz,
            user_comparison_lipschitz=self.user_comparison_lipschitz,
            n_scalers_max=self.n_scalers_max,
            trust_min=self.trust_min,
            privacy_penalty=self.privacy_penalty,
            dev_quantile=self.dev_quantile,
            tol=self.error,
            p_norm=self.p_norm_for_multiplicative_resilience,
        )

    def _validate(self):
        try:
            self._config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not (isinstance(self.n_scalers_max, int) and self.n_scalers_max >= 0):
            raise ConfigError("n_scalers_max must be a nonnegative integer")
        if not (isinstance(self.min_activity, int) and self.min_activity >= 0):
            raise ConfigError("min_activity must be a nonnegative integer")

    def __call__(self, state):
        self._validate()
        config = self._config()
        models = state.scaled_models if state.scaled_models is not None \
            else state.raw_models
        models = models or {}
        trusts = state.trust_state.as_dict() if state.trust_state else {}
        scalers = select_scalers(models, trusts,
                                 n_scalers_max=self.n_scalers_max,
                                 trust_min=self.trust_min,
                                 min_activity=self.min_activity)
        params: dict[str, ScalingParams] = {}
        scaled: dict[str, UserModel] = {}

        raw_pairs = {u: clearly_ordered_pairs(models[u]) for u in models}

        # phase 1: anchors calibrate against each other on raw scores
        scales: dict[str, float] = {}
        uncs: dict[str, tuple[float, float]] = {}
        for u in scalers.members():
            scales[u], uncs[u] = scale_user(
                u, models[u], scalers, models, raw_pairs, raw_pairs[u], config)
        for u in scalers.members():
            tau, unc_tau = translate_user(
                u, models[u], scales[u], scalers, models, scales,
                raw_pairs, raw_pairs[u], config)
            params[u] = ScalingParams(s=scales[u], unc_s=uncs[u],
                                      tau=tau, unc_tau=unc_tau)
            scaled[u] = apply_scaling(models[u], params[u])

        # phase 2: everyone else calibrates against the anchors' scaled scores
        anchor_scaled = {u: scaled[u] for u in scalers.members()}
        anchor_pairs = {u: clearly_ordered_pairs(anchor_scaled[u])
                        for u in scalers.members()}
        identity_scales = {u: 1.0 for u in scalers.members()}
        for u in sorted(models):
            if u in scalers:
                continue
            own_pairs = raw_pairs[u]
            s, unc_s = scale_user(u, models[u], scalers, anchor_scaled,
                                  anchor_pairs, own_pairs, config)
            tau, unc_tau = translate_user(u, models[u], s, scalers,
                                          anchor_scaled, identity_scales,
                                          anchor_pairs, own_pairs, config)
            params[u] = ScalingParams(s=s, unc_s=unc_s, tau=tau,
                                      unc_tau=unc_tau)
            scaled[u] = apply_scaling(models[u], params[u])

        state.scaler_set = scalers
        state.scaling_params = params
        state.scaled_models = scaled
        return state


class QuantileZeroShift(BaseEstimator):
    """Pipeline stage: shift all scores so a quantile of them is zero."""

    def __init__(self, zero_quantile=0.15, lipschitz=0.1, error=1e-05,
                 privacy_penalty=0.5):
        self.zero_quantile = zero_quantile
        self.lipschitz = lipschitz
        self.error = error
        self.privacy_penalty = privacy_penalty

    def _validate(self):
        if not 0.0 < self.zero_quantile < 1.0:
            raise ConfigError("zero_quantile must lie in (0, 1)")
        if not self.lipschitz > 0.0:
            raise ConfigError("lipschitz must be > 0")
        if not self.error > 0.0:
            raise ConfigError("error must be > 0")
        if not 0.0 < self.privacy_penalty <= 1.0:
            raise ConfigError("privacy_penalty must lie in (0, 1]")

    def __call__(self, state):
        self._validate()
        models = state.scaled_models if state.scaled_models is not None \
            else state.raw_models
        models = models or {}
        flags = state.dataset.participation()
        weights: dict[tuple[str, str], float] = {}
        for user, model in models.items():
            n = len(model.scores)
            if n == 0:
                continue
            for e in model.scores:
                flag = flags.get(user, {}).get(e, PUBLIC)
                weights[(user, e)] = penalty_weight(flag, self.privacy_penalty) / n
        shift, shifted = quantile_zero_shift(models, weights,
                                             self.zero_quantile,
                                             self.lipschitz, self.error)
        state.zero_shift = shift
        state.scaled_models = shifted
        return state


class ScalingCompose(BaseEstimator):
    """Pipeline stage: apply a list of scaling steps in order."""

    def __init__(self, scalings=None):
        self.scalings = scalings

    def steps(self):
        if self.scalings is None:
            return [Mehestan(), QuantileZeroShift()]
        return list(self.scalings)

    def _validate(self):
        for step in self.steps():
            if not callable(step):
                raise ConfigError(f"scaling step {step!r} is not applicable")

    def __call__(self, state):
        self._validate()
        for step in self.steps():
            state = step(state)
        return state
