"""Pipeline orchestration and JSON configuration.

The six stages chain on a shared :class:`PipelineState`; every
intermediate artifact stays on the state for inspection. Stage
implementations are looked up by the algorithm names used in config
files, and stage parameters round-trip exactly between JSON and the
estimator parameters.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field
from typing import Any, Mapping

from sklearn.base import BaseEstimator

from .aggregation import GlobalScores, QuantileStandardizedQrMedian, Squash
from .dataset import ComparisonDataset
from .errors import ConfigError, StageError
from .generative import GenerativeConfig
from .preference import UniformGBT, UserModel
from .scaling import Mehestan, QuantileZeroShift, ScalingCompose
from .trust import LipschiTrust, TrustState
from .voting import AffineOvertrust, VotingRightsMatrix

__all__ = ["PipelineState", "ScoringPipeline", "run_pipeline",
           "parse_pipeline_config", "serialize_pipeline_config",
           "parse_generative_config", "STAGE_KEYS", "STAGE_REGISTRY",
           "SCALING_REGISTRY", "register_scaling"]

STAGE_KEYS = ("trust_propagation", "voting_rights", "preference_learning",
              "scaling", "aggregation", "post_process")

SCALING_REGISTRY: dict[str, type] = {
    "Mehestan": Mehestan,
    "QuantileZeroShift": QuantileZeroShift,
}

STAGE_REGISTRY: dict[str, dict[str, type]] = {
    "trust_propagation": {"LipschiTrust": LipschiTrust},
    "voting_rights": {"AffineOvertrust": AffineOvertrust},
    "preference_learning": {"UniformGBT": UniformGBT},
    "scaling": {"ScalingCompose": ScalingCompose, **SCALING_REGISTRY},
    "aggregation": {"QuantileStandardizedQrMedian": QuantileStandardizedQrMedian},
    "post_process": {"Squash": Squash},
}


def register_scaling(name: str, cls: type) -> None:
    """Make an extra scaling step available to config files."""
    SCALING_REGISTRY[name] = cls
    STAGE_REGISTRY["scaling"][name] = cls


@dataclass
class PipelineState:
    """Dataset plus every artifact the stages produce along the way."""

    dataset: ComparisonDataset
    trust_state: TrustState | None = None
    voting_rights: VotingRightsMatrix | None = None
    raw_models: dict[str, UserModel] | None = None
    scaler_set: Any = None
    scaling_params: dict | None = None
    scaled_models: dict[str, UserModel] | None = None
    zero_shift: float | None = None
    sigma_scaled: float | None = None
    standardized_models: dict[str, UserModel] | None = None
    global_scores: GlobalScores | None = None


def _construct(cls: type, params: Mapping[str, Any], context: str):
    signature = inspect.signature(cls.__init__)
    allowed = set(signature.parameters) - {"self"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown parameter(s) {sorted(unknown)}")
    stage = cls(**params)
    validate = getattr(stage, "_validate", None)
    if validate is not None:
        validate()
    return stage


def _parse_stage(key: str, entry, registry: Mapping[str, type]):
    if not (isinstance(entry, (list, tuple)) and len(entry) in (1, 2)
            and isinstance(entry[0], str)):
        raise ConfigError(f"{key}: expected [name, params], got {entry!r}")
    name = entry[0]
    payload = entry[1] if len(entry) == 2 else {}
    if name not in registry:
        raise ConfigError(f"{key}: unknown algorithm {name!r}")
    cls = registry[name]
    if name == "ScalingCompose":
        if not isinstance(payload, list):
            raise ConfigError("ScalingCompose expects a list of scaling steps")
        steps = [_parse_stage("scaling", step, SCALING_REGISTRY)
                 for step in payload]
        return ScalingCompose(scalings=steps)
    if not isinstance(payload, Mapping):
        raise ConfigError(f"{key}: parameters must be a mapping")
    return _construct(cls, payload, f"{key}/{name}")


def _stage_name(stage) -> str:
    return type(stage).__name__


def _serialize_stage(stage):
    if isinstance(stage, ScalingCompose):
        return ["ScalingCompose", [_serialize_stage(s) for s in stage.steps()]]
    return [_stage_name(stage), dict(stage.get_params())]


def parse_pipeline_config(mapping: Mapping[str, Any]) -> "ScoringPipeline":
    """Build a pipeline from the config mapping, validating names and ranges."""
    if not isinstance(mapping, Mapping):
        raise ConfigError("pipeline config must be a mapping")
    unknown = set(mapping) - set(STAGE_KEYS)
    if unknown:
        raise ConfigError(f"unknown pipeline stage(s) {sorted(unknown)}")
    stages = {}
    for key in STAGE_KEYS:
        if key in mapping:
            stages[key] = _parse_stage(key, mapping[key], STAGE_REGISTRY[key])
    return ScoringPipeline(**stages)


def serialize_pipeline_config(pipeline: "ScoringPipeline") -> dict[str, Any]:
    return {key: _serialize_stage(stage)
            for key, stage in pipeline.stages().items()}


class ScoringPipeline(BaseEstimator):
    """Six-stage scoring pipeline, itself an estimator over its stages."""

    def __init__(self, trust_propagation=None, voting_rights=None,
                 preference_learning=None, scaling=None, aggregation=None,
                 post_process=None):
        self.trust_propagation = trust_propagation
        self.voting_rights = voting_rights
        self.preference_learning = preference_learning
        self.scaling = scaling
        self.aggregation = aggregation
        self.post_process = post_process

    def stages(self) -> dict[str, Any]:
        defaults = {
            "trust_propagation": LipschiTrust,
            "voting_rights": AffineOvertrust,
            "preference_learning": UniformGBT,
            "scaling": ScalingCompose,
            "aggregation": QuantileStandardizedQrMedian,
            "post_process": Squash,
        }
        resolved = {}
        for key in STAGE_KEYS:
            stage = getattr(self, key)
            resolved[key] = defaults[key]() if stage is None else stage
        return resolved

    def run(self, dataset: ComparisonDataset) -> PipelineState:
        """Execute all stages in order; failures carry the stage name."""
        state = PipelineState(dataset=dataset)
        for key, stage in self.stages().items():
            try:
                state = stage(state)
            except (ConfigError,):
                raise
            except StageError:
                raise
            except Exception as exc:
                raise StageError(key, exc) from exc
        return state

    def fit(self, dataset: ComparisonDataset) -> "ScoringPipeline":
        self.state_ = self.run(dataset)
        return self

    @classmethod
    def from_config(cls, mapping: Mapping[str, Any]) -> "ScoringPipeline":
        return parse_pipeline_config(mapping)

    def to_config(self) -> dict[str, Any]:
        return serialize_pipeline_config(self)


def run_pipeline(dataset: ComparisonDataset,
                 pipeline: ScoringPipeline | Mapping[str, Any] | None = None
                 ) -> PipelineState:
    """Run the whole pipeline on a dataset; accepts a config mapping too."""
    if pipeline is None:
        pipeline = ScoringPipeline()
    elif isinstance(pipeline, Mapping):
        pipeline = parse_pipeline_config(pipeline)
    return pipeline.run(dataset)


_GENERATIVE_COMPONENTS = {
    "user_model": ("NormalUserModel",),
    "vouch_model": ("ErdosRenyiVouchModel",),
    "entity_model": ("NormalEntityModel",),
    "engagement_model": ("SimpleEngagementModel",),
    "comparison_model": ("KnaryGBT",),
}

_USER_MODEL_KEYS = {"p_trustworthy", "p_pretrusted", "zipf_vouch",
                    "zipf_compare", "poisson_compare",
                    "n_comparisons_per_entity", "multiplicator_std_dev",
                    "svd_mean", "engagement_bias_std_dev"}


def _component(mapping, key):
    entry = mapping.get(key)
    if entry is None:
        return None, {}
    if not (isinstance(entry, (list, tuple)) and len(entry) in (1, 2)
            and isinstance(entry[0], str)):
        raise ConfigError(f"{key}: expected [name, params], got {entry!r}")
    name = entry[0]
    if name not in _GENERATIVE_COMPONENTS[key]:
        raise ConfigError(f"{key}: unknown model {name!r}")
    params = entry[1] if len(entry) == 2 else {}
    if not isinstance(params, Mapping):
        raise ConfigError(f"{key}: parameters must be a mapping")
    return name, dict(params)


def parse_generative_config(mapping: Mapping[str, Any], n_users: int,
                            n_entities: int, seed: int = 0) -> GenerativeConfig:
    """Flatten the component-style generative config into one record."""
    if not isinstance(mapping, Mapping):
        raise ConfigError("generative config must be a mapping")
    unknown = set(mapping) - set(_GENERATIVE_COMPONENTS)
    if unknown:
        raise ConfigError(f"unknown generative component(s) {sorted(unknown)}")
    _, user_params = _component(mapping, "user_model")
    bad = set(user_params) - _USER_MODEL_KEYS
    if bad:
        raise ConfigError(f"user_model: unknown parameter(s) {sorted(bad)}")
    _component(mapping, "vouch_model")
    _, entity_params = _component(mapping, "entity_model")
    if set(entity_params) - {"mean"}:
        raise ConfigError("entity_model accepts only 'mean'")
    _, engagement_params = _component(mapping, "engagement_model")
    if set(engagement_params) - {"p_per_criterion", "p_private"}:
        raise ConfigError("engagement_model accepts only p_per_criterion/p_private")
    _, comparison_params = _component(mapping, "comparison_model")
    if set(comparison_params) - {"n_options", "comparison_max"}:
        raise ConfigError("comparison_model accepts only n_options/comparison_max")

    kwargs: dict[str, Any] = dict(user_params)
    if "svd_mean" in kwargs:
        kwargs["svd_mean"] = tuple(float(v) for v in kwargs["svd_mean"])
    if "mean" in entity_params:
        kwargs["entity_mean"] = tuple(float(v) for v in entity_params["mean"])
    if "p_private" in engagement_params:
        kwargs["p_private"] = engagement_params["p_private"]
    if "n_options" in comparison_params:
        kwargs["n_options"] = int(comparison_params["n_options"])
    if "comparison_max" in comparison_params:
        kwargs["comparison_max"] = float(comparison_params["comparison_max"])
    return GenerativeConfig(n_users=n_users, n_entities=n_entities,
                            seed=seed, **kwargs)
