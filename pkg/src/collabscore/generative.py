"""Synthetic community generator for pipeline evaluation.

Users carry a latent preference vector; trustworthy users cluster
around a shared direction while untrustworthy users sit exactly
opposite it, so the two camps judge entities in reverse. Vouches form
within each camp with activity-dependent rates, engagement follows a
noisy (optionally biased) pick of favorite entities, and comparisons
are sampled from a discrete exponential-family law over an odd grid of
judgment values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import ComparisonDataset
from .errors import ConfigError

__all__ = ["GenerativeConfig", "GroundTruth", "generate_users",
           "generate_vouches", "generate_entities", "generate_engagement",
           "sample_comparison_knary", "generate_dataset"]


@dataclass(frozen=True)
class GenerativeConfig:
    n_users: int
    n_entities: int
    p_trustworthy: float = 0.8
    p_pretrusted: float = 0.2
    zipf_vouch: float = 2.0
    zipf_compare: float = 1.5
    poisson_compare: float = 30.0
    n_comparisons_per_entity: float = 3.0
    multiplicator_std_dev: float = 1.0
    svd_mean: tuple[float, ...] = (3.0, 0.0)
    engagement_bias_std_dev: float = 0.0
    entity_mean: tuple[float, ...] | None = None
    p_private: float = 0.2
    n_options: int = 21
    comparison_max: float = 10.0
    seed: int = 0

    def __post_init__(self):
        for name in ("p_trustworthy", "p_pretrusted", "p_private"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.n_users < 0 or self.n_entities < 0:
            raise ConfigError("n_users and n_entities must be >= 0")
        if not (self.zipf_vouch > 1.0 and self.zipf_compare > 1.0):
            raise ConfigError("zipf exponents must be > 1")
        if not self.poisson_compare > 0.0:
            raise ConfigError("poisson_compare must be > 0")
        if not self.n_comparisons_per_entity > 0.0:
            raise ConfigError("n_comparisons_per_entity must be > 0")
        if self.multiplicator_std_dev < 0.0 or self.engagement_bias_std_dev < 0.0:
            raise ConfigError("standard deviations must be >= 0")
        if len(self.svd_mean) < 1:
            raise ConfigError("svd_mean must have dimension >= 1")
        if self.entity_mean is not None and len(self.entity_mean) != len(self.svd_mean):
            raise ConfigError("entity_mean dimension must match svd_mean")
        if self.n_options < 3 or self.n_options % 2 == 0:
            raise ConfigError("n_options must be odd and >= 3")
        if not self.comparison_max > 0.0:
            raise ConfigError("comparison_max must be > 0")

    @property
    def dim(self) -> int:
        return len(self.svd_mean)


@dataclass
class GroundTruth:
    """Latent state behind a synthetic dataset."""

    svd_mean: tuple[float, ...]
    user_svd: dict[str, np.ndarray] = field(default_factory=dict)
    trustworthy: dict[str, bool] = field(default_factory=dict)
    pretrusted: dict[str, bool] = field(default_factory=dict)
    engagement_bias: dict[str, float] = field(default_factory=dict)
    multiplier: dict[str, float] = field(default_factory=dict)
    vouch_activity: dict[str, int] = field(default_factory=dict)
    compare_activity: dict[str, int] = field(default_factory=dict)
    entity_svd: dict[str, np.ndarray] = field(default_factory=dict)

    def users(self) -> list[str]:
        return sorted(self.user_svd)

    def entities(self) -> list[str]:
        return sorted(self.entity_svd)

    def true_score(self, user: str, entity: str) -> float:
        return float(self.user_svd[user] @ self.entity_svd[entity])

    def true_global_score(self, entity: str) -> float:
        return float(np.asarray(self.svd_mean) @ self.entity_svd[entity])


def _user_ids(n: int) -> list[str]:
    width = max(1, len(str(max(n - 1, 0))))
    return [f"u{i:0{width}d}" for i in range(n)]


def _entity_ids(n: int) -> list[str]:
    width = max(1, len(str(max(n - 1, 0))))
    return [f"e{i:0{width}d}" for i in range(n)]


def generate_users(config: GenerativeConfig, rng: np.random.Generator) -> GroundTruth:
    """Draw user flags, latent vectors, activities, biases and multipliers."""
    truth = GroundTruth(svd_mean=tuple(config.svd_mean))
    mean = np.asarray(config.svd_mean, dtype=float)
    for user in _user_ids(config.n_users):
        trustworthy = bool(rng.random() < config.p_trustworthy)
        pretrusted = trustworthy and bool(rng.random() < config.p_pretrusted)
        if trustworthy:
            vec = mean + rng.standard_normal(config.dim)
        else:
            vec = -mean.copy()
        truth.user_svd[user] = vec
        truth.trustworthy[user] = trustworthy
        truth.pretrusted[user] = pretrusted
        truth.vouch_activity[user] = int(rng.zipf(config.zipf_vouch))
        truth.compare_activity[user] = int(rng.zipf(config.zipf_compare))
        truth.engagement_bias[user] = float(
            rng.normal(0.0, config.engagement_bias_std_dev))
        truth.multiplier[user] = float(
            math.exp(rng.normal(0.0, config.multiplicator_std_dev)))
    return truth


def generate_vouches(truth: GroundTruth, config: GenerativeConfig,
                     rng: np.random.Generator) -> list[tuple[str, str]]:
    """Independent within-camp vouches with activity-proportional rates."""
    users = truth.users()
    groups = {
        True: [u for u in users if truth.trustworthy[u]],
        False: [u for u in users if not truth.trustworthy[u]],
    }
    vouches = []
    for flag in (True, False):
        group = groups[flag]
        size = len(group)
        if size < 2:
            continue
        for voucher in group:
            activity = min(truth.vouch_activity[voucher], size)
            rate = min(1.0, activity / size)
            draws = rng.random(size)
            for vouchee, draw in zip(group, draws):
                if vouchee != voucher and draw < rate:
                    vouches.append((voucher, vouchee))
    return vouches


def generate_entities(config: GenerativeConfig,
                      rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Independent latent vectors, standard normal around the entity mean."""
    mean = np.zeros(config.dim) if config.entity_mean is None \
        else np.asarray(config.entity_mean, dtype=float)
    return {
        entity: mean + rng.standard_normal(config.dim)
        for entity in _entity_ids(config.n_entities)
    }


def generate_engagement(truth: GroundTruth, config: GenerativeConfig,
                        rng: np.random.Generator):
    """Pick engaged entities, privacy flags and comparison pairs per user.

    Engagement ranks entities by ``bias * true score + noise`` and keeps
    the top k, with k Poisson-distributed and truncated to [1, E]. Pairs
    among the engaged entities are kept independently with a rate
    targeting the configured mean comparisons per entity.
    """
    entities = truth.entities()
    scores = {e: truth.entity_svd[e] for e in entities}
    engaged: dict[str, list[str]] = {}
    private: dict[str, set[str]] = {}
    pairs: dict[str, list[tuple[str, str]]] = {}
    for user in truth.users():
        k = int(rng.poisson(config.poisson_compare))
        k = max(1, min(config.n_entities, k))
        bias = truth.engagement_bias[user]
        noise = rng.standard_normal(len(entities))
        engagement = np.array([
            bias * truth.true_score(user, e) for e in entities]) + noise
        order = np.argsort(-engagement, kind="stable")
        chosen = sorted(entities[i] for i in order[:k])
        engaged[user] = chosen
        flips = rng.random(len(chosen))
        private[user] = {e for e, f in zip(chosen, flips)
                         if f < config.p_private}
        user_pairs = []
        if len(chosen) > 1:
            rate = min(1.0, config.n_comparisons_per_entity / (len(chosen) - 1))
            draws = rng.random((len(chosen), len(chosen)))
            for i in range(len(chosen)):
                for j in range(i + 1, len(chosen)):
                    if draws[i, j] < rate:
                        user_pairs.append((chosen[i], chosen[j]))
        pairs[user] = user_pairs
    return engaged, private, pairs


def comparison_grid(n_options: int, r_max: float) -> np.ndarray:
    return np.linspace(-r_max, r_max, n_options)


def sample_comparison_knary(theta_diff: float, n_options: int, r_max: float,
                            rng: np.random.Generator) -> float:
    """Draw a judgment from the discrete comparison law on the value grid.

    Probabilities are proportional to ``exp(-theta_diff * r / r_max)``:
    the higher the first entity's true score, the more negative (more
    favorable to it) the sampled judgment tends to be.
    """
    grid = comparison_grid(n_options, r_max)
    logits = -theta_diff * grid / r_max
    logits -= logits.max()
    weights = np.exp(logits)
    weights /= weights.sum()
    return float(rng.choice(grid, p=weights))


def generate_dataset(config: GenerativeConfig) -> tuple[ComparisonDataset, GroundTruth]:
    """Full synthetic draw: users, vouches, entities, engagement, comparisons."""
    rng = np.random.default_rng(config.seed)
    truth = generate_users(config, rng)
    vouches = generate_vouches(truth, config, rng)
    truth.entity_svd = generate_entities(config, rng)
    engaged, private, pairs = generate_engagement(truth, config, rng)

    dataset = ComparisonDataset(r_max=config.comparison_max)
    for user in truth.users():
        dataset.add_user(user, pretrusted=truth.pretrusted[user])
    for voucher, vouchee in vouches:
        dataset.add_vouch(voucher, vouchee)
    for user in truth.users():
        mult = truth.multiplier[user]
        for e, f in pairs[user]:
            theta_diff = mult * (truth.true_score(user, e)
                                 - truth.true_score(user, f))
            r = sample_comparison_knary(theta_diff, config.n_options,
                                        config.comparison_max, rng)
            is_private = e in private[user] and f in private[user]
            dataset.add_comparison(user, e, f, r, private=is_private)
    return dataset, truth
