"""Seeded experiment sweeps, the accuracy metric and score statistics."""

from __future__ import annotations

import copy
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError
from .generative import generate_dataset
from .pipeline import parse_generative_config, parse_pipeline_config

__all__ = ["ExperimentConfig", "CellResult", "ExperimentResult",
           "correlation", "patch_config", "resolve_config_path",
           "run_experiment", "stats"]


def correlation(global_scores: Mapping[str, float],
                ground_truth: Mapping[str, float]) -> float:
    """Pearson correlation between aggregated and true entity scores.

    Degenerate inputs (fewer than two shared entities, or zero variance
    on either side) yield 0 with a warning instead of failing a sweep.
    """
    shared = sorted(set(global_scores) & set(ground_truth))
    if len(shared) < 2:
        warnings.warn("correlation needs at least two scored entities")
        return 0.0
    a = np.array([global_scores[e] for e in shared])
    b = np.array([ground_truth[e] for e in shared])
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        warnings.warn("correlation undefined under zero variance")
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid sweep description with nested generative and pipeline configs."""

    xparameter: str
    xvalues: tuple
    zparameter: str
    zvalues: tuple
    n_users: int
    n_entities: int
    n_seeds: int
    generative_model: dict
    pipeline: dict
    title: str = ""
    ylegend: str = ""
    xlegend: str = ""
    zlegends: tuple = ()

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ExperimentConfig":
        required = ("xparameter", "xvalues", "zparameter", "zvalues",
                    "n_users", "n_entities", "n_seeds", "generative_model",
                    "pipeline")
        missing = [key for key in required if key not in mapping]
        if missing:
            raise ConfigError(f"experiment config missing {missing}")
        config = cls(
            xparameter=mapping["xparameter"],
            xvalues=tuple(mapping["xvalues"]),
            zparameter=mapping["zparameter"],
            zvalues=tuple(mapping["zvalues"]),
            n_users=int(mapping["n_users"]),
            n_entities=int(mapping["n_entities"]),
            n_seeds=int(mapping["n_seeds"]),
            generative_model=dict(mapping["generative_model"]),
            pipeline=dict(mapping["pipeline"]),
            title=mapping.get("title", ""),
            ylegend=mapping.get("ylegend", ""),
            xlegend=mapping.get("xlegend", ""),
            zlegends=tuple(mapping.get("zlegends", ())),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        base = self._base_config()
        for parameter in (self.xparameter, self.zparameter):
            resolve_config_path(base, parameter)
        parse_pipeline_config(self.pipeline)
        parse_generative_config(self.generative_model, self.n_users,
                                self.n_entities)

    def _base_config(self) -> dict:
        return {"generative_model": copy.deepcopy(self.generative_model),
                "pipeline": copy.deepcopy(self.pipeline)}


def _descend(node, key: str, path: str):
    # [name, payload] pairs descend into the payload; the literal key
    # "scalings" names a compose list, and digits index into lists.
    if isinstance(node, (list, tuple)) and len(node) == 2 \
            and isinstance(node[0], str):
        payload = node[1]
        if isinstance(payload, Mapping):
            if key not in payload:
                raise ConfigError(f"cannot resolve {key!r} in {path!r}")
            return payload, key
        if isinstance(payload, list):
            if key == "scalings":
                return payload, None
            raise ConfigError(f"cannot resolve {key!r} in {path!r}")
    if isinstance(node, Mapping):
        if key not in node:
            raise ConfigError(f"cannot resolve {key!r} in {path!r}")
        return node, key
    if isinstance(node, list):
        try:
            index = int(key)
            node[index]
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"cannot resolve {key!r} in {path!r}") from exc
        return node, index
    raise ConfigError(f"cannot resolve {key!r} in {path!r}")


def resolve_config_path(config: dict, path: str):
    """Container and final key addressed by a dotted config path."""
    keys = path.split(".")
    node = config
    container, final = None, None
    for key in keys:
        if container is not None:
            node = container[final]
        container, index = _descend(node, key, path)
        if index is None:
            # transparent hop (e.g. "scalings"): stay on the list itself
            node = container
            container, final = None, None
            continue
        final = index
    if container is None:
        raise ConfigError(f"path {path!r} does not address a value")
    return container, final


def patch_config(config: dict, path: str, value) -> dict:
    container, key = resolve_config_path(config, path)
    container[key] = value
    return config


@dataclass(frozen=True)
class CellResult:
    xvalue: float
    zvalue: float
    mean_correlation: float
    std_correlation: float
    n_seeds: int
    correlations: tuple = ()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cells: list[CellResult] = field(default_factory=list)

    def cell(self, xvalue, zvalue) -> CellResult:
        for row in self.cells:
            if row.xvalue == xvalue and row.zvalue == zvalue:
                return row
        raise KeyError((xvalue, zvalue))


def run_single(config: dict, n_users: int, n_entities: int,
               seed: int) -> float:
    """One seeded generate-plus-pipeline pass, reduced to the metric."""
    generative = parse_generative_config(config["generative_model"], n_users,
                                         n_entities, seed)
    dataset, truth = generate_dataset(generative)
    pipeline = parse_pipeline_config(config["pipeline"])
    state = pipeline.run(dataset)
    scores = state.global_scores.rho if state.global_scores else {}
    ground = {e: truth.true_global_score(e) for e in truth.entities()}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return correlation(scores, ground)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Sweep the (x, z) grid, n_seeds seeded runs per cell.

    Every run re-derives its own patched config, so cells are
    independent and any execution order gives identical results.
    """
    config.validate()
    result = ExperimentResult(config=config)
    for xvalue in config.xvalues:
        for zvalue in config.zvalues:
            correlations = []
            for seed in range(config.n_seeds):
                patched = config._base_config()
                patch_config(patched, config.xparameter, xvalue)
                patch_config(patched, config.zparameter, zvalue)
                correlations.append(run_single(patched, config.n_users,
                                               config.n_entities, seed))
            arr = np.array(correlations)
            result.cells.append(CellResult(
                xvalue=float(xvalue), zvalue=float(zvalue),
                mean_correlation=float(arr.mean()),
                std_correlation=float(arr.std()),
                n_seeds=config.n_seeds,
                correlations=tuple(correlations)))
    return result


_COUNT_BUCKETS = ((1, 1, "1"), (2, 2, "2"), (3, 3, "3"), (4, 7, "4-7"),
                  (8, 15, "8-15"), (16, None, "16+"))
_BIN_EDGES = np.linspace(-100.0, 100.0, 21)


def _bucket_label(count: int) -> str:
    for lo, hi, label in _COUNT_BUCKETS:
        if count >= lo and (hi is None or count <= hi):
            return label
    return "0"


@dataclass(frozen=True)
class StatsRow:
    bucket: str
    bin_left: float
    bin_right: float
    count: int


def stats(values: Mapping, counts: Mapping, by: str) -> list[StatsRow]:
    """Histogram of display scores, grouped by participation volume.

    ``values`` maps keys to display scores, ``counts`` maps the same keys
    to rater or comparison counts (``by`` is just the grouping label).
    """
    if by not in ("comparisons", "raters"):
        raise ConfigError(f"unknown bucketing {by!r}")
    grouped: dict[str, list[float]] = {}
    for key, value in values.items():
        label = _bucket_label(int(counts.get(key, 0)))
        grouped.setdefault(label, []).append(float(value))
    rows = []
    for label in sorted(grouped):
        hist, _ = np.histogram(np.clip(grouped[label], -100.0, 100.0),
                               bins=_BIN_EDGES)
        for left, right, count in zip(_BIN_EDGES[:-1], _BIN_EDGES[1:], hist):
            if count > 0:
                rows.append(StatsRow(label, float(left), float(right),
                                     int(count)))
    return rows
