"""Command line interface: generate, run, experiment, stats."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import io
from .errors import ConfigError, DataError, StageError
from .experiment import ExperimentConfig, run_experiment, stats
from .generative import generate_dataset
from .pipeline import parse_generative_config, parse_pipeline_config

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_CONFIG_ERROR = 2


def _load_json(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def _cmd_generate(args) -> int:
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise ConfigError("generation config must be a JSON object")
    generative = parse_generative_config(
        config.get("generative_model", {}),
        n_users=int(config.get("n_users", args.n_users)),
        n_entities=int(config.get("n_entities", args.n_entities)),
        seed=args.seed if args.seed is not None else int(config.get("seed", 0)))
    dataset, truth = generate_dataset(generative)
    out = Path(args.out)
    io.write_dataset(out, dataset)
    io.write_ground_truth(out / io.GROUND_TRUTH_FILE, truth)
    print(f"wrote {len(dataset.users())} users, "
          f"{len(dataset.vouches)} vouches, "
          f"{sum(len(v) for v in dataset.comparisons.values())} comparisons "
          f"to {out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = _load_json(args.config)
    if isinstance(config, dict) and "pipeline" in config:
        config = config["pipeline"]
    pipeline = parse_pipeline_config(config)
    dataset = io.load_dataset(args.data, r_max=args.r_max)
    state = pipeline.run(dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if state.global_scores is not None:
        io.write_global_scores(out / io.GLOBAL_SCORES_FILE, state.global_scores)
        io.write_user_scores(out / io.USER_SCORES_FILE,
                             state.standardized_models or {},
                             state.global_scores.user_display)
    if state.voting_rights is not None:
        io.write_voting_rights(out / io.VOTING_RIGHTS_FILE,
                               state.voting_rights)
    n_entities = len(state.global_scores.rho) if state.global_scores else 0
    print(f"scored {n_entities} entities; outputs in {out}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_mapping(_load_json(args.config))
    result = run_experiment(config)
    io.write_results_csv(args.out, result.cells)
    print(f"wrote {len(result.cells)} grid cells to {args.out}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    scores_dir = Path(args.scores)
    if args.by == "raters":
        rows = io.read_global_scores(scores_dir / io.GLOBAL_SCORES_FILE)
        values = {entity: display for entity, _, display, _, _ in rows}
        counts = {entity: n for entity, _, _, n, _ in rows}
    else:
        user_rows = io.read_user_scores(scores_dir / io.USER_SCORES_FILE)
        if args.data is None:
            raise ConfigError("--by comparisons requires --data")
        comparisons = io.read_comparisons_csv(
            Path(args.data) / io.COMPARISONS_FILE)
        counts: dict = {}
        for user, a, b, _, _ in comparisons:
            counts[(user, a)] = counts.get((user, a), 0) + 1
            counts[(user, b)] = counts.get((user, b), 0) + 1
        values = {(user, entity): display
                  for user, entity, _, display, _, _ in user_rows}
    table = stats(values, counts, args.by)
    writer = csv.writer(sys.stdout if args.out is None
                        else open(args.out, "w", newline=""))
    writer.writerow(["bucket", "bin_left", "bin_right", "count"])
    for row in table:
        writer.writerow([row.bucket, row.bin_left, row.bin_right, row.count])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collabscore",
        description="Collaborative scoring pipeline and experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-users", type=int, default=30)
    p.add_argument("--n-entities", type=int, default=50)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="run the pipeline on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--r-max", type=float, default=10.0)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("experiment", help="run a seeded grid sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("stats", help="histogram display scores by activity")
    p.add_argument("--scores", required=True,
                   help="directory written by 'run'")
    p.add_argument("--by", choices=["comparisons", "raters"], required=True)
    p.add_argument("--data", default=None,
                   help="dataset directory (needed for --by comparisons)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except StageError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
