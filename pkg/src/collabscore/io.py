"""CSV interchange for datasets, scores and results."""

from __future__ import annotations

import csv
from pathlib import Path

from .aggregation import GlobalScores
from .dataset import ComparisonDataset
from .errors import DataError
from .generative import GroundTruth
from .preference import UserModel
from .voting import VotingRightsMatrix

USERS_FILE = "users.csv"
VOUCHES_FILE = "vouches.csv"
COMPARISONS_FILE = "comparisons.csv"
GROUND_TRUTH_FILE = "ground_truth.csv"
GLOBAL_SCORES_FILE = "global_scores.csv"
USER_SCORES_FILE = "user_scores.csv"
VOTING_RIGHTS_FILE = "voting_rights.csv"


def _fmt(value: float) -> str:
    return repr(float(value))


def _read_rows(path: Path, expected_header: list[str]):
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != expected_header:
            raise DataError(
                f"{path}: expected header {','.join(expected_header)!r}, "
                f"got {header!r}")
        return list(reader)


def read_pretrust_csv(path) -> dict[str, bool]:
    users = {}
    for row in _read_rows(Path(path), ["user", "pretrusted"]):
        if len(row) != 2 or row[1] not in ("0", "1"):
            raise DataError(f"{path}: bad pretrust row {row!r}")
        users[row[0]] = row[1] == "1"
    return users


def read_vouches_csv(path) -> list[tuple[str, str]]:
    vouches = []
    for row in _read_rows(Path(path), ["voucher", "vouchee"]):
        if len(row) != 2:
            raise DataError(f"{path}: bad vouch row {row!r}")
        vouches.append((row[0], row[1]))
    return vouches


def read_comparisons_csv(path):
    rows = []
    for row in _read_rows(Path(path),
                          ["user", "entity_a", "entity_b", "comparison",
                           "privacy"]):
        if len(row) != 5 or row[4] not in ("public", "private"):
            raise DataError(f"{path}: bad comparison row {row!r}")
        try:
            value = float(row[3])
        except ValueError as exc:
            raise DataError(f"{path}: bad comparison value {row[3]!r}") from exc
        rows.append((row[0], row[1], row[2], value, row[4] == "private"))
    return rows


def load_dataset(directory, r_max: float = 10.0) -> ComparisonDataset:
    directory = Path(directory)
    dataset = ComparisonDataset(r_max=r_max)
    for user, pretrusted in read_pretrust_csv(directory / USERS_FILE).items():
        dataset.add_user(user, pretrusted)
    for voucher, vouchee in read_vouches_csv(directory / VOUCHES_FILE):
        dataset.add_vouch(voucher, vouchee)
    for user, a, b, value, private in read_comparisons_csv(
            directory / COMPARISONS_FILE):
        dataset.add_comparison(user, a, b, value, private)
    return dataset


def write_dataset(directory, dataset: ComparisonDataset) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / USERS_FILE, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["user", "pretrusted"])
        for user in dataset.users():
            writer.writerow([user, int(dataset.pretrusted.get(user, False))])
    with open(directory / VOUCHES_FILE, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["voucher", "vouchee"])
        for voucher, vouchee in sorted(dataset.vouches):
            writer.writerow([voucher, vouchee])
    with open(directory / COMPARISONS_FILE, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["user", "entity_a", "entity_b", "comparison",
                         "privacy"])
        for user in sorted(dataset.comparisons):
            for c in dataset.comparisons[user]:
                writer.writerow([user, c.entity_a, c.entity_b, _fmt(c.value),
                                 "private" if c.private else "public"])


def write_ground_truth(path, truth: GroundTruth) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["entity", "true_global_score"])
        for entity in truth.entities():
            writer.writerow([entity, _fmt(truth.true_global_score(entity))])


def read_ground_truth(path) -> dict[str, float]:
    truth = {}
    for row in _read_rows(Path(path), ["entity", "true_global_score"]):
        truth[row[0]] = float(row[1])
    return truth


def write_global_scores(path, scores: GlobalScores) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["entity", "rho", "rho_display", "n_raters",
                         "total_voting_right"])
        for entity in scores.entities():
            writer.writerow([
                entity, _fmt(scores.rho[entity]),
                _fmt(scores.rho_display.get(entity, 0.0)),
                scores.n_raters.get(entity, 0),
                _fmt(scores.total_voting_right.get(entity, 0.0)),
            ])


def read_global_scores(path):
    rows = []
    for row in _read_rows(Path(path),
                          ["entity", "rho", "rho_display", "n_raters",
                           "total_voting_right"]):
        rows.append((row[0], float(row[1]), float(row[2]), int(row[3]),
                     float(row[4])))
    return rows


def write_user_scores(path, models: dict[str, UserModel],
                      display: dict[tuple[str, str], float]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["user", "entity", "score_standardized", "display",
                         "unc_left", "unc_right"])
        for user in sorted(models):
            model = models[user]
            for entity in model.entities():
                writer.writerow([
                    user, entity, _fmt(model.scores[entity]),
                    _fmt(display.get((user, entity), 0.0)),
                    _fmt(model.unc_left[entity]),
                    _fmt(model.unc_right[entity]),
                ])


def read_user_scores(path):
    rows = []
    for row in _read_rows(Path(path),
                          ["user", "entity", "score_standardized", "display",
                           "unc_left", "unc_right"]):
        rows.append((row[0], row[1], float(row[2]), float(row[3]),
                     float(row[4]), float(row[5])))
    return rows


def write_voting_rights(path, rights: VotingRightsMatrix) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["user", "entity", "voting_right",
                         "min_voting_right"])
        for (user, entity) in sorted(rights.rights):
            writer.writerow([
                user, entity, _fmt(rights.rights[(user, entity)]),
                _fmt(rights.min_voting_right[entity]),
            ])


def write_results_csv(path, rows) -> None:
    """Experiment grid results: one row per (xvalue, zvalue) cell."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["xvalue", "zvalue", "mean_correlation",
                         "std_correlation", "n_seeds"])
        for row in rows:
            writer.writerow([_fmt(row.xvalue), _fmt(row.zvalue),
                             _fmt(row.mean_correlation),
                             _fmt(row.std_correlation), row.n_seeds])
