"""Command line round trips, file formats and exit codes."""

import csv
import json
from pathlib import Path

import pytest

from collabscore import ComparisonDataset, generate_dataset, GenerativeConfig
from collabscore.cli import main
from collabscore import io

CONFIG_DIR = Path(__file__).parent.parent / "configs"


@pytest.fixture
def gen_config(tmp_path):
    mapping = json.loads((CONFIG_DIR / "resilience.json").read_text())
    config = {
        "n_users": 12,
        "n_entities": 10,
        "seed": 0,
        "generative_model": mapping["generative_model"],
    }
    config["generative_model"]["user_model"][1]["poisson_compare"] = 6.0
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(config))
    return path


@pytest.fixture
def pipeline_config(tmp_path):
    mapping = json.loads((CONFIG_DIR / "resilience.json").read_text())
    path = tmp_path / "pipeline.json"
    path.write_text(json.dumps({"pipeline": mapping["pipeline"]}))
    return path


def read_text(path):
    return Path(path).read_text()


class TestGenerateRunStats:
    def test_full_round_trip(self, tmp_path, gen_config, pipeline_config):
        data_dir = tmp_path / "data"
        out_dir = tmp_path / "out"
        assert main(["generate", "--config", str(gen_config),
                     "--out", str(data_dir)]) == 0
        for name in (io.USERS_FILE, io.VOUCHES_FILE, io.COMPARISONS_FILE,
                     io.GROUND_TRUTH_FILE):
            assert (data_dir / name).exists()

        assert main(["run", "--data", str(data_dir), "--config",
                     str(pipeline_config), "--out", str(out_dir)]) == 0
        assert (out_dir / io.GLOBAL_SCORES_FILE).exists()
        assert (out_dir / io.USER_SCORES_FILE).exists()
        assert (out_dir / io.VOTING_RIGHTS_FILE).exists()

        with open(out_dir / io.GLOBAL_SCORES_FILE) as handle:
            header = next(csv.reader(handle))
        assert header == ["entity", "rho", "rho_display", "n_raters",
                          "total_voting_right"]

        assert main(["stats", "--scores", str(out_dir), "--by", "raters",
                     "--out", str(tmp_path / "hist.csv")]) == 0
        assert main(["stats", "--scores", str(out_dir), "--by", "comparisons",
                     "--data", str(data_dir),
                     "--out", str(tmp_path / "hist2.csv")]) == 0
        assert (tmp_path / "hist.csv").exists()

    def test_rerun_byte_stable(self, tmp_path, gen_config, pipeline_config):
        data_dir = tmp_path / "data"
        main(["generate", "--config", str(gen_config), "--out", str(data_dir)])
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", "--data", str(data_dir), "--config",
              str(pipeline_config), "--out", str(out_a)])
        main(["run", "--data", str(data_dir), "--config",
              str(pipeline_config), "--out", str(out_b)])
        for name in (io.GLOBAL_SCORES_FILE, io.USER_SCORES_FILE,
                     io.VOTING_RIGHTS_FILE):
            assert read_text(out_a / name) == read_text(out_b / name)

    def test_generate_deterministic_per_seed(self, tmp_path, gen_config):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["generate", "--config", str(gen_config), "--out", str(a),
              "--seed", "5"])
        main(["generate", "--config", str(gen_config), "--out", str(b),
              "--seed", "5"])
        for name in (io.USERS_FILE, io.VOUCHES_FILE, io.COMPARISONS_FILE,
                     io.GROUND_TRUTH_FILE):
            assert read_text(a / name) == read_text(b / name)


class TestExperimentCommand:
    def test_small_sweep(self, tmp_path):
        mapping = json.loads((CONFIG_DIR / "resilience.json").read_text())
        mapping.update({"n_users": 8, "n_entities": 6, "n_seeds": 1,
                        "xvalues": [1.0], "zvalues": [0.1, 1.0]})
        mapping["generative_model"]["user_model"][1]["poisson_compare"] = 5.0
        config = tmp_path / "exp.json"
        config.write_text(json.dumps(mapping))
        out = tmp_path / "results.csv"
        assert main(["experiment", "--config", str(config),
                     "--out", str(out)]) == 0
        with open(out) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["xvalue", "zvalue", "mean_correlation",
                           "std_correlation", "n_seeds"]
        assert len(rows) == 3


class TestExitCodes:
    def test_missing_data_file(self, tmp_path, pipeline_config):
        assert main(["run", "--data", str(tmp_path / "nowhere"),
                     "--config", str(pipeline_config),
                     "--out", str(tmp_path / "out")]) == 1

    def test_bad_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"pipeline": {
            "aggregation": ["NotAnAlgorithm", {}]}}))
        data_dir = tmp_path / "data"
        io.write_dataset(data_dir, ComparisonDataset())
        assert main(["run", "--data", str(data_dir), "--config", str(bad),
                     "--out", str(tmp_path / "out")]) == 2

    def test_invalid_json_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert main(["experiment", "--config", str(bad),
                     "--out", str(tmp_path / "r.csv")]) == 2

    def test_malformed_csv_is_data_error(self, tmp_path, pipeline_config):
        data_dir = tmp_path / "data"
        io.write_dataset(data_dir, ComparisonDataset())
        (data_dir / io.COMPARISONS_FILE).write_text("wrong,header\n")
        assert main(["run", "--data", str(data_dir), "--config",
                     str(pipeline_config), "--out",
                     str(tmp_path / "out")]) == 1


class TestIoRoundTrip:
    def test_dataset_write_then_load(self, tmp_path):
        ds, _ = generate_dataset(GenerativeConfig(n_users=10, n_entities=8,
                                                  seed=3))
        io.write_dataset(tmp_path, ds)
        loaded = io.load_dataset(tmp_path)
        assert loaded.pretrusted == ds.pretrusted
        assert sorted(loaded.vouches) == sorted(ds.vouches)
        assert loaded.comparisons == ds.comparisons

    def test_ground_truth_round_trip(self, tmp_path):
        _, truth = generate_dataset(GenerativeConfig(n_users=5, n_entities=6,
                                                     seed=4))
        path = tmp_path / "gt.csv"
        io.write_ground_truth(path, truth)
        loaded = io.read_ground_truth(path)
        for e in truth.entities():
            assert loaded[e] == truth.true_global_score(e)
