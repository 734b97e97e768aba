# pylint: disable=redefined-outer-name

import csv
import json
from pathlib import Path
from typing import Generator

import pytest

from splitdenoise.exceptions import ConfigError
from splitdenoise.harness.cli import build_parser, load_experiment, main

TINY = """
vocab_size = 60
dim = 8
seq_len = 6
corpus_size = 60
test_fraction = 0.25
signal_tokens = 6
encoder_heads = 2
encoder_d_kv = 4
encoder_d_ff = 16
d_ff = 16
d_kv = 4
n_head = 2
layers = 1
epochs = 1
classifier_epochs = 3
seeds = [0]
etas = [10.0]
"""


@pytest.fixture()
def config_file(tmp_path: Path) -> Generator:
    """
    Yield the path of a small experiment configuration file.
    """

    path = tmp_path / "experiment.toml"
    path.write_text(TINY, encoding="utf-8")
    yield path


def read_rows(path: Path) -> list:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


class TestParser:
    def test_grouped_subcommands(self) -> None:
        args = build_parser().parse_args(["attack", "inversion", "--eta", "2", "--eta", "inf"])

        assert args.scenario_name == "attack-inversion"
        assert args.eta == [2.0, float("inf")]

    def test_infer_endpoint(self) -> None:
        args = build_parser().parse_args(["infer", "--endpoint", "inprocess"])

        assert args.endpoint == "inprocess"

    def test_serve_overrides(self) -> None:
        args = build_parser().parse_args(["serve", "--port", "9000"])

        assert args.command == "serve"
        assert args.port == 9000


class TestLoadExperiment:
    def test_flags_override_file(self, config_file: Path) -> None:
        config = load_experiment(str(config_file), {"etas": [3.0], "seeds": None}, scenario="mi")

        assert config.etas == [3.0]
        assert config.seeds == [0]
        assert config.scenario == "mi"

    def test_file_scenario_wins_over_default(self, tmp_path: Path) -> None:
        path = tmp_path / "named.toml"
        path.write_text('scenario = "named"\n', encoding="utf-8")

        assert load_experiment(str(path), {}, scenario="mi").scenario == "named"

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            load_experiment(str(tmp_path / "absent.toml"), {})

    def test_unknown_key(self, tmp_path: Path) -> None:
        path = tmp_path / "typo.toml"
        path.write_text("etaz = [1.0]\n", encoding="utf-8")

        with pytest.raises(ConfigError):
            load_experiment(str(path), {})

    def test_malformed_file(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.toml"
        path.write_text("etas = [1.0\n", encoding="utf-8")

        with pytest.raises(ConfigError):
            load_experiment(str(path), {})


class TestMain:
    def test_mi(self, tmp_path: Path) -> None:
        output = tmp_path / "mi.csv"
        code = main(["mi", "--eta", "1", "--seed", "7", "--n", "2000", "--output", str(output)])

        assert code == 0
        rows = read_rows(output)
        assert len(rows) == 1
        assert rows[0]["scenario"] == "mi"
        assert rows[0]["method"] == "privatize"
        assert rows[0]["eta"] == "1.0"
        assert rows[0]["seed"] == "7"
        assert rows[0]["metric"] == "mi"
        assert list(json.loads(output.with_suffix(".json").read_text(encoding="utf-8"))) == ["mi"]

    def test_missing_config(self, tmp_path: Path) -> None:
        assert main(["mi", "--config", str(tmp_path / "absent.toml")]) == 1

    def test_unknown_subcommand(self) -> None:
        assert main(["teleport"]) == 1

    def test_unknown_flag(self) -> None:
        assert main(["mi", "--colour", "blue"]) == 1

    def test_invalid_eta(self, tmp_path: Path) -> None:
        assert main(["mi", "--eta", "-1", "--output", str(tmp_path / "out.csv")]) == 1

    def test_runtime_failure(self, tmp_path: Path) -> None:
        """Test that a failing scenario exits 2 and writes nothing"""

        output = tmp_path / "out.csv"

        assert main(["mi", "--eta", "inf", "--n", "100", "--output", str(output)]) == 2
        assert not output.exists()

    def test_sweep_is_byte_identical(self, tmp_path: Path, config_file: Path) -> None:
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        for output in (first, second):
            assert main(["sweep", "--config", str(config_file), "--output", str(output)]) == 0

        assert first.read_bytes() == second.read_bytes()
        assert first.with_suffix(".json").read_bytes() == second.with_suffix(".json").read_bytes()
        assert {row["method"] for row in read_rows(first)} == {"snd", "tok_emb_priv", "no_noise"}
        control = [row for row in read_rows(first) if row["method"] == "no_noise"]
        assert {row["eta"] for row in control} == {"inf"}

    def test_ablation_label(self, tmp_path: Path, config_file: Path) -> None:
        output = tmp_path / "ablate.csv"

        args = ["ablate", "clipping", "--config", str(config_file), "--output", str(output)]

        assert main(args) == 0
        assert {row["scenario"] for row in read_rows(output)} == {"ablate-clipping"}

    def test_train_then_infer_in_process(
        self, tmp_path: Path, config_file: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.chdir(tmp_path)
        trained = tmp_path / "trained.csv"
        inferred = tmp_path / "inferred.csv"

        assert main(["train-denoiser", "--config", str(config_file), "--output", str(trained)]) == 0
        assert (tmp_path / "denoisers").is_dir()
        assert (
            main(
                [
                    "infer",
                    "--config",
                    str(config_file),
                    "--endpoint",
                    "inprocess",
                    "--n",
                    "5",
                    "--output",
                    str(inferred),
                ]
            )
            == 0
        )
        metrics = {row["metric"] for row in read_rows(inferred)}
        assert metrics == {"mse", "cos", "bytes_up", "bytes_down", "wall_ms"}

    def test_infer_without_registry(
        self, tmp_path: Path, config_file: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.chdir(tmp_path)
        args = ["infer", "--config", str(config_file), "--endpoint", "inprocess"]

        assert main(args + ["--output", str(tmp_path / "out.csv")]) == 2
