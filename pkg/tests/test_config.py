# pylint: disable=redefined-outer-name

import logging
from pathlib import Path
from typing import Generator

import pytest

from splitdenoise.config import (
    CONFIG_FILE_NAME,
    LoggingSettings,
    get_config,
    load_file,
)
from splitdenoise.logger import LOG_FILE_NAME, get_splitdenoise_logger

SAMPLE = """
[logging]
level = "debug"

[server]
port = 9000
model_seed = 4

[client]
endpoint = "http://embedder:8080"
"""


@pytest.fixture()
def config_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Generator:
    """
    Yield a directory holding a sample configuration file, named by the
    config path variable.
    """

    directory = tmp_path / "config"
    directory.mkdir()
    (directory / CONFIG_FILE_NAME).write_text(SAMPLE, encoding="utf-8")
    monkeypatch.setenv("SND_CONFIG_PATH", str(directory))
    yield directory


@pytest.fixture()
def isolated(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Generator:
    """
    Yield a working directory with no configuration file anywhere on the search path.
    """

    workdir = tmp_path / "work" / "nested"
    workdir.mkdir(parents=True)
    monkeypatch.chdir(workdir)
    monkeypatch.setenv("HOME", str(tmp_path / "home"))
    monkeypatch.delenv("SND_CONFIG_PATH", raising=False)
    yield workdir


@pytest.fixture()
def restore_logging() -> Generator:
    yield
    get_splitdenoise_logger("INFO", "stdout", "stdout")


class TestLoadFile:
    def test_config_path_variable(self, config_dir: Path) -> None:
        assert load_file(CONFIG_FILE_NAME)["server"] == {"port": 9000, "model_seed": 4}

    def test_parent_directory(self, isolated: Path) -> None:
        (isolated.parent / CONFIG_FILE_NAME).write_text(SAMPLE, encoding="utf-8")

        assert load_file(CONFIG_FILE_NAME)["client"] == {"endpoint": "http://embedder:8080"}

    def test_missing(self, isolated: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_file(CONFIG_FILE_NAME)


class TestGetConfig:
    def test_from_file(self, config_dir: Path, restore_logging: None) -> None:
        settings = get_config()

        assert settings.server.port == 9000
        assert settings.server.model_seed == 4
        assert settings.server.max_sequence_length == 512
        assert settings.client.endpoint == "http://embedder:8080"
        assert settings.logging.level == "DEBUG"

    def test_environment_wins_over_file(
        self, config_dir: Path, monkeypatch: pytest.MonkeyPatch, restore_logging: None
    ) -> None:
        monkeypatch.setenv("SND_SERVER_PORT", "9100")
        monkeypatch.setenv("SND_ENDPOINT", "http://other:1")

        settings = get_config()

        assert settings.server.port == 9100
        assert settings.client.endpoint == "http://other:1"

    def test_defaults_without_file(self, isolated: Path, restore_logging: None) -> None:
        settings = get_config()

        assert settings.server.host == "localhost"
        assert settings.server.port == 8080
        assert settings.client.timeout_seconds == 120.0
        assert settings.logging.destination_type == "stdout"

    def test_missing_file_is_a_warning(
        self,
        isolated: Path,
        caplog: pytest.LogCaptureFixture,
        monkeypatch: pytest.MonkeyPatch,
        restore_logging: None,
    ) -> None:
        monkeypatch.setattr(logging.getLogger("splitdenoise"), "propagate", True)

        with caplog.at_level(logging.WARNING, logger="splitdenoise.config"):
            get_config()

        warnings = [r for r in caplog.records if r.levelno == logging.WARNING]
        assert any(CONFIG_FILE_NAME in record.getMessage() for record in warnings)


class TestLogging:
    def test_level_names(self, restore_logging: None) -> None:
        assert LoggingSettings(level="warning").level == "WARNING"
        assert LoggingSettings(level="chatty").level == "INFO"

    def test_directory_destination(self, tmp_path: Path, restore_logging: None) -> None:
        settings = LoggingSettings(destination=str(tmp_path), level="debug")

        assert settings.destination_type == "directory"
        logging.getLogger("splitdenoise.protocol.server").debug("handled %s", "frame")
        for handler in logging.getLogger("splitdenoise").handlers:
            handler.flush()

        assert "[DEBUG]: handled frame" in (tmp_path / LOG_FILE_NAME).read_text(encoding="utf-8")

    def test_file_destination(self, tmp_path: Path, restore_logging: None) -> None:
        logfile = tmp_path / "server.log"
        logfile.touch()

        assert LoggingSettings(destination=str(logfile)).destination_type == "file"

    def test_reconfiguring_replaces_handlers(self, restore_logging: None) -> None:
        get_splitdenoise_logger("INFO", "stdout", "stdout")
        logger = get_splitdenoise_logger("ERROR", "stdout", "stdout")

        assert len(logger.handlers) == 1
        assert logger.level == logging.ERROR
        assert logging.getLogger("uvicorn.error").handlers == logger.handlers
